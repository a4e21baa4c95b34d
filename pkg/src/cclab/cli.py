"""Command-line entry point.

Subcommands:

* ``check``     run the hypothesis checks of one claim against a config
* ``simulate``  run the dynamics and emit trajectory CSV + metrics JSON,
                or reconcile a seeded random ensemble (``--ensemble``)
* ``gen``       emit a scenario config (bundled example or seeded random)
* ``learn``     run the social-learning dynamics, emit belief/zeta CSVs
* ``report``    render the condition table plus a run summary

Exit codes: 0 success, 1 malformed input, 2 hypothesis failure, 3 divergence,
4 belief-validity violation.  ``CC_LAB_THREADS`` caps ensemble parallelism.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional

from .config import (
    ConfigError,
    Scenario,
    build_scenario,
    emit_config,
    example_config,
    generated_config,
    load_config,
)
from .dynamics import (
    DivergenceError,
    Trajectory,
    boundedness_report,
    detect_periodic_limit,
    simulate,
)
from .generate import InfeasibleError
from .learning import BeliefRangeError, learn_simulate
from .reports import (
    metrics_document,
    render_condition_table,
    render_ensemble,
    write_belief_csv,
    write_json,
    write_trajectory_csv,
    write_zeta_csv,
)
from .verifier import (
    HypothesisReport,
    check_switching,
    check_theorem_static_consensus,
    check_theorem_static_sync,
    reconcile,
    run_ensemble,
)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_HYPOTHESIS = 2
EXIT_DIVERGENCE = 3
EXIT_VALIDITY = 4


def _load(args: argparse.Namespace) -> Scenario:
    doc = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        doc["seed"] = args.seed
    if getattr(args, "horizon", None) is not None:
        doc["horizon"] = args.horizon
    return build_scenario(doc)


def _check_for(scenario: Scenario, theorem: int) -> tuple[HypothesisReport, bool]:
    sys_ = scenario.system
    if theorem in (1, 2) and sys_.is_switching:
        raise ConfigError(f"claim {theorem} applies to fixed couplings only")
    if theorem == 1:
        report = check_theorem_static_sync(
            sys_, horizon=scenario.horizon, thresholds=scenario.thresholds
        )
        return report, bool(report.sync_ok)
    if theorem == 2:
        report = check_theorem_static_consensus(sys_, thresholds=scenario.thresholds)
        return report, bool(report.consensus_ok)
    report = check_switching(
        sys_,
        window=scenario.window,
        horizon=scenario.horizon,
        thresholds=scenario.thresholds,
    )
    return report, bool(report.sync_ok if theorem == 3 else report.consensus_ok)


def _outdir(args: argparse.Namespace) -> str:
    out = args.out or "."
    os.makedirs(out, exist_ok=True)
    return out


def cmd_check(args: argparse.Namespace) -> int:
    scenario = _load(args)
    theorem = args.theorem or scenario.theorem
    report, ok = _check_for(scenario, theorem)
    print(f"config: {scenario.label}  claim: {theorem}")
    print(render_condition_table(report))
    print(f"overall: {'pass' if ok else 'FAIL'}")
    if args.out:
        write_json(
            args.out,
            {
                "label": scenario.label,
                "config_sha256": scenario.digest,
                "seed": scenario.seed,
                "theorem": theorem,
                "overall": ok,
                "report": report.to_dict(),
            },
        )
    return EXIT_OK if ok else EXIT_HYPOTHESIS


def _run_ensemble(args: argparse.Namespace) -> int:
    theorem = args.theorem
    seed = args.seed
    horizon = args.horizon
    if args.config:
        doc = load_config(args.config)
        theorem = theorem or doc.get("theorem")
        seed = seed if seed is not None else doc.get("seed")
        horizon = horizon or doc.get("horizon")
    if theorem is None:
        raise ConfigError("--theorem required for ensemble runs")
    if seed is None:
        raise ConfigError("--seed required for ensemble runs")
    summary = run_ensemble(
        theorem,
        count=args.ensemble,
        seed=seed,
        horizon=horizon,
        workers=args.workers,
    )
    print(render_ensemble(summary))
    if args.out:
        write_json(
            args.out,
            {
                "theorem": theorem,
                "seed": seed,
                "instances": summary.total,
                "counts": summary.counts,
                "errors": list(summary.exceptions),
            },
        )
    bad = summary.counts.get("FAIL", 0) > 0 or summary.exceptions
    return EXIT_HYPOTHESIS if bad else EXIT_OK


def _write_run_artifacts(
    scenario: Scenario, traj: Trajectory, outdir: str
) -> tuple[str, dict]:
    sys_ = scenario.system
    report, _ = _check_for(scenario, scenario.theorem)
    limit = None
    if sys_.signal is not None:
        limit = detect_periodic_limit(
            traj,
            sys_.clustering,
            sys_.signal.period,
            tol=scenario.thresholds.periodic,
        )
    bound = boundedness_report(sys_, traj)
    verdict = reconcile(report, sys_, traj, limit, scenario.thresholds)
    diameters = traj.diameter_series(sys_.clustering)
    doc = metrics_document(
        digest=scenario.digest,
        seed=scenario.seed,
        label=scenario.label,
        traj=traj,
        diameters=diameters,
        report=report,
        verdict=verdict,
        limit=limit,
        bound=bound,
    )
    write_trajectory_csv(os.path.join(outdir, "trajectory.csv"), traj)
    write_json(os.path.join(outdir, "metrics.json"), doc)
    return verdict.status, doc


def cmd_simulate(args: argparse.Namespace) -> int:
    if args.ensemble:
        return _run_ensemble(args)
    if not args.config:
        raise ConfigError("--config required (or use --ensemble)")
    scenario = _load(args)
    outdir = _outdir(args)
    try:
        traj = simulate(scenario.system, scenario.x0, scenario.horizon)
    except DivergenceError as exc:
        if exc.partial is not None and len(exc.partial) > 1:
            write_trajectory_csv(
                os.path.join(outdir, "trajectory.csv"), Trajectory(exc.partial)
            )
        write_json(
            os.path.join(outdir, "metrics.json"),
            {
                "label": scenario.label,
                "config_sha256": scenario.digest,
                "seed": scenario.seed,
                "diverged_at": exc.t,
                "note": str(exc),
            },
        )
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    status, doc = _write_run_artifacts(scenario, traj, outdir)
    rec = doc["reconcile"]
    print(
        f"{scenario.label}: verdict {status} (predicted {rec['predicted']});"
        f" final intra diameter {rec['final_intra_diameter']:.3e}"
    )
    return EXIT_OK


def cmd_gen(args: argparse.Namespace) -> int:
    if args.paper_example:
        doc = example_config(args.paper_example)
        if args.seed is not None:
            doc["seed"] = args.seed
    else:
        if not args.sizes:
            raise ConfigError("--sizes required unless --paper-example is given")
        if args.seed is None:
            raise ConfigError("--seed required for random generation")
        sizes = tuple(int(s) for s in args.sizes.split(","))
        doc = generated_config(
            sizes,
            seed=args.seed,
            m=args.switching,
            window=args.window,
            entry_floor=args.entry_floor,
            density=args.density,
            mode=args.mode,
            horizon=args.horizon,
        )
    text = emit_config(doc, args.out)
    if args.out:
        print(f"wrote {args.out}")
    else:
        print(text, end="")
    return EXIT_OK


def cmd_learn(args: argparse.Namespace) -> int:
    scenario = _load(args)
    if scenario.learning is None:
        raise ConfigError("config has no learning section")
    setup = scenario.learning
    sys_ = scenario.system
    outdir = _outdir(args)
    run = learn_simulate(
        sys_.coupling,
        sys_.clustering,
        setup.flags,
        sys_.signal,
        setup.profile0,
        scenario.horizon,
        slack=setup.slack,
    )
    p, q = setup.zeta_clusters
    zeta = run.zeta_series(p, q, setup.zeta_state)
    write_belief_csv(os.path.join(outdir, "beliefs.csv"), run)
    write_zeta_csv(os.path.join(outdir, "zeta.csv"), zeta)
    write_json(
        os.path.join(outdir, "validity.json"),
        {
            "label": scenario.label,
            "config_sha256": scenario.digest,
            "seed": scenario.seed,
            "strength": setup.flags.strength,
            "zeta_clusters": [p + 1, q + 1],
            "zeta_state": run.labels[setup.zeta_state],
            "final_zeta": float(zeta[-1]),
            "belief_sum_drift": run.sum_drift(),
            "validity": run.validity.to_dict(),
        },
    )
    print(
        f"{scenario.label}: final zeta {zeta[-1]:.6g}, belief sums within"
        f" {run.sum_drift():.3e} of 1, range "
        + ("clean" if run.validity.ok else f"{run.validity.count} excursions")
    )
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    scenario = _load(args)
    theorem = args.theorem or scenario.theorem
    report, ok = _check_for(scenario, theorem)
    print(f"config: {scenario.label}  claim: {theorem}")
    print(render_condition_table(report))
    print(f"overall: {'pass' if ok else 'FAIL'}")
    traj = simulate(scenario.system, scenario.x0, scenario.horizon)
    sys_ = scenario.system
    limit = None
    if sys_.signal is not None:
        limit = detect_periodic_limit(
            traj, sys_.clustering, sys_.signal.period, tol=scenario.thresholds.periodic
        )
    bound = boundedness_report(sys_, traj)
    verdict = reconcile(report, sys_, traj, limit, scenario.thresholds)
    print(f"verdict: {verdict.status}")
    print(
        f"final intra diameter: {verdict.final_diameter:.6e}"
        f" (threshold {verdict.sync_threshold:.3e})"
    )
    if verdict.min_separation is not None:
        print(
            f"smallest cluster separation: {verdict.min_separation:.6e}"
            f" (threshold {verdict.separation_threshold:.1e})"
        )
    if bound.applicable and bound.bound is not None:
        print(f"peak norm {bound.max_norm:.6g} within bound {bound.bound:.6g}")
    else:
        print(f"peak norm {bound.max_norm:.6g} ({bound.note})")
    if args.out:
        outdir = _outdir(args)
        doc = metrics_document(
            digest=scenario.digest,
            seed=scenario.seed,
            label=scenario.label,
            traj=traj,
            diameters=traj.diameter_series(sys_.clustering),
            report=report,
            verdict=verdict,
            limit=limit,
            bound=bound,
        )
        write_json(os.path.join(outdir, "metrics.json"), doc)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cclab",
        description="Cluster-consensus simulation and condition checking.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser, out_help: str):
        p.add_argument("--config", help="scenario config (JSON)")
        p.add_argument("--out", help=out_help)
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--horizon", type=int, help="override the horizon")
        p.add_argument(
            "--theorem",
            type=int,
            choices=(1, 2, 3, 4),
            help="claim to check: 1 fixed sync, 2 fixed consensus,"
            " 3 switching sync, 4 switching consensus",
        )

    p = sub.add_parser("check", help="verify one claim's hypotheses")
    common(p, "write the JSON report here")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("simulate", help="run the dynamics, emit CSV/JSON")
    common(p, "output directory (ensemble: JSON file)")
    p.add_argument(
        "--ensemble",
        type=int,
        metavar="N",
        help="reconcile N seeded random instances instead of one config run",
    )
    p.add_argument("--workers", type=int, help="ensemble worker threads")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("gen", help="emit a scenario config")
    p.add_argument("--paper-example", choices=("A", "B"), dest="paper_example")
    p.add_argument("--sizes", help="comma-separated cluster sizes, e.g. 3,3,3")
    p.add_argument("--seed", type=int)
    p.add_argument(
        "--switching", type=int, default=1, metavar="M", help="schedule length"
    )
    p.add_argument("--window", type=int, help="union window (default M)")
    p.add_argument("--entry-floor", type=float, default=0.05, dest="entry_floor")
    p.add_argument("--density", type=float, default=0.3)
    p.add_argument("--mode", choices=("random", "equal"), default="random")
    p.add_argument("--horizon", type=int)
    p.add_argument("--out", help="config file to write (default: stdout)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("learn", help="run the social-learning dynamics")
    common(p, "output directory")
    p.set_defaults(func=cmd_learn)

    p = sub.add_parser("report", help="condition table plus run summary")
    common(p, "output directory for metrics.json")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, InfeasibleError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except BeliefRangeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDITY


if __name__ == "__main__":
    sys.exit(main())
