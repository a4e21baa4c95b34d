"""End-to-end command behavior: exit codes, artifacts, determinism."""

import json

import numpy as np
import pytest

from cclab.cli import main
from cclab.config import emit_config, example_config


@pytest.fixture
def config_a(tmp_path):
    path = tmp_path / "a.json"
    emit_config(example_config("A"), str(path))
    return str(path)


@pytest.fixture
def config_b(tmp_path):
    path = tmp_path / "b.json"
    emit_config(example_config("B"), str(path))
    return str(path)


def test_check_passes_on_example_a(config_a, capsys):
    assert main(["check", "--config", config_a]) == 0
    out = capsys.readouterr().out
    assert "claim: 2" in out
    assert "overall: pass" in out
    assert "cluster-spanning-trees" in out


def test_check_passes_on_example_b(config_b, capsys):
    assert main(["check", "--config", config_b]) == 0
    out = capsys.readouterr().out
    assert "window-union-spanning-trees" in out
    assert main(["check", "--config", config_b, "--theorem", "3"]) == 0


def test_check_writes_a_json_report(config_a, tmp_path):
    out = tmp_path / "report.json"
    assert main(["check", "--config", config_a, "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["overall"] is True
    assert doc["theorem"] == 2
    assert doc["report"]["predicted"] == "cluster-consensus"
    assert len(doc["config_sha256"]) == 64


def test_check_fails_when_hypotheses_fail(tmp_path, capsys):
    doc = {
        "version": 1,
        "label": "isolated",
        "clustering": {"sizes": [3, 3, 3]},
        "topology": {"type": "fixed", "matrix": np.eye(9).tolist()},
        "initial_state": [0.0] * 9,
    }
    path = tmp_path / "iso.json"
    emit_config(doc, str(path))
    assert main(["check", "--config", str(path)]) == 2
    assert "FAIL" in capsys.readouterr().out


def test_static_claims_reject_switching_configs(config_b):
    assert main(["check", "--config", config_b, "--theorem", "2"]) == 1


def test_simulate_writes_deterministic_artifacts(config_a, tmp_path, capsys):
    d1 = tmp_path / "run1"
    d2 = tmp_path / "run2"
    assert main(["simulate", "--config", config_a, "--out", str(d1)]) == 0
    assert main(["simulate", "--config", config_a, "--out", str(d2)]) == 0
    assert "verdict PASS" in capsys.readouterr().out
    t1 = (d1 / "trajectory.csv").read_bytes()
    t2 = (d2 / "trajectory.csv").read_bytes()
    assert t1 == t2
    assert (d1 / "metrics.json").read_bytes() == (d2 / "metrics.json").read_bytes()
    header = t1.decode().splitlines()[0]
    assert header == "t," + ",".join(f"x_{i}" for i in range(1, 10))
    assert len(t1.decode().splitlines()) == 2002  # header + 2001 states


def test_simulate_metrics_content(config_a, tmp_path):
    d = tmp_path / "run"
    main(["simulate", "--config", config_a, "--out", str(d)])
    doc = json.loads((d / "metrics.json").read_text())
    assert doc["label"] == "paper-example-A"
    assert doc["norms"] == {
        "matrix": "l1-row-difference",
        "state": "max-abs-difference",
    }
    assert doc["final_intra_diameter"] < 1e-8
    assert doc["reconcile"]["status"] == "PASS"
    assert doc["periodic_limit"]["period"] == 2
    assert doc["periodic_limit"]["residual"] < 1e-8
    sep = np.array(doc["separation_matrix"])
    assert sep[1, 2] > 1e-3
    assert doc["bound_report"]["applicable"] is True
    assert doc["max_norm"] <= doc["bound_report"]["bound"]
    assert len(doc["intra_diameter_series"]) == doc["horizon"] + 1


def test_simulate_seed_override_changes_the_run(config_a, tmp_path):
    d1 = tmp_path / "r1"
    d2 = tmp_path / "r2"
    main(["simulate", "--config", config_a, "--out", str(d1)])
    main(["simulate", "--config", config_a, "--out", str(d2), "--seed", "77"])
    assert (d1 / "trajectory.csv").read_bytes() != (d2 / "trajectory.csv").read_bytes()


def test_simulate_switching_example(config_b, tmp_path):
    d = tmp_path / "sw"
    assert main(["simulate", "--config", config_b, "--out", str(d)]) == 0
    doc = json.loads((d / "metrics.json").read_text())
    assert doc["final_intra_diameter"] < 1e-8
    assert doc["reconcile"]["status"] == "PASS"
    assert doc["bound_report"]["applicable"] is False


@pytest.mark.filterwarnings("ignore:overflow encountered")
def test_simulate_reports_divergence(tmp_path, capsys):
    doc = example_config("A")
    del doc["learning"]
    doc["signal"] = {
        "period": 3,
        "free_values": [-2.0, 1.0],
        "alphas": [1.0, 0.5, -0.5],
        "strength": 1e308,
    }
    path = tmp_path / "hot.json"
    emit_config(doc, str(path))
    d = tmp_path / "out"
    assert main(["simulate", "--config", str(path), "--out", str(d)]) == 3
    assert "non-finite" in capsys.readouterr().err
    metrics = json.loads((d / "metrics.json").read_text())
    assert metrics["diverged_at"] == 1
    rows = (d / "trajectory.csv").read_text().splitlines()
    assert len(rows) == 3  # header + the finite prefix x(0), x(1)


def test_simulate_requires_a_config_or_ensemble(capsys):
    assert main(["simulate"]) == 1
    assert "config" in capsys.readouterr().err


def test_ensemble_mode(tmp_path, capsys):
    out = tmp_path / "ens.json"
    code = main(
        [
            "simulate", "--ensemble", "6", "--theorem", "2", "--seed", "11",
            "--workers", "2", "--out", str(out),
        ]
    )
    assert code == 0
    assert "instances: 6" in capsys.readouterr().out
    doc = json.loads(out.read_text())
    assert doc["instances"] == 6
    assert doc["counts"].get("PASS", 0) == 6
    assert doc["errors"] == []


def test_ensemble_requires_theorem_and_seed(capsys):
    assert main(["simulate", "--ensemble", "2", "--seed", "1"]) == 1
    assert main(["simulate", "--ensemble", "2", "--theorem", "1"]) == 1
    capsys.readouterr()


def test_gen_paper_example_round_trips(tmp_path, capsys):
    path = tmp_path / "a.json"
    assert main(["gen", "--paper-example", "A", "--out", str(path)]) == 0
    assert main(["check", "--config", str(path)]) == 0
    capsys.readouterr()
    doc = json.loads(path.read_text())
    assert doc["label"] == "paper-example-A"


def test_gen_prints_to_stdout_without_out(capsys):
    assert main(["gen", "--paper-example", "B"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["topology"]["type"] == "switching"


def test_gen_random_fixed_and_switching(tmp_path, capsys):
    fixed = tmp_path / "f.json"
    assert main(["gen", "--sizes", "3,2", "--seed", "7", "--out", str(fixed)]) == 0
    assert main(["check", "--config", str(fixed)]) == 0
    sw = tmp_path / "s.json"
    assert (
        main(
            [
                "gen", "--sizes", "2,2", "--seed", "3", "--switching", "2",
                "--window", "2", "--out", str(sw),
            ]
        )
        == 0
    )
    assert main(["check", "--config", str(sw)]) == 0
    capsys.readouterr()


def test_gen_argument_errors(capsys):
    assert main(["gen"]) == 1
    assert main(["gen", "--sizes", "2,2"]) == 1  # no seed
    capsys.readouterr()


def test_gen_infeasible_request_is_an_input_error(tmp_path, capsys):
    # singleton-only clusterings leave no in-cluster tree edges to withhold
    code = main(["gen", "--sizes", "1,1", "--seed", "5", "--switching", "2"])
    assert code == 1
    assert "tree edges" in capsys.readouterr().err


def test_learn_emits_beliefs_zeta_and_validity(config_a, tmp_path, capsys):
    d = tmp_path / "learn"
    assert main(["learn", "--config", config_a, "--out", str(d)]) == 0
    out = capsys.readouterr().out
    assert "final zeta" in out
    beliefs = (d / "beliefs.csv").read_text().splitlines()
    assert beliefs[0] == "t,agent,state,belief"
    assert beliefs[1].startswith("0,1,theta_1,")
    assert len(beliefs) == 1 + 2001 * 9 * 2
    zeta = (d / "zeta.csv").read_text().splitlines()
    assert zeta[0] == "t,zeta"
    assert len(zeta) == 2002
    assert float(zeta[-1].split(",")[1]) > 1e-3
    validity = json.loads((d / "validity.json").read_text())
    assert validity["validity"]["ok"] is True
    assert validity["zeta_clusters"] == [2, 3]
    assert validity["zeta_state"] == "theta_1"
    assert abs(validity["belief_sum_drift"]) <= 1e-12


def test_learn_is_deterministic(config_a, tmp_path):
    d1 = tmp_path / "l1"
    d2 = tmp_path / "l2"
    main(["learn", "--config", config_a, "--out", str(d1)])
    main(["learn", "--config", config_a, "--out", str(d2)])
    assert (d1 / "beliefs.csv").read_bytes() == (d2 / "beliefs.csv").read_bytes()
    assert (d1 / "zeta.csv").read_bytes() == (d2 / "zeta.csv").read_bytes()


def test_learn_range_violation_exit_code(tmp_path, capsys):
    doc = example_config("A")
    doc["learning"]["strength"] = 5.0
    path = tmp_path / "hot.json"
    emit_config(doc, str(path))
    assert main(["learn", "--config", str(path), "--out", str(tmp_path / "o")]) == 4
    assert "reduce the influence strength" in capsys.readouterr().err


def test_learn_without_learning_section(tmp_path, capsys):
    doc = example_config("A")
    del doc["learning"]
    path = tmp_path / "plain.json"
    emit_config(doc, str(path))
    assert main(["learn", "--config", str(path)]) == 1
    assert "learning" in capsys.readouterr().err


def test_report_summarizes_the_run(config_a, tmp_path, capsys):
    d = tmp_path / "rep"
    assert main(["report", "--config", config_a, "--out", str(d)]) == 0
    out = capsys.readouterr().out
    assert "verdict: PASS" in out
    assert "final intra diameter" in out
    assert "smallest cluster separation" in out
    assert "within bound" in out
    assert (d / "metrics.json").exists()


def test_bad_config_is_an_input_error(tmp_path, capsys):
    path = tmp_path / "broken.json"
    path.write_text('{"version": 1')
    assert main(["check", "--config", str(path)]) == 1
    assert "error:" in capsys.readouterr().err
    assert main(["check", "--config", str(tmp_path / "absent.json")]) == 1
    capsys.readouterr()


def test_unknown_subcommand_is_a_usage_error():
    with pytest.raises(SystemExit) as info:
        main(["frobnicate"])
    assert info.value.code == 2
