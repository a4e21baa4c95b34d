"""Scenario configs: JSON schema, loading, and materialization.

A config is one self-contained JSON document: clustering, topology (inline
matrices or a seeded generator recipe), the driving signal, optional
social-learning extension, horizon, seed, thresholds.  Loading validates
against the schema, materializes any generator recipes, and returns a bundle
ready for the simulation and checking layers.  Vertices and cluster indices
are 0-based inside configs; only rendered reports use 1-based labels.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Optional

import jsonschema
import numpy as np

from .dynamics import System
from .generate import (
    EXAMPLE_LEARNING_STRENGTH,
    EXAMPLE_WINDOW,
    GeneratorSpec,
    example_alphas,
    example_clustering,
    example_graphs_switching,
    example_graph_static,
    example_learning_flags,
    example_matrix_static,
    example_schedule_switching,
    example_signal,
    gen_common_influence_matrix,
    gen_graph_with_cluster_trees,
    gen_switching_schedule,
    _streams,
)
from .graph import Clustering, DirectedGraph
from .learning import DEFAULT_SLACK, BeliefProfile, CulturalFlags
from .signals import ClusterOffsets, PeriodicInput
from .stochastic import MatrixSchedule, validate
from .verifier import Thresholds

CONFIG_VERSION = 1

_NUMBER_MATRIX = {
    "type": "array",
    "minItems": 1,
    "items": {"type": "array", "minItems": 1, "items": {"type": "number"}},
}

_ADJACENCY = {
    "type": "array",
    "items": {"type": "array", "items": {"type": "integer", "minimum": 0}},
}

SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "additionalProperties": False,
    "required": ["version", "clustering", "topology"],
    "properties": {
        "version": {"const": CONFIG_VERSION},
        "label": {"type": "string"},
        "seed": {"type": "integer", "minimum": 0},
        "horizon": {"type": "integer", "minimum": 1},
        "window": {"type": "integer", "minimum": 1},
        "theorem": {"enum": [1, 2, 3, 4]},
        "clustering": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "sizes": {
                    "type": "array",
                    "minItems": 1,
                    "items": {"type": "integer", "minimum": 1},
                },
                "clusters": {
                    "type": "array",
                    "minItems": 1,
                    "items": {
                        "type": "array",
                        "minItems": 1,
                        "items": {"type": "integer", "minimum": 0},
                    },
                },
            },
            "oneOf": [{"required": ["sizes"]}, {"required": ["clusters"]}],
        },
        "topology": {
            "type": "object",
            "required": ["type"],
            "oneOf": [
                {
                    "properties": {
                        "type": {"const": "fixed"},
                        "matrix": _NUMBER_MATRIX,
                        "graph": _ADJACENCY,
                    },
                    "required": ["type", "matrix"],
                    "additionalProperties": False,
                },
                {
                    "properties": {
                        "type": {"const": "switching"},
                        "matrices": {
                            "type": "array",
                            "minItems": 1,
                            "items": _NUMBER_MATRIX,
                        },
                        "floor": {"type": "number", "exclusiveMinimum": 0},
                        "graphs": {"type": "array", "items": _ADJACENCY},
                    },
                    "required": ["type", "matrices"],
                    "additionalProperties": False,
                },
                {
                    "properties": {
                        "type": {"const": "generator"},
                        "entry_floor": {"type": "number", "exclusiveMinimum": 0},
                        "density": {"type": "number", "minimum": 0, "maximum": 1},
                        "quotient": _NUMBER_MATRIX,
                        "mode": {"enum": ["random", "equal"]},
                    },
                    "required": ["type"],
                    "additionalProperties": False,
                },
                {
                    "properties": {
                        "type": {"const": "switching-generator"},
                        "m": {"type": "integer", "minimum": 2},
                        "window": {"type": "integer", "minimum": 1},
                        "entry_floor": {"type": "number", "exclusiveMinimum": 0},
                        "density": {"type": "number", "minimum": 0, "maximum": 1},
                        "quotient": _NUMBER_MATRIX,
                        "mode": {"enum": ["random", "equal"]},
                    },
                    "required": ["type", "m"],
                    "additionalProperties": False,
                },
            ],
        },
        "signal": {
            "type": "object",
            "additionalProperties": False,
            "required": ["period", "free_values"],
            "properties": {
                "period": {"type": "integer", "minimum": 1},
                "free_values": {"type": "array", "items": {"type": "number"}},
                "alphas": {
                    "type": "array",
                    "minItems": 1,
                    "items": {"type": "number"},
                },
                "strength": {"type": "number"},
            },
        },
        "initial_state": {
            "oneOf": [
                {"const": "random"},
                {"type": "array", "minItems": 1, "items": {"type": "number"}},
            ]
        },
        "learning": {
            "type": "object",
            "additionalProperties": False,
            "required": ["states", "flags"],
            "properties": {
                "states": {"type": "integer", "minimum": 2},
                "flags": _NUMBER_MATRIX,
                "strength": {"type": "number", "minimum": 0},
                "slack": {"type": "number", "exclusiveMinimum": 0},
                "initial": {
                    "oneOf": [
                        {"enum": ["uniform", "random"]},
                        _NUMBER_MATRIX,
                    ]
                },
                "zeta": {
                    "type": "object",
                    "additionalProperties": False,
                    "properties": {
                        "clusters": {
                            "type": "array",
                            "minItems": 2,
                            "maxItems": 2,
                            "items": {"type": "integer", "minimum": 0},
                        },
                        "state": {"type": "integer", "minimum": 0},
                    },
                },
            },
        },
        "thresholds": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "sync_scale": {"type": "number", "exclusiveMinimum": 0},
                "separation": {"type": "number", "exclusiveMinimum": 0},
                "periodic": {"type": "number", "exclusiveMinimum": 0},
                "common_influence": {"type": "number", "exclusiveMinimum": 0},
                "zero": {"type": "number", "minimum": 0},
            },
        },
    },
}


class ConfigError(ValueError):
    """Malformed or inconsistent scenario config."""


@dataclass(frozen=True)
class LearningSetup:
    flags: CulturalFlags
    profile0: BeliefProfile
    slack: float
    zeta_clusters: tuple[int, int]
    zeta_state: int


@dataclass(frozen=True)
class Scenario:
    """A fully materialized config: everything the commands need to run."""

    system: System
    x0: np.ndarray
    horizon: int
    window: int
    theorem: int
    seed: Optional[int]
    label: str
    learning: Optional[LearningSetup]
    thresholds: Thresholds
    raw: dict
    digest: str


def config_digest(doc: dict) -> str:
    canon = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def load_config(path: str) -> dict:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc


def emit_config(doc: dict, path: Optional[str] = None) -> str:
    text = json.dumps(doc, indent=2, sort_keys=True) + "\n"
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def _build_clustering(section: dict) -> Clustering:
    if "sizes" in section:
        return Clustering.from_sizes(tuple(section["sizes"]))
    clusters = tuple(tuple(sorted(c)) for c in section["clusters"])
    n = max(max(c) for c in clusters) + 1
    return Clustering(n, clusters)


def _require_seed(doc: dict, why: str) -> int:
    if "seed" not in doc:
        raise ConfigError(f"seed required: {why}")
    return int(doc["seed"])


def _build_topology(doc: dict, clustering: Clustering):
    top = doc["topology"]
    kind = top["type"]
    if kind == "fixed":
        mat = validate(np.array(top["matrix"], dtype=float))
        if mat.shape[0] != clustering.n:
            raise ConfigError("matrix size disagrees with the clustering")
        return mat
    if kind == "switching":
        mats = tuple(validate(np.array(m, dtype=float)) for m in top["matrices"])
        if mats[0].shape[0] != clustering.n:
            raise ConfigError("matrix size disagrees with the clustering")
        return MatrixSchedule(mats, floor=top.get("floor"))
    # generator recipes need the contiguous sizes layout
    sizes = clustering.sizes
    if clustering != Clustering.from_sizes(sizes):
        raise ConfigError(
            "generator topologies require clustering given as contiguous sizes"
        )
    seed = _require_seed(doc, "topology is generated")
    quotient = (
        np.array(top["quotient"], dtype=float) if "quotient" in top else None
    )
    spec = GeneratorSpec(
        cluster_sizes=sizes,
        seed=seed,
        quotient=quotient,
        entry_floor=top.get("entry_floor", 0.05),
        density=top.get("density", 0.3),
    )
    mode = top.get("mode", "random")
    if kind == "generator":
        return gen_common_influence_matrix(
            spec, gen_graph_with_cluster_trees(spec), mode=mode
        )
    m = top["m"]
    return gen_switching_schedule(spec, m=m, window=top.get("window", m), mode=mode)


def _build_offsets(
    doc: dict, clustering: Clustering
) -> tuple[Optional[ClusterOffsets], Optional[PeriodicInput]]:
    if "signal" not in doc:
        return None, None
    sec = doc["signal"]
    sig = PeriodicInput(sec["period"], tuple(sec["free_values"]))
    if "alphas" not in sec:
        return None, sig
    strength = sec.get("strength", 1.0)
    if strength == 0.0:
        raise ConfigError(
            "zero signal strength collapses all cluster gains; drop 'alphas'"
            " for an undriven run"
        )
    alphas = tuple(strength * a for a in sec["alphas"])
    if len(alphas) != clustering.k:
        raise ConfigError("one alpha per cluster required")
    try:
        return ClusterOffsets(clustering, alphas), sig
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _build_learning(
    doc: dict, clustering: Clustering, rng: Optional[np.random.Generator]
) -> Optional[LearningSetup]:
    if "learning" not in doc:
        return None
    sec = doc["learning"]
    m = sec["states"]
    flags_tab = np.array(sec["flags"], dtype=float)
    if flags_tab.shape != (clustering.k, m):
        raise ConfigError("flag table must be clusters x states")
    try:
        flags = CulturalFlags(flags_tab, strength=sec.get("strength", EXAMPLE_LEARNING_STRENGTH))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    initial = sec.get("initial", "random")
    if initial == "uniform":
        profile0 = BeliefProfile.uniform(clustering.n, m)
    elif initial == "random":
        if rng is None:
            raise ConfigError("seed required: learning initial beliefs are random")
        profile0 = BeliefProfile.random(rng, clustering.n, m)
    else:
        arr = np.array(initial, dtype=float)
        if arr.shape != (clustering.n, m):
            raise ConfigError("initial beliefs must be agents x states")
        try:
            profile0 = BeliefProfile(arr)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    zeta = sec.get("zeta", {})
    default_pair = (1, 2) if clustering.k >= 3 else (0, min(1, clustering.k - 1))
    pair = tuple(zeta.get("clusters", default_pair))
    state = zeta.get("state", 0)
    if pair[0] == pair[1] or max(pair) >= clustering.k:
        raise ConfigError("zeta clusters must be two distinct cluster indices")
    if state >= m:
        raise ConfigError("zeta state out of range")
    return LearningSetup(
        flags=flags,
        profile0=profile0,
        slack=sec.get("slack", DEFAULT_SLACK),
        zeta_clusters=(pair[0], pair[1]),
        zeta_state=state,
    )


def build_scenario(doc: dict) -> Scenario:
    """Validate a config document and materialize every component."""
    try:
        jsonschema.validate(doc, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "(root)"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from exc

    clustering = _build_clustering(doc["clustering"])
    try:
        coupling = _build_topology(doc, clustering)
    except (ValueError, RuntimeError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"topology: {exc}") from exc
    try:
        offsets, sig = _build_offsets(doc, clustering)
        system = System(
            coupling=coupling, clustering=clustering, offsets=offsets, signal=sig
        )
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc

    seed = doc.get("seed")
    rng = None
    if seed is not None:
        rng = np.random.default_rng(_streams(int(seed))["state"])

    init = doc.get("initial_state", "random")
    if init == "random":
        if rng is None:
            raise ConfigError("seed required: initial state is random")
        x0 = rng.uniform(-1.0, 1.0, size=clustering.n)
    else:
        x0 = np.array(init, dtype=float)
        if x0.shape != (clustering.n,):
            raise ConfigError("initial state length disagrees with the clustering")

    learning = _build_learning(doc, clustering, rng)

    switching = isinstance(coupling, MatrixSchedule)
    horizon = doc.get("horizon", 5000 if switching else 2000)
    if switching:
        window = doc.get("window", doc["topology"].get("window", coupling.period))
    else:
        window = doc.get("window", 1)
    theorem = doc.get(
        "theorem",
        (4 if sig is not None else 3) if switching else (2 if sig is not None else 1),
    )

    thresholds = Thresholds(**doc.get("thresholds", {}))

    return Scenario(
        system=system,
        x0=x0,
        horizon=horizon,
        window=window,
        theorem=theorem,
        seed=seed,
        label=doc.get("label", "scenario"),
        learning=learning,
        thresholds=thresholds,
        raw=doc,
        digest=config_digest(doc),
    )


def load_scenario(path: str) -> Scenario:
    return build_scenario(load_config(path))


# ---------------------------------------------------------------------------
# Emitters used by the gen command.


def _adjacency(g: DirectedGraph) -> list[list[int]]:
    out: list[list[int]] = [[] for _ in range(g.n)]
    for src, dst in sorted(g.edges):
        out[src].append(dst)
    return out


def _matrix_doc(a: np.ndarray) -> list[list[float]]:
    return [[float(v) for v in row] for row in a]


def example_config(which: str) -> dict:
    """Self-contained config for the bundled fixed or switching example."""
    if which not in ("A", "B"):
        raise ConfigError("example must be 'A' or 'B'")
    signal = {
        "period": example_signal().period,
        "free_values": list(example_signal().free_values),
        "alphas": list(example_alphas()),
    }
    learning = {
        "states": 2,
        "flags": _matrix_doc(example_learning_flags()),
        "strength": EXAMPLE_LEARNING_STRENGTH,
    }
    base = {
        "version": CONFIG_VERSION,
        "clustering": {"sizes": list(example_clustering().sizes)},
        "signal": signal,
        "learning": learning,
        "initial_state": "random",
    }
    if which == "A":
        base.update(
            label="paper-example-A",
            seed=2024,
            horizon=2000,
            theorem=2,
            topology={
                "type": "fixed",
                "matrix": _matrix_doc(example_matrix_static()),
                "graph": _adjacency(example_graph_static()),
            },
        )
    else:
        schedule = example_schedule_switching()
        base.update(
            label="paper-example-B",
            seed=2024,
            horizon=5000,
            theorem=4,
            window=EXAMPLE_WINDOW,
            topology={
                "type": "switching",
                "matrices": [_matrix_doc(m) for m in schedule.matrices],
                "floor": schedule.floor,
                "graphs": [_adjacency(g) for g in example_graphs_switching()],
            },
        )
    return base


def generated_config(
    sizes: tuple[int, ...],
    seed: int,
    m: int = 1,
    window: Optional[int] = None,
    entry_floor: float = 0.05,
    density: float = 0.3,
    mode: str = "random",
    horizon: Optional[int] = None,
) -> dict:
    """Materialize a seeded random instance and wrap it as a config.

    The emitted document inlines the realized matrices (plus their support
    graphs) so it is reproducible without re-running the generator.
    """
    spec = GeneratorSpec(
        cluster_sizes=tuple(sizes), seed=seed, entry_floor=entry_floor, density=density
    )
    k = len(spec.cluster_sizes)
    if k == 1:
        alphas = [1.0]
    else:
        alphas = [round(1.0 - 1.5 * p / (k - 1), 9) for p in range(k)]
    doc = {
        "version": CONFIG_VERSION,
        "label": f"generated-{'switching' if m > 1 else 'fixed'}-n{spec.n}",
        "seed": seed,
        "clustering": {"sizes": list(spec.cluster_sizes)},
        "signal": {"period": 2, "free_values": [-1.0], "alphas": alphas},
        "initial_state": "random",
    }
    if m > 1:
        window = m if window is None else window
        schedule = gen_switching_schedule(spec, m=m, window=window, mode=mode)
        doc["window"] = window
        doc["horizon"] = horizon if horizon is not None else 5000
        doc["theorem"] = 4
        doc["topology"] = {
            "type": "switching",
            "matrices": [_matrix_doc(mat) for mat in schedule.matrices],
            "floor": schedule.floor,
        }
    else:
        g = gen_graph_with_cluster_trees(spec)
        mat = gen_common_influence_matrix(spec, g, mode=mode)
        doc["horizon"] = horizon if horizon is not None else 2000
        doc["theorem"] = 2
        doc["topology"] = {
            "type": "fixed",
            "matrix": _matrix_doc(mat),
            "graph": _adjacency(g),
        }
    return doc
