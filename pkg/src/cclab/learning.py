"""Simplified non-Bayesian social learning over a clustered network.

Each agent carries a belief vector over a finite state set.  For every state
the update is the plain driven averaging step with per-cluster gain
``strength * sigma_k(state)``: neighbors are averaged, then a small periodic
cultural push is added.  The push rows sum to zero across states, so each
agent's beliefs keep summing to one; nothing projects them back into [0, 1],
which is why runs monitor the range.  Excursions inside ``slack`` are logged,
excursions beyond it abort with an error naming the strength.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .dynamics import DivergenceError, Trajectory
from .graph import Clustering
from .signals import Signal, eval_u
from .stochastic import MatrixSchedule

DEFAULT_SLACK = 0.1
_LOG_CAP = 64


class BeliefRangeError(RuntimeError):
    """A belief left [-slack, 1 + slack]; the influence strength is too large."""

    def __init__(self, t: int, agent: int, state: int, value: float, strength: float):
        self.t = t
        self.agent = agent
        self.state = state
        self.value = value
        self.strength = strength
        super().__init__(
            f"belief {value:.6g} of agent {agent + 1}, state {state + 1} left the"
            f" admissible range at step {t}; reduce the influence strength"
            f" c={strength:.6g}"
        )


def _default_labels(m: int) -> tuple[str, ...]:
    return tuple(f"theta_{s + 1}" for s in range(m))


@dataclass(frozen=True)
class BeliefProfile:
    """Row ``i`` is agent ``i``'s probability vector over the states."""

    beliefs: np.ndarray
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        b = np.array(self.beliefs, dtype=float)
        if b.ndim != 2 or b.size == 0:
            raise ValueError("beliefs must be a nonempty agents x states matrix")
        if not np.isfinite(b).all():
            raise ValueError("beliefs must be finite")
        drift = np.abs(b.sum(axis=1) - 1.0).max()
        if drift > 1e-9:
            raise ValueError(f"agent belief sums deviate from 1 by {drift:.3e}")
        b.setflags(write=False)
        object.__setattr__(self, "beliefs", b)
        labels = tuple(self.labels) or _default_labels(b.shape[1])
        if len(labels) != b.shape[1]:
            raise ValueError("one label per state required")
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.beliefs.shape[0]

    @property
    def m(self) -> int:
        return self.beliefs.shape[1]

    @classmethod
    def uniform(cls, n: int, m: int) -> "BeliefProfile":
        return cls(np.full((n, m), 1.0 / m))

    @classmethod
    def random(cls, rng: np.random.Generator, n: int, m: int) -> "BeliefProfile":
        return cls(rng.dirichlet(np.ones(m), size=n))


@dataclass(frozen=True)
class CulturalFlags:
    """Per-cluster push directions ``table[k, state]`` with zero row sums."""

    table: np.ndarray
    strength: float = 0.01

    def __post_init__(self):
        t = np.array(self.table, dtype=float)
        if t.ndim != 2 or t.size == 0:
            raise ValueError("flag table must be a nonempty clusters x states matrix")
        if not np.isfinite(t).all():
            raise ValueError("flags must be finite")
        worst = np.abs(t.sum(axis=1)).max()
        if worst > 1e-9:
            raise ValueError(f"flag rows must sum to zero (worst {worst:.3e})")
        if self.strength < 0:
            raise ValueError("strength must be nonnegative")
        t.setflags(write=False)
        object.__setattr__(self, "table", t)
        object.__setattr__(self, "strength", float(self.strength))

    @property
    def k(self) -> int:
        return self.table.shape[0]

    @property
    def m(self) -> int:
        return self.table.shape[1]

    def expanded(self, clustering: Clustering) -> np.ndarray:
        """n x states matrix replicating each cluster row over its members."""
        if clustering.k != self.k:
            raise ValueError("one flag row per cluster required")
        return self.table[clustering.labels()]


@dataclass(frozen=True)
class ValidityLog:
    """Range monitoring: beliefs that strayed outside [0, 1] (within slack)."""

    ok: bool
    count: int
    worst_low: float
    worst_high: float
    excursions: tuple[tuple[int, int, int, float], ...] = ()

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "excursion_count": self.count,
            "lowest_belief": self.worst_low,
            "highest_belief": self.worst_high,
            "first_excursions": [
                {"t": t, "agent": a + 1, "state": s + 1, "belief": v}
                for (t, a, s, v) in self.excursions
            ],
        }


@dataclass(frozen=True)
class LearningRun:
    """Belief history ``beliefs[t, agent, state]`` plus range diagnostics."""

    beliefs: np.ndarray
    clustering: Clustering
    flags: CulturalFlags
    validity: ValidityLog
    labels: tuple[str, ...]

    @property
    def horizon(self) -> int:
        return self.beliefs.shape[0] - 1

    @property
    def n(self) -> int:
        return self.beliefs.shape[1]

    @property
    def m(self) -> int:
        return self.beliefs.shape[2]

    def state_trajectory(self, state: int) -> Trajectory:
        return Trajectory(self.beliefs[:, :, state])

    def profile(self, t: int) -> BeliefProfile:
        return BeliefProfile(self.beliefs[t], self.labels)

    def zeta_series(self, p: int, q: int, state: int) -> np.ndarray:
        """|cluster-p mean - cluster-q mean| of the given state's belief,
        one value per recorded step."""
        if p == q:
            raise ValueError("zeta compares two distinct clusters")
        mp = self.beliefs[:, self.clustering.clusters[p], state].mean(axis=1)
        mq = self.beliefs[:, self.clustering.clusters[q], state].mean(axis=1)
        return np.abs(mp - mq)

    def sum_drift(self) -> float:
        """Worst deviation of any agent's belief sum from one, over the run."""
        return float(np.abs(self.beliefs.sum(axis=2) - 1.0).max())


def zeta_metric(
    profile: BeliefProfile, clustering: Clustering, p: int, q: int, state: int
) -> float:
    """Gap between two clusters' mean beliefs in one state."""
    if p == q:
        raise ValueError("zeta compares two distinct clusters")
    b = profile.beliefs[:, state]
    mp = float(b[list(clustering.clusters[p])].mean())
    mq = float(b[list(clustering.clusters[q])].mean())
    return abs(mp - mq)


def _check_range(
    x: np.ndarray, t: int, state: int, slack: float, strength: float
) -> Optional[tuple[int, float]]:
    """Worst offender outside [0, 1] if any; raises beyond the slack band."""
    lo = int(np.argmin(x))
    hi = int(np.argmax(x))
    if x[lo] < -slack - 1e-12:
        raise BeliefRangeError(t, lo, state, float(x[lo]), strength)
    if x[hi] > 1.0 + slack + 1e-12:
        raise BeliefRangeError(t, hi, state, float(x[hi]), strength)
    if x[lo] < -1e-12:
        return lo, float(x[lo])
    if x[hi] > 1.0 + 1e-12:
        return hi, float(x[hi])
    return None


def learn_step(
    profile: BeliefProfile,
    a: np.ndarray,
    flags: CulturalFlags,
    sig: Optional[Signal],
    clustering: Clustering,
    t: int,
    slack: float = DEFAULT_SLACK,
) -> BeliefProfile:
    """One synchronous update of every agent's full belief vector."""
    push = flags.strength * flags.expanded(clustering)
    u = eval_u(sig, t) if sig is not None and flags.strength != 0.0 else 0.0
    cols = []
    for s in range(profile.m):
        x = a @ profile.beliefs[:, s] + u * push[:, s]
        _check_range(x, t + 1, s, slack, flags.strength)
        cols.append(x)
    return BeliefProfile(np.column_stack(cols), profile.labels)


def learn_simulate(
    coupling: Union[np.ndarray, MatrixSchedule],
    clustering: Clustering,
    flags: CulturalFlags,
    sig: Optional[Signal],
    profile0: BeliefProfile,
    horizon: int,
    slack: float = DEFAULT_SLACK,
) -> LearningRun:
    """Run the belief dynamics for ``horizon`` steps.

    States evolve independently (the update is linear per state), so each is
    integrated as its own driven trajectory; the per-state recursion is the
    same arithmetic as the scalar simulation engine.
    """
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    if profile0.n != clustering.n:
        raise ValueError("profile and clustering disagree on the agent count")
    if isinstance(coupling, MatrixSchedule):
        coupling_at = coupling.at
    else:
        mat = np.asarray(coupling, dtype=float)
        coupling_at = lambda t: mat
    push = flags.strength * flags.expanded(clustering)
    n, m = profile0.n, profile0.m
    out = np.empty((horizon + 1, n, m))
    out[0] = profile0.beliefs
    excursions: list[tuple[int, int, int, float]] = []
    count = 0
    worst_low, worst_high = 0.0, 1.0
    for s in range(m):
        x = profile0.beliefs[:, s].copy()
        vec = push[:, s]
        for t in range(horizon):
            u = eval_u(sig, t) if sig is not None and flags.strength != 0.0 else 0.0
            x = coupling_at(t) @ x + u * vec
            if not np.isfinite(x).all():
                raise DivergenceError(t + 1)
            offender = _check_range(x, t + 1, s, slack, flags.strength)
            if offender is not None:
                agent, value = offender
                count += 1
                worst_low = min(worst_low, value)
                worst_high = max(worst_high, value)
                if len(excursions) < _LOG_CAP:
                    excursions.append((t + 1, agent, s, value))
            out[t + 1, :, s] = x
    log = ValidityLog(
        ok=count == 0,
        count=count,
        worst_low=worst_low,
        worst_high=worst_high,
        excursions=tuple(excursions),
    )
    return LearningRun(
        beliefs=out,
        clustering=clustering,
        flags=flags,
        validity=log,
        labels=profile0.labels,
    )
