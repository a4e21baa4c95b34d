"""Driven averaging dynamics and their asymptotics.

The state update is ``x(t+1) = A(t) x(t) + sigma * u(t)`` where ``A(t)`` is a
fixed stochastic matrix or a periodic schedule, ``sigma`` is a per-cluster
offset vector and ``u`` a scalar signal.  Because the offsets are constant on
clusters and the couplings have inter-cluster common influence, the cluster
averages follow the reduced recursion ``y(t+1) = B y(t) + alpha * u(t)`` with
``B`` the quotient matrix.

With a zero-sum signal of period ``T`` the reduced state sampled at times
``n T + 1`` converges to ``Z1 y(0) + Z2 alpha`` where ``Z1`` is the limit of
``B`` powers and ``Z2`` the limit of the input convolution sums; per-cluster
trajectories settle on a ``T``-periodic cycle whose levels differ across
clusters for generic data.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .graph import Clustering
from .signals import ClusterOffsets, PeriodicInput, Signal, eval_u, partial_sum_bound
from .stochastic import (
    MatrixSchedule,
    power_limit,
    state_diameter,
    validate,
)

Coupling = Union[np.ndarray, MatrixSchedule]


class DivergenceError(RuntimeError):
    """A simulated state stopped being finite.

    ``partial`` holds the finite prefix of the trajectory when the raiser
    had one, so callers can still emit diagnostics.
    """

    def __init__(self, t: int, partial: Optional[np.ndarray] = None):
        super().__init__(f"non-finite state at step {t}")
        self.t = t
        self.partial = partial


@dataclass(frozen=True)
class System:
    """Driven averaging system over a clustered vertex set.

    ``offsets`` may be None for an undriven run (the signal, if any, is then
    ignored), which is how a zero-strength control is expressed without
    violating the distinct-gains rule.
    """

    coupling: Coupling
    clustering: Clustering
    offsets: Optional[ClusterOffsets] = None
    signal: Optional[Signal] = None

    def __post_init__(self):
        if isinstance(self.coupling, MatrixSchedule):
            n = self.coupling.n
        else:
            a = validate(self.coupling)
            a.setflags(write=False)
            object.__setattr__(self, "coupling", a)
            n = a.shape[0]
        if n != self.clustering.n:
            raise ValueError(
                f"coupling is {n}-dimensional but clustering covers {self.clustering.n}"
            )
        if self.offsets is not None and self.offsets.clustering.n != n:
            raise ValueError("offsets built on a different vertex set")

    @property
    def n(self) -> int:
        return self.clustering.n

    @property
    def is_switching(self) -> bool:
        return isinstance(self.coupling, MatrixSchedule)

    def coupling_at(self, t: int) -> np.ndarray:
        if isinstance(self.coupling, MatrixSchedule):
            return self.coupling.at(t)
        return self.coupling

    def driven(self) -> bool:
        return self.offsets is not None and self.signal is not None


@dataclass(frozen=True)
class Trajectory:
    """States stacked row-wise; ``states[t]`` is the state after ``t`` steps."""

    states: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.states, dtype=float)
        if s.ndim != 2:
            raise ValueError("states must be a 2-d array (time, vertex)")
        object.__setattr__(self, "states", s)

    @property
    def horizon(self) -> int:
        return self.states.shape[0] - 1

    @property
    def n(self) -> int:
        return self.states.shape[1]

    def diameter_series(self, clustering: Clustering) -> np.ndarray:
        return np.array(
            [state_diameter(x, clustering) for x in self.states]
        )

    def max_norm(self) -> float:
        return float(np.abs(self.states).max())


def step(sys: System, x: np.ndarray, t: int) -> np.ndarray:
    """One update ``A(t) x + sigma u(t)``; raises on non-finite results."""
    x = np.asarray(x, dtype=float)
    nxt = sys.coupling_at(t) @ x
    if sys.driven():
        nxt = nxt + sys.offsets.vector() * eval_u(sys.signal, t)
    if not np.all(np.isfinite(nxt)):
        raise DivergenceError(t)
    return nxt


def simulate(sys: System, x0: np.ndarray, horizon: int) -> Trajectory:
    """Roll the system forward ``horizon`` steps from ``x0``."""
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (sys.n,):
        raise ValueError(f"initial state must have shape ({sys.n},)")
    states = np.empty((horizon + 1, sys.n))
    states[0] = x0
    sigma = sys.offsets.vector() if sys.driven() else None
    for t in range(horizon):
        nxt = sys.coupling_at(t) @ states[t]
        if sigma is not None:
            nxt += sigma * eval_u(sys.signal, t)
        if not np.all(np.isfinite(nxt)):
            raise DivergenceError(t, partial=states[: t + 1].copy())
        states[t + 1] = nxt
    return Trajectory(states)


def quotient_simulate(
    b: np.ndarray,
    offsets: ClusterOffsets,
    sig: Optional[Signal],
    y0: np.ndarray,
    horizon: int,
) -> Trajectory:
    """Reduced recursion ``y(t+1) = B y(t) + alpha u(t)`` on cluster averages."""
    b = validate(b)
    if horizon < 1:
        raise ValueError("horizon must be at least 1")
    y0 = np.asarray(y0, dtype=float)
    k = b.shape[0]
    if y0.shape != (k,):
        raise ValueError(f"reduced state must have shape ({k},)")
    alpha = offsets.reduced()
    if alpha.shape != (k,):
        raise ValueError("offsets do not match the reduced dimension")
    states = np.empty((horizon + 1, k))
    states[0] = y0
    for t in range(horizon):
        nxt = b @ states[t]
        if sig is not None:
            nxt += alpha * eval_u(sig, t)
        if not np.all(np.isfinite(nxt)):
            raise DivergenceError(t, partial=states[: t + 1].copy())
        states[t + 1] = nxt
    return Trajectory(states)


@dataclass(frozen=True)
class PeriodicLimit:
    """Per-cluster limit cycle: ``cycles[p, theta]`` is the level of cluster
    ``p`` at times congruent to ``theta`` modulo ``period``."""

    period: int
    cycles: np.ndarray
    residual: float


def detect_periodic_limit(
    traj: Trajectory,
    clustering: Clustering,
    period: int,
    tol: float = 1e-8,
) -> Optional[PeriodicLimit]:
    """Check the trajectory tail for a ``period``-periodic limit.

    Compares ``x(t)`` with ``x(t + period)`` over the final quarter of the
    trajectory (at least two full periods of comparisons) and requires the
    worst residual below ``tol``.  On success the per-cluster cycle is read
    off the last full period, each phase sample averaged over the cluster
    members; returns None when the tail has not settled.
    """
    if period < 1:
        raise ValueError("period must be at least 1")
    length = traj.states.shape[0]
    if length < 4 * period:
        raise ValueError(
            f"trajectory too short for period {period}: need at least {4 * period} states"
        )
    last = length - 1
    start = min((3 * length) // 4, last - 3 * period + 1)
    start = max(start, 0)
    diffs = traj.states[start + period : last + 1] - traj.states[start : last + 1 - period]
    residual = float(np.abs(diffs).max())
    if residual >= tol:
        return None
    k = clustering.k
    cycles = np.empty((k, period))
    for offset in range(period):
        t = last - offset
        theta = t % period
        for p, members in enumerate(clustering.clusters):
            cycles[p, theta] = float(traj.states[t, list(members)].mean())
    return PeriodicLimit(period=period, cycles=cycles, residual=residual)


def separation_metric(limit: PeriodicLimit) -> np.ndarray:
    """K-by-K matrix of peak gaps between cluster cycles."""
    c = limit.cycles
    return np.abs(c[:, None, :] - c[None, :, :]).max(axis=2)


def z_limits(
    b: np.ndarray,
    sig: PeriodicInput,
    tol: float = 1e-12,
    max_iter: int = 200_000,
) -> tuple[np.ndarray, np.ndarray]:
    """Limits ``Z1`` of the sampled powers and ``Z2`` of the convolution sums.

    ``Z1 = lim B^{nT+1}`` and ``Z2 = lim sum_{k=0..nT} B^{nT-k} u(k)``; the
    sampled reduced state satisfies ``y(nT+1) -> Z1 y(0) + Z2 alpha``.  Each
    eigenvalue ``nu`` of ``B`` maps to the ``Z2`` eigenvalue
    ``sum_{k<T} u(k) nu^k / (1 - nu^T)`` (and to ``u(0)`` at ``nu = 1``) on
    the same left eigenvectors.  Requires positive diagonal entries.
    """
    b = validate(b)
    if np.any(np.diag(b) <= 0):
        raise ValueError("limits require positive diagonal entries")
    z1 = power_limit(b, tol=tol).limit
    T = sig.period
    # One period of the convolution increment: sum_j B^{T-1-j} u((1+j) mod T).
    increment = np.zeros_like(b)
    bt = np.eye(b.shape[0])
    for j in range(T - 1, -1, -1):
        increment += bt * eval_u(sig, (1 + j) % T)
        bt = bt @ b
    # bt now holds B^T.
    z2 = eval_u(sig, 0) * np.eye(b.shape[0])
    for it in range(max_iter):
        nxt = bt @ z2 + increment
        delta = float(np.abs(nxt - z2).max())
        z2 = nxt
        if delta < tol:
            return z1, z2
    raise RuntimeError(f"convolution sums still moving after {max_iter} periods")


@dataclass(frozen=True)
class BoundReport:
    """Observed peak norm against the constructive a-priori bound.

    The bound ``||x(0)|| + ||A_inf sigma|| Y_s + M Y_u / (1 - rate)`` only
    applies to fixed couplings driven by signals with bounded partial sums;
    ``applicable`` is False otherwise and ``bound`` is then None.
    """

    max_norm: float
    bound: Optional[float]
    applicable: bool
    note: str = ""


def boundedness_report(sys: System, traj: Trajectory) -> BoundReport:
    """Compare the trajectory's peak max-norm with the constructive bound."""
    max_norm = traj.max_norm()
    if sys.is_switching:
        return BoundReport(
            max_norm, None, False, "constructive bound covers fixed couplings only"
        )
    x0_norm = float(np.abs(traj.states[0]).max())
    if not sys.driven():
        return BoundReport(max_norm, x0_norm, True, "undriven: peak equals initial norm bound")
    horizon = traj.horizon
    max_u, max_partial = partial_sum_bound(sys.signal, horizon)
    pl = power_limit(sys.coupling)
    rate = min(0.999999, pl.rate * 1.02 + 1e-9)
    reliable = pl.errors > 1e-13
    if np.any(reliable):
        ts = np.nonzero(reliable)[0]
        prefactor = float(np.max(pl.errors[ts] / rate**ts))
    else:
        prefactor = 0.0
    sigma = sys.offsets.vector()
    bound = (
        x0_norm
        + float(np.abs(pl.limit @ sigma).max()) * max_partial
        + prefactor * float(np.abs(sigma).max()) * max_u / (1.0 - rate)
    )
    note = ""
    applicable = True
    if not isinstance(sys.signal, PeriodicInput):
        # Empirical boundedness only: a partial-sum peak still growing near the
        # end of the horizon means the bound's hypothesis is unverified.
        _, half_peak = partial_sum_bound(sys.signal, horizon // 2)
        if max_partial > half_peak * (1 + 1e-9):
            applicable = False
            note = "partial sums still growing over the horizon; bound inapplicable"
    return BoundReport(max_norm, bound if applicable else None, applicable, note)
