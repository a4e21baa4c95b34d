"""Row-stochastic matrix analytics for clustered networks.

Matrices are plain ``numpy`` arrays validated by :func:`validate`; rows are
agents, ``a[i, j]`` is the weight agent ``i`` places on agent ``j``.

Two scalar functionals drive the convergence arguments, both taken over
same-cluster pairs only:

* the cluster ergodicity coefficient
  ``min_p min_{i,j in C_p} sum_k min(a[i,k], a[j,k])``, positive exactly when
  the support graph is cluster-scrambling;
* the cluster Hajnal diameter ``max_p max_{i,j in C_p} ||a[i] - a[j]||_1``
  (for states, ``max |x_i - x_j|``), which contracts under left products by
  matrices with inter-cluster common influence.

Row differences use the l1 norm throughout; reports record that choice.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .graph import Clustering

ROW_SUM_TOL = 1e-9
COMMON_INFLUENCE_TOL = 1e-9
RENORM_EVERY = 64
RENORM_DRIFT_LIMIT = 1e-9

MATRIX_NORM = "l1-row-difference"
STATE_NORM = "max-abs-difference"


class ConvergenceError(RuntimeError):
    """Power iteration did not settle within the allowed number of steps."""


def validate(raw: np.ndarray, tol: float = ROW_SUM_TOL) -> np.ndarray:
    """Return a validated row-stochastic copy of ``raw``.

    Entries must be nonnegative and every row sum must lie within ``tol`` of
    one; rows are then renormalized to sum to one exactly (in floating
    point).  Violations raise ``ValueError``.
    """
    a = np.array(raw, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    if np.any(a < 0):
        i, j = np.argwhere(a < 0)[0]
        raise ValueError(f"negative entry at ({i}, {j}): {a[i, j]}")
    sums = a.sum(axis=1)
    drift = np.abs(sums - 1.0)
    if np.any(drift > tol):
        i = int(np.argmax(drift))
        raise ValueError(f"row {i} sums to {sums[i]}, beyond tolerance {tol}")
    return a / sums[:, None]


def ergodicity_coefficient(a: np.ndarray, clustering: Clustering) -> float:
    """Minimum over same-cluster row pairs of the shared mass
    ``sum_k min(a[i,k], a[j,k])``; singleton clusters contribute 1."""
    a = np.asarray(a, dtype=float)
    mu = 1.0
    for members in clustering.clusters:
        if len(members) < 2:
            continue
        rows = a[list(members)]
        shared = np.minimum(rows[:, None, :], rows[None, :, :]).sum(axis=2)
        iu = np.triu_indices(len(members), k=1)
        mu = min(mu, float(shared[iu].min()))
    return mu


def hajnal_diameter(a: np.ndarray, clustering: Clustering) -> float:
    """Largest l1 distance between same-cluster rows."""
    a = np.asarray(a, dtype=float)
    diam = 0.0
    for members in clustering.clusters:
        if len(members) < 2:
            continue
        rows = a[list(members)]
        dist = np.abs(rows[:, None, :] - rows[None, :, :]).sum(axis=2)
        diam = max(diam, float(dist.max()))
    return diam


def state_diameter(x: np.ndarray, clustering: Clustering) -> float:
    """Largest absolute gap between same-cluster state entries."""
    x = np.asarray(x, dtype=float)
    diam = 0.0
    for members in clustering.clusters:
        vals = x[list(members)]
        diam = max(diam, float(vals.max() - vals.min()))
    return diam


def common_influence_deviation(a: np.ndarray, clustering: Clustering) -> float:
    """Worst spread of block row sums within a cluster.

    For inter-cluster common influence the sum ``sum_{j in C_q} a[i, j]``
    must not depend on which ``i in C_p`` is taken; this returns the largest
    max-minus-min spread over all ordered cluster pairs.
    """
    a = np.asarray(a, dtype=float)
    worst = 0.0
    for sources in clustering.clusters:
        block = a[:, list(sources)].sum(axis=1)
        for targets in clustering.clusters:
            vals = block[list(targets)]
            worst = max(worst, float(vals.max() - vals.min()))
    return worst


def has_common_influence(
    a: np.ndarray, clustering: Clustering, tol: float = COMMON_INFLUENCE_TOL
) -> bool:
    return common_influence_deviation(a, clustering) <= tol


def quotient_matrix(
    a: np.ndarray, clustering: Clustering, tol: float = COMMON_INFLUENCE_TOL
) -> np.ndarray:
    """K-by-K reduced matrix of cluster block sums.

    Requires inter-cluster common influence within ``tol``; the entry
    ``(p, q)`` is the block sum of the first vertex of cluster ``p``.
    """
    a = np.asarray(a, dtype=float)
    dev = common_influence_deviation(a, clustering)
    if dev > tol:
        raise ValueError(
            f"matrix lacks inter-cluster common influence (spread {dev:.3e} > {tol:.1e})"
        )
    k = clustering.k
    b = np.empty((k, k))
    reps = [members[0] for members in clustering.clusters]
    for q, sources in enumerate(clustering.clusters):
        b[:, q] = a[reps][:, list(sources)].sum(axis=1)
    return validate(b, tol=max(ROW_SUM_TOL, k * tol))


@dataclass(frozen=True)
class MatrixSchedule:
    """Finite list of stochastic matrices cycled periodically.

    ``floor`` is the positivity floor the schedule is meant to satisfy
    (every nonzero entry and every diagonal entry at least ``floor``).  It
    is recorded, not enforced: :meth:`floor_report` produces the verdicts so
    a checker can report violations instead of the constructor hiding them.
    When ``floor`` is omitted it defaults to the smallest positive entry
    found across the schedule.
    """

    matrices: tuple[np.ndarray, ...]
    floor: Optional[float] = None

    def __post_init__(self):
        if not self.matrices:
            raise ValueError("schedule needs at least one matrix")
        mats = tuple(validate(m) for m in self.matrices)
        n = mats[0].shape[0]
        if any(m.shape[0] != n for m in mats):
            raise ValueError("schedule matrices have mismatched sizes")
        for m in mats:
            m.setflags(write=False)
        object.__setattr__(self, "matrices", mats)
        if self.floor is None:
            smallest = min(
                float(m[m > 0].min()) for m in mats if np.any(m > 0)
            )
            object.__setattr__(self, "floor", smallest)
        elif not 0 < self.floor <= 1:
            raise ValueError("floor must lie in (0, 1]")

    @property
    def n(self) -> int:
        return self.matrices[0].shape[0]

    @property
    def period(self) -> int:
        return len(self.matrices)

    def at(self, t: int) -> np.ndarray:
        return self.matrices[t % self.period]

    def floor_report(self) -> dict:
        """Entry-floor and diagonal-floor verdicts against ``self.floor``."""
        e = self.floor
        min_positive = np.inf
        min_diag = np.inf
        for m in self.matrices:
            pos = m[m > 0]
            if pos.size:
                min_positive = min(min_positive, float(pos.min()))
            min_diag = min(min_diag, float(np.diag(m).min()))
        return {
            "floor": e,
            "min_positive_entry": min_positive,
            "min_diagonal_entry": min_diag,
            "entry_floor_ok": bool(min_positive >= e - 1e-15),
            "diagonal_floor_ok": bool(min_diag >= e - 1e-15),
        }


def product_range(schedule: MatrixSchedule, t: int, s: int) -> np.ndarray:
    """Left product ``A(s) A(s-1) ... A(t)`` for ``s >= t``.

    Row sums are renormalized every ``RENORM_EVERY`` multiplications, and
    only while the accumulated drift stays below ``RENORM_DRIFT_LIMIT``;
    larger drift aborts rather than papering over an invalid matrix.
    """
    if s < t:
        raise ValueError(f"empty product range [{t}, {s}]")
    acc = schedule.at(t).copy()
    for count, tau in enumerate(range(t + 1, s + 1), start=1):
        acc = schedule.at(tau) @ acc
        if count % RENORM_EVERY == 0:
            sums = acc.sum(axis=1)
            drift = float(np.abs(sums - 1.0).max())
            if drift > RENORM_DRIFT_LIMIT:
                raise ArithmeticError(
                    f"row-sum drift {drift:.3e} after {count} multiplications"
                )
            acc /= sums[:, None]
    return acc


@dataclass(frozen=True)
class PowerLimit:
    """Limit of matrix powers with a fitted geometric error rate.

    ``errors[t]`` records ``||A^t - limit||`` in the induced max-row-sum
    norm for ``t = 0..steps``.
    """

    limit: np.ndarray
    rate: float
    steps: int
    errors: np.ndarray


def _fit_rate(errors: np.ndarray) -> float:
    # Least squares on the last half of the nonzero log-errors; exact zeros
    # (finite-time convergence) carry no rate information.
    ts = np.nonzero(errors > 0)[0]
    if ts.size < 2:
        return 0.0
    tail = ts[ts.size // 2 :]
    if tail.size < 2:
        tail = ts[-2:]
    slope = np.polyfit(tail, np.log(errors[tail]), 1)[0]
    return float(np.exp(slope))


def power_limit(
    a: np.ndarray, tol: float = 1e-12, max_iter: int = 50_000
) -> PowerLimit:
    """Iterate ``A^t`` until successive powers differ by less than ``tol``.

    Convergence requires every diagonal entry positive (otherwise powers may
    cycle); a run past ``max_iter`` raises :class:`ConvergenceError`.
    """
    a = validate(a)
    if np.any(np.diag(a) <= 0):
        raise ValueError("power limit requires positive diagonal entries")
    power = a.copy()
    steps = 1
    while True:
        nxt = power @ a
        delta = float(np.abs(nxt - power).max())
        power = nxt
        steps += 1
        if delta < tol:
            break
        if steps > max_iter:
            raise ConvergenceError(
                f"powers still moving after {max_iter} steps (last delta {delta:.3e})"
            )
    limit = power
    errors = np.empty(steps + 1)
    errors[0] = float(np.abs(np.eye(a.shape[0]) - limit).sum(axis=1).max())
    cur = np.eye(a.shape[0])
    for t in range(1, steps + 1):
        cur = cur @ a
        errors[t] = float(np.abs(cur - limit).sum(axis=1).max())
    return PowerLimit(limit=limit, rate=_fit_rate(errors), steps=steps, errors=errors)


def diameter_growth_rate(
    schedule: MatrixSchedule, clustering: Clustering, horizon: int
) -> float:
    """Empirical growth rate of ``hajnal_diameter`` along running products.

    Fits the slope of ``log diam(A(t-1)...A(0))`` against ``t`` over the
    tail half of the horizon and exponentiates.  Rates below one certify
    geometric intra-cluster contraction empirically; a diameter that hits
    exact zero short-circuits to 0.0 (finite-time consensus).
    """
    if horizon < 2:
        raise ValueError("horizon must be at least 2")
    diams = np.empty(horizon)
    acc = schedule.at(0).copy()
    diams[0] = hajnal_diameter(acc, clustering)
    for t in range(1, horizon):
        acc = schedule.at(t) @ acc
        if t % RENORM_EVERY == 0:
            sums = acc.sum(axis=1)
            drift = float(np.abs(sums - 1.0).max())
            if drift > RENORM_DRIFT_LIMIT:
                raise ArithmeticError(f"row-sum drift {drift:.3e} at step {t}")
            acc /= sums[:, None]
        diams[t] = hajnal_diameter(acc, clustering)
        if diams[t] == 0.0:
            return 0.0
    tail = np.arange(horizon // 2, horizon)
    if np.any(diams[tail] == 0.0):
        return 0.0
    slope = np.polyfit(tail + 1, np.log(diams[tail]), 1)[0]
    return float(np.exp(slope))
