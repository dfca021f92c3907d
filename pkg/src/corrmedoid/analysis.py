"""Difficulty quantities for a dataset/metric pair, scale bounds on the
per-arm correlation constants, and the unit-circle joint-negativity
demonstration.

The quantities: theta (exact mean distances), the gaps delta_i relative to
the medoid, sigma (spread of a random pairwise distance), rho_i (spread of
the difference d(medoid, J) - d(i, J) over a shared random reference J,
relative to sigma), and two worst-case sample-complexity scores: h2 over
arms ordered by ascending gap, and h2_tilde over arms ordered by ascending
gap/rho. Small rho_i means the difference concentrates much faster than the
raw distances, which is exactly what shared-reference sampling exploits;
h2/h2_tilde measures how much there is to gain.

Spread quantities are empirical standard deviations (population form,
ddof=0): the exhaustive variants enumerate their full populations, and the
sub-Gaussian constants they stand in for have no finite-sample estimator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .baselines import exact_medoid
from .dataset import Dataset
from .metrics import pairs_dist, pairwise_block
from .sampling import make_rng

# exhaustive sigma enumeration above this n would mean > 4M pairs
_EXHAUSTIVE_SIGMA_MAX_N = 2000

_ARM_CHUNK = 256


class MedoidTieError(ValueError):
    """Two points have relatively indistinguishable theta values."""


@dataclass
class HardnessReport:
    medoid: int
    theta: np.ndarray
    delta: np.ndarray
    sigma: float
    rho: np.ndarray
    h2: float
    h2_tilde: float
    ratio: float
    ordering: np.ndarray  # ordering[0] = medoid, rest ascending delta/rho

    def to_dict(self) -> dict:
        return {
            "medoid": self.medoid,
            "sigma": self.sigma,
            "h2": self.h2,
            "h2_tilde": self.h2_tilde,
            "ratio": self.ratio,
            "theta": self.theta.tolist(),
            "delta": self.delta.tolist(),
            "rho": self.rho.tolist(),
            "ordering": self.ordering.tolist(),
        }


@dataclass
class BoundViolation:
    arm: int
    bound: str  # triangle | variance | orlicz
    lhs: float
    rhs: float


@dataclass
class BoundCheckResult:
    violations: list[BoundViolation] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def estimate_sigma(ds: Dataset, metric: str, pairs: int = 200_000, seed: int = 0) -> float:
    """Standard deviation of d(x_I, x_J) over ordered pairs I != J.

    Exhaustive over all n(n-1) ordered pairs when n <= 2000; otherwise
    `pairs` independent uniform ordered pairs drawn with the seed.
    """
    if pairs < 2:
        raise ValueError("pairs must be >= 2")
    n = ds.n
    if n < 2:
        raise ValueError("sigma needs at least two points")
    if n <= _EXHAUSTIVE_SIGMA_MAX_N:
        all_idx = np.arange(n, dtype=np.int64)
        D = pairwise_block(ds, metric, all_idx, all_idx)
        off_diag = D[~np.eye(n, dtype=bool)]
        return float(np.std(off_diag))
    rng = make_rng(seed)
    I = rng.integers(0, n, size=pairs, dtype=np.int64)
    J = rng.integers(0, n, size=pairs, dtype=np.int64)
    clash = I == J
    while np.any(clash):
        J[clash] = rng.integers(0, n, size=int(clash.sum()), dtype=np.int64)
        clash = I == J
    return float(np.std(pairs_dist(ds, metric, I, J)))


def estimate_rho(
    ds: Dataset,
    metric: str,
    medoid: int,
    i: int,
    sigma: float | None = None,
    sigma_pairs: int = 200_000,
    seed: int = 0,
) -> float:
    """Spread of d(x_medoid, x_J) - d(x_i, x_J) over ALL J, divided by sigma.

    The reference sweep is exhaustive (never sampled). sigma defaults to
    estimate_sigma on the same dataset.
    """
    if i == medoid:
        raise ValueError("rho is defined for arms other than the medoid")
    if sigma is None:
        sigma = estimate_sigma(ds, metric, sigma_pairs, seed)
    if sigma <= 0.0:
        raise ValueError("sigma is zero; rho undefined (all pairwise distances equal)")
    rows = pairwise_block(
        ds, metric, np.array([medoid, i], dtype=np.int64), np.arange(ds.n, dtype=np.int64)
    )
    return float(np.std(rows[0] - rows[1]) / sigma)


def _order_with_ties(primary: np.ndarray) -> np.ndarray:
    # ascending primary, index as tie-break
    return np.lexsort((np.arange(len(primary)), primary))


def hardness(
    ds: Dataset,
    metric: str,
    sigma_pairs: int = 200_000,
    seed: int = 0,
    threads: int = 1,
) -> HardnessReport:
    """Full report; n^2 distance evaluations (exact theta plus the rho sweep)."""
    n = ds.n
    if n < 2:
        raise ValueError("hardness needs at least two points")
    med, theta = exact_medoid(ds, metric, threads=threads)
    delta = theta - theta[med]

    scale = max(abs(float(theta[med])), 1e-300)
    near = np.nonzero(np.abs(delta) <= 1e-12 * scale)[0]
    if len(near) > 1:
        others = [int(i) for i in near if i != med]
        raise MedoidTieError(
            f"medoid is not unique: theta[{others}] within 1e-12 relative of theta[{med}]"
        )

    sigma = estimate_sigma(ds, metric, sigma_pairs, seed)
    if sigma <= 0.0:
        raise MedoidTieError("all pairwise distances are equal; every point ties")

    all_idx = np.arange(n, dtype=np.int64)
    med_row = pairwise_block(ds, metric, np.array([med], dtype=np.int64), all_idx)[0]
    rho = np.zeros(n, dtype=np.float64)
    for lo in range(0, n, _ARM_CHUNK):
        arms = all_idx[lo : lo + _ARM_CHUNK]
        rows = pairwise_block(ds, metric, arms, all_idx)
        rho[lo : lo + _ARM_CHUNK] = np.std(med_row[None, :] - rows, axis=1)
    rho /= sigma
    rho[med] = 0.0

    by_delta = _order_with_ties(delta)
    ranks = np.arange(2, n + 1, dtype=np.float64)
    h2 = float(np.max(ranks / np.square(delta[by_delta[1:]])))

    with np.errstate(divide="ignore"):
        ratio_key = np.where(delta > 0, delta / np.where(rho > 0, rho, np.inf), 0.0)
        ratio_key = np.where((delta > 0) & (rho == 0), np.inf, ratio_key)
    rest = np.array([i for i in _order_with_ties(ratio_key) if i != med], dtype=np.int64)
    ordering = np.concatenate([np.array([med], dtype=np.int64), rest])
    h2_tilde = float(
        np.max(ranks * np.square(rho[ordering[1:]]) / np.square(delta[ordering[1:]]))
    )

    return HardnessReport(
        medoid=int(med),
        theta=theta,
        delta=delta,
        sigma=sigma,
        rho=rho,
        h2=h2,
        h2_tilde=h2_tilde,
        ratio=h2 / h2_tilde if h2_tilde > 0 else math.inf,
        ordering=ordering,
    )


def rho_bounds_check(
    ds: Dataset,
    metric: str,
    report: HardnessReport,
    tol_abs: float = 1e-9,
    tol_rel: float = 1e-6,
) -> BoundCheckResult:
    """Check every non-medoid arm's rho against three upper bounds.

    triangle:  rho_i * sigma <= (2 d(x_i, x_med) + delta_i) / 2
               (requires the triangle inequality; skipped for cosine)
    variance:  (rho_i * sigma)^2 <= d(x_med, x_i)^2 - delta_i^2
               (a theorem for the exhaustive variance under triangle-obeying
                metrics; reported for all metrics)
    orlicz:    rho_i <= 2

    Returns the violations; an empty list is success.
    """
    result = BoundCheckResult()
    check_triangle = metric in ("l1", "l2")
    if not check_triangle:
        result.skipped.append("triangle")

    med = report.medoid
    others = np.array([i for i in range(ds.n) if i != med], dtype=np.int64)
    if len(others) == 0:
        return result
    d_med = pairwise_block(ds, metric, np.array([med], dtype=np.int64), others)[0]

    def tol(rhs: float) -> float:
        return tol_abs + tol_rel * abs(rhs)

    for pos, i in enumerate(others):
        d1i = float(d_med[pos])
        rho_s = float(report.rho[i] * report.sigma)
        delta_i = float(report.delta[i])
        if check_triangle:
            rhs = (2.0 * d1i + delta_i) / 2.0
            if rho_s > rhs + tol(rhs):
                result.violations.append(BoundViolation(int(i), "triangle", rho_s, rhs))
        rhs = d1i * d1i - delta_i * delta_i
        if rho_s * rho_s > rhs + tol(rhs):
            result.violations.append(BoundViolation(int(i), "variance", rho_s * rho_s, rhs))
        if report.rho[i] > 2.0 + tol(2.0):
            result.violations.append(BoundViolation(int(i), "orlicz", float(report.rho[i]), 2.0))
    return result


def joint_negativity(ds: Dataset, i: int, k: int) -> float:
    """Fraction of reference points J where BOTH perimeter arms i and k look
    closer than the center under l2, i.e. d(x_i,x_J) - d(x_0,x_J) < 0 and
    d(x_k,x_J) - d(x_0,x_J) < 0 simultaneously.

    Exact enumeration over all n references; no sampling. Expects a
    center-plus-circle dataset: point 0 at the origin, the rest on the unit
    circle.
    """
    if i == 0 or k == 0:
        raise ValueError("arms must be perimeter points, not the center (index 0)")
    if not (0 < i < ds.n and 0 < k < ds.n):
        raise IndexError("arm index out of range")
    if ds.d != 2:
        raise ValueError("expected a 2-d center-plus-circle dataset")
    norms = np.linalg.norm(np.vstack([ds.row_dense(j) for j in range(ds.n)]), axis=1)
    if norms[0] > 1e-9 or np.any(np.abs(norms[1:] - 1.0) > 1e-9):
        raise ValueError("expected point 0 at the origin and the rest on the unit circle")
    rows = pairwise_block(
        ds, "l2", np.array([i, k, 0], dtype=np.int64), np.arange(ds.n, dtype=np.int64)
    )
    both = (rows[0] - rows[2] < 0.0) & (rows[1] - rows[2] < 0.0)
    return float(np.count_nonzero(both)) / ds.n
