"""Correlated sequential halving and its doubling-trick wrapper.

The budget-T algorithm runs ceil(log2 n) halving rounds. Each round draws
ONE reference set, shared by every surviving arm, of size

    t_r = clamp(floor(T / (|S_r| * ceil(log2 n))), 1, n)

and estimates each survivor's mean distance against it. Sharing the
references is the whole point: the per-arm estimates are correlated, so
pairwise comparisons concentrate at the scale of the distance differences
rather than the distances themselves. If t_r reaches n the estimates are
exact and the run returns immediately; otherwise the better half (ceil of
half, ties to the lower index) survives.

With reuse_past on (default), an arm's estimate in round r averages over
the union of all reference sets drawn so far; every survivor of round r was
present in all earlier rounds, so the union is shared too and one running
sum per arm suffices. A reference drawn again in a later round is counted
once and costs nothing fresh. With reuse_past off each round's estimate
uses exactly that round's reference set, matching the budget accounting
of the fixed-budget analysis.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset
from .metrics import Recorder, sum_block, theta_all
from .sampling import derive_seed, make_rng, sample_without_replacement


def ceil_log2(n: int) -> int:
    """ceil(log2 n) as an exact integer; defined as 1 for n = 1."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return max(1, (n - 1).bit_length())


def round_budget(T: int, n: int, surviving: int) -> int:
    """References drawn in a round with `surviving` arms left: the floor of
    the even budget split, clamped to [1, n]."""
    if T < 1 or not 1 <= surviving <= n:
        raise ValueError(f"bad round_budget arguments T={T}, n={n}, surviving={surviving}")
    t = T // (surviving * ceil_log2(n))
    return min(max(1, t), n)


@dataclass(frozen=True)
class CorrShConfig:
    budget_T: int
    seed: int = 0
    reuse_past: bool = True

    def __post_init__(self) -> None:
        if self.budget_T < 1:
            raise ValueError("budget_T must be >= 1")


@dataclass(frozen=True)
class RoundTrace:
    r: int
    surviving: int
    t_r: int
    refs: np.ndarray  # the round's reference set, ascending
    exact_branch: bool


@dataclass
class RunResult:
    """Outcome of one algorithm run.

    fresh_pulls counts distance evaluations actually performed; with
    reuse_past on, references repeated across rounds cost nothing and are
    not counted. below_theorem_regime flags budgets under n*ceil(log2 n),
    where the fixed-budget guarantee does not apply (the run still
    completes, drawing one reference per round).
    """

    chosen: int
    fresh_pulls: int
    pulls_per_arm: np.ndarray
    trace: list[RoundTrace] = field(default_factory=list)
    wall_s: float = 0.0
    below_theorem_regime: bool = False


def _smallest(survivors: np.ndarray, theta: np.ndarray, k: int) -> np.ndarray:
    """The k arms with smallest theta, ties to the lower point index.

    Partial selection rather than a full sort; output is identical to a
    stable sort by (theta, index). survivors must be ascending.
    """
    if k >= len(survivors):
        return survivors
    pivot = np.partition(theta, k - 1)[k - 1]
    less = theta < pivot
    keep = survivors[less]
    need = k - len(keep)
    if need > 0:
        keep = np.concatenate([keep, survivors[theta == pivot][:need]])
    keep.sort()
    return keep


def corr_seq_halving(
    ds: Dataset,
    metric: str,
    cfg: CorrShConfig,
    recorder: Recorder | None = None,
) -> RunResult:
    start = time.perf_counter()
    n = ds.n
    if n == 1:
        return RunResult(0, 0, np.zeros(1, dtype=np.int64), [], time.perf_counter() - start)

    T = cfg.budget_T
    L = ceil_log2(n)
    below = T < n * L
    rng = make_rng(cfg.seed)

    survivors = np.arange(n, dtype=np.int64)
    pulls_per_arm = np.zeros(n, dtype=np.int64)
    fresh_pulls = 0
    trace: list[RoundTrace] = []
    chosen = -1

    if cfg.reuse_past:
        seen = np.zeros(n, dtype=bool)
        sums = np.zeros(n, dtype=np.float64)
        union_size = 0

    for r in range(L):
        s = len(survivors)
        t = round_budget(T, n, s)
        refs = sample_without_replacement(rng, n, t)
        exact = t == n

        if cfg.reuse_past:
            fresh = refs[~seen[refs]]
            if len(fresh):
                sums[survivors] += sum_block(ds, metric, survivors, fresh, recorder)
                seen[fresh] = True
                union_size += len(fresh)
                pulls_per_arm[survivors] += len(fresh)
                fresh_pulls += s * len(fresh)
            theta = sums[survivors] / union_size
        else:
            theta = sum_block(ds, metric, survivors, refs, recorder) / t
            pulls_per_arm[survivors] += t
            fresh_pulls += s * t

        trace.append(RoundTrace(r, s, t, refs, exact))
        if exact:
            chosen = int(survivors[int(np.argmin(theta))])
            break
        survivors = _smallest(survivors, theta, (s + 1) // 2)

    if chosen < 0:
        # ceil-halving from n reaches a single arm in ceil(log2 n) rounds
        chosen = int(survivors[0])

    return RunResult(
        chosen, fresh_pulls, pulls_per_arm, trace, time.perf_counter() - start, below
    )


def doubling_corrsh(
    ds: Dataset,
    metric: str,
    T0: int,
    seed: int = 0,
    reuse_past: bool = True,
) -> RunResult:
    """Anytime wrapper: rerun at budgets T0, 2*T0, ... until two consecutive
    runs pick the same arm.

    Run budgets are capped at n^2 * ceil(log2 n), where a run is exact, so
    two consecutive capped runs always agree and termination is guaranteed.
    Each run gets a fresh seed derived from (seed, run index) and no samples
    are shared between runs. The returned trace is the concatenation of the
    per-run traces (round indices restart at 0 for each run); pulls are
    totals across all runs.
    """
    if T0 < 1:
        raise ValueError("T0 must be >= 1")
    start = time.perf_counter()
    n = ds.n
    cap = n * n * ceil_log2(n)
    total = 0
    pulls_per_arm = np.zeros(n, dtype=np.int64)
    trace: list[RoundTrace] = []
    prev = -1
    k = 0
    while True:
        budget = min(T0 * (1 << k), cap)
        res = corr_seq_halving(
            ds, metric, CorrShConfig(budget, derive_seed(seed, k), reuse_past)
        )
        total += res.fresh_pulls
        pulls_per_arm += res.pulls_per_arm
        trace.extend(res.trace)
        if res.chosen == prev:
            return RunResult(
                res.chosen,
                total,
                pulls_per_arm,
                trace,
                time.perf_counter() - start,
                res.below_theorem_regime,
            )
        prev = res.chosen
        k += 1
