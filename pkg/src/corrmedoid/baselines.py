"""Reference algorithms: exact O(n^2) medoid, RAND, and a Med-dit-style
UCB routine.

RAND estimates every arm from one shared reference subset drawn without
replacement. The UCB routine samples references with replacement,
independently per arm, and adaptively pulls whichever arm currently has the
smallest lower confidence bound; an arm pulled n times is frozen at its
exactly computed mean. Both report the same RunResult type as the halving
algorithm.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from numba import njit

from .dataset import Dataset
from .halving import RoundTrace, RunResult
from .metrics import (
    Recorder,
    _pair_dense,
    _pair_sparse,
    metric_code,
    row_norms,
    sum_block,
    theta_all,
)
from .sampling import make_rng, sample_without_replacement

_EMPTY_F64 = np.empty(0, dtype=np.float64)

# Draws for the UCB routine are taken from the trial's generator in fixed
# blocks of this size, so results do not depend on how many refills happen.
MEDDIT_CHUNK = 1 << 16


def exact_medoid(
    ds: Dataset, metric: str, recorder: Recorder | None = None, threads: int = 1
) -> tuple[int, np.ndarray]:
    """argmin of the exact mean distance, ties to the lower index, plus the
    full theta vector. n^2 distance evaluations (n per arm)."""
    if threads <= 1 or ds.n < 256:
        theta = theta_all(ds, metric, recorder=recorder)
    else:
        arms = np.arange(ds.n, dtype=np.int64)
        chunks = np.array_split(arms, threads * 4)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(
                pool.map(lambda c: theta_all(ds, metric, c, recorder=recorder), chunks)
            )
        theta = np.concatenate(parts)
    return int(np.argmin(theta)), theta


def rand_medoid(
    ds: Dataset, metric: str, k: int, seed: int = 0, recorder: Recorder | None = None
) -> RunResult:
    """Estimate every theta from one shared reference set of size k."""
    start = time.perf_counter()
    n = ds.n
    if not 1 <= k <= n:
        raise ValueError(f"reference count k={k} out of range [1, {n}]")
    refs = sample_without_replacement(make_rng(seed), n, k)
    arms = np.arange(n, dtype=np.int64)
    theta = sum_block(ds, metric, arms, refs, recorder) / k
    return RunResult(
        chosen=int(np.argmin(theta)),
        fresh_pulls=n * k,
        pulls_per_arm=np.full(n, k, dtype=np.int64),
        trace=[RoundTrace(0, n, k, refs, k == n)],
        wall_s=time.perf_counter() - start,
    )


@njit(cache=True, nogil=True)
def _pair_any(X, indptr, indices, values, sparse_flag, i, j, code, norms):
    if sparse_flag:
        return _pair_sparse(indptr, indices, values, i, j, code, norms)
    return _pair_dense(X, i, j, code, norms)


@njit(cache=True, nogil=True)
def _welford_add(state_f, v):
    # state_f = [count, mean, m2]; sigma^2 = m2/count (population variance)
    state_f[0] += 1.0
    d = v - state_f[1]
    state_f[1] += d / state_f[0]
    state_f[2] += d * (v - state_f[1])


@njit(cache=True, nogil=True)
def _freeze_arm(X, indptr, indices, values, sparse_flag, code, norms, n, i,
                theta, counts, frozen, state_f):
    # exact theta over all n references, ascending; costs n pulls
    acc = 0.0
    for j in range(n):
        v = _pair_any(X, indptr, indices, values, sparse_flag, i, j, code, norms)
        _welford_add(state_f, v)
        acc += v
    theta[i] = acc / n
    frozen[i] = 1
    counts[i] += n
    return n


@njit(cache=True, nogil=True)
def _meddit_init(X, indptr, indices, values, sparse_flag, code, norms, n,
                 init_refs, init_pulls, max_budget,
                 sums, theta, counts, frozen, state_f):
    spent = 0
    pos = 0
    for i in range(n):
        for _ in range(init_pulls):
            if spent >= max_budget:
                return spent
            j = init_refs[pos]
            pos += 1
            v = _pair_any(X, indptr, indices, values, sparse_flag, i, j, code, norms)
            sums[i] += v
            counts[i] += 1
            theta[i] = sums[i] / counts[i]
            _welford_add(state_f, v)
            spent += 1
        if counts[i] >= n and frozen[i] == 0 and spent + n <= max_budget:
            spent += _freeze_arm(X, indptr, indices, values, sparse_flag, code,
                                 norms, n, i, theta, counts, frozen, state_f)
    return spent


@njit(cache=True, nogil=True)
def _meddit_step(X, indptr, indices, values, sparse_flag, code, norms, n,
                 chunk, spent, max_budget, ln_term,
                 sums, theta, counts, frozen, state_f):
    # Runs single pulls until stopped (status 1) or out of draws (status 0).
    pos = 0
    while True:
        sigma = 0.0
        if state_f[0] > 0.0:
            var = state_f[2] / state_f[0]
            if var > 0.0:
                sigma = np.sqrt(var)

        # candidate winner: smallest upper bound among arms with estimates
        best_u = np.inf
        best_u_arm = -1
        any_unpulled = False
        for i in range(n):
            if counts[i] == 0:
                any_unpulled = True
                continue
            c = 0.0
            if frozen[i] == 0:
                c = sigma * np.sqrt(2.0 * ln_term / counts[i])
            u = theta[i] + c
            if u < best_u:
                best_u = u
                best_u_arm = i

        # separation: winner's upper bound at or below every other lower bound
        if best_u_arm >= 0 and not any_unpulled:
            stop = True
            for i in range(n):
                if i == best_u_arm:
                    continue
                c = 0.0
                if frozen[i] == 0:
                    c = sigma * np.sqrt(2.0 * ln_term / counts[i])
                if theta[i] - c < best_u:
                    stop = False
                    break
            if stop:
                return spent, 1
        if spent >= max_budget:
            return spent, 1

        # pull the unfrozen arm with the smallest lower bound
        best_l = np.inf
        sel = -1
        for i in range(n):
            if frozen[i]:
                continue
            if counts[i] == 0:
                sel = i
                break
            l = theta[i] - sigma * np.sqrt(2.0 * ln_term / counts[i])
            if l < best_l:
                best_l = l
                sel = i
        if sel < 0:
            return spent, 1  # every arm frozen: estimates are exact

        if pos >= len(chunk):
            return spent, 0
        j = chunk[pos]
        pos += 1
        v = _pair_any(X, indptr, indices, values, sparse_flag, sel, j, code, norms)
        sums[sel] += v
        counts[sel] += 1
        theta[sel] = sums[sel] / counts[sel]
        _welford_add(state_f, v)
        spent += 1
        if counts[sel] >= n and frozen[sel] == 0 and spent + n <= max_budget:
            spent += _freeze_arm(X, indptr, indices, values, sparse_flag, code,
                                 norms, n, sel, theta, counts, frozen, state_f)


def meddit(
    ds: Dataset,
    metric: str,
    delta: float,
    max_budget: int,
    seed: int = 0,
    init_pulls: int = 16,
) -> RunResult:
    """UCB medoid search with per-arm with-replacement reference sampling.

    Every arm starts with init_pulls samples; afterwards the arm with the
    smallest theta_hat - C is pulled, C = sigma_hat * sqrt(2 ln(2n/delta) / T_i)
    with sigma_hat the running standard deviation of all samples seen (the
    exact-freeze sweeps included). An arm reaching n pulls is frozen at its
    exact theta (n more pulls, ascending reference order, skipped if the
    remaining budget cannot cover them). Stops when the smallest upper bound
    is at or below every other arm's lower bound, or at max_budget.
    """
    start = time.perf_counter()
    n = ds.n
    if not 0.0 < delta < 1.0:
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    if max_budget < n:
        raise ValueError(f"max_budget {max_budget} < n {n}")
    if init_pulls < 1:
        raise ValueError("init_pulls must be >= 1")

    code = metric_code(metric)
    norms = row_norms(ds) if metric == "cosine" else _EMPTY_F64
    if ds.is_sparse:
        X = np.empty((0, 0), dtype=np.float32)
        indptr, indices, values = ds.indptr, ds.indices, ds.values
        sparse_flag = True
    else:
        X = ds.dense
        indptr = np.empty(0, dtype=np.int64)
        indices = np.empty(0, dtype=np.int64)
        values = np.empty(0, dtype=np.float32)
        sparse_flag = False

    sums = np.zeros(n, dtype=np.float64)
    theta = np.full(n, np.inf, dtype=np.float64)
    counts = np.zeros(n, dtype=np.int64)
    frozen = np.zeros(n, dtype=np.uint8)
    state_f = np.zeros(3, dtype=np.float64)
    ln_term = math.log(2.0 * n / delta)

    rng = make_rng(seed)
    init_refs = rng.integers(0, n, size=n * init_pulls, dtype=np.int64)
    spent = _meddit_init(X, indptr, indices, values, sparse_flag, code, norms, n,
                         init_refs, init_pulls, max_budget,
                         sums, theta, counts, frozen, state_f)
    while True:
        chunk = rng.integers(0, n, size=MEDDIT_CHUNK, dtype=np.int64)
        spent, status = _meddit_step(X, indptr, indices, values, sparse_flag, code,
                                     norms, n, chunk, spent, max_budget, ln_term,
                                     sums, theta, counts, frozen, state_f)
        if status == 1:
            break

    return RunResult(
        chosen=int(np.argmin(theta)),
        fresh_pulls=int(spent),
        pulls_per_arm=counts,
        trace=[],
        wall_s=time.perf_counter() - start,
    )
