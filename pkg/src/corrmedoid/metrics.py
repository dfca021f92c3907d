"""Distance functions and exact centrality computation.

Three metrics: l1, l2, and cosine distance 1 - x.y/(|x||y|) with the
convention that a zero vector is at distance 1 from any nonzero vector and
0 from another zero vector.

Every kernel upcasts stored values to float64 per element and accumulates
in ascending column/reference order, so results are identical regardless
of storage dtype, worker count, or dense/sparse representation (cosine and
l1 agree bitwise between representations; l2 differs only through the same
arithmetic and agrees bitwise too). Distances between a point and itself
short-circuit to 0.0, which is what the math gives for l1/l2 and what the
zero-vector convention implies for cosine.

The per-row reference sums (`sum_block`) are the single accumulation path
shared by the exact computation and every sampling algorithm, so an
algorithm whose reference set happens to be all of range(n) reproduces
exact_medoid's theta values bit for bit.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
from numba import njit

from .dataset import Dataset

VALID_METRICS = ("l1", "l2", "cosine")

_L1, _L2, _COS = 0, 1, 2
_EMPTY_F64 = np.empty(0, dtype=np.float64)

Recorder = Callable[[np.ndarray, np.ndarray], None]


def metric_code(metric: str) -> int:
    try:
        return VALID_METRICS.index(metric)
    except ValueError:
        raise ValueError(
            f"unknown metric {metric!r} (expected one of {', '.join(VALID_METRICS)})"
        ) from None


@njit(cache=True, nogil=True)
def _pair_dense(X, i, j, code, norms):
    if i == j:
        return 0.0
    d = X.shape[1]
    if code == 0:
        s = 0.0
        for k in range(d):
            s += abs(X[i, k] * 1.0 - X[j, k] * 1.0)
        return s
    if code == 1:
        s = 0.0
        for k in range(d):
            dx = X[i, k] * 1.0 - X[j, k] * 1.0
            s += dx * dx
        return np.sqrt(s)
    ni = norms[i]
    nj = norms[j]
    if ni == 0.0 or nj == 0.0:
        if ni == 0.0 and nj == 0.0:
            return 0.0
        return 1.0
    dot = 0.0
    for k in range(d):
        dot += (X[i, k] * 1.0) * (X[j, k] * 1.0)
    v = 1.0 - dot / (ni * nj)
    return v if v > 0.0 else 0.0


@njit(cache=True, nogil=True)
def _pair_sparse(indptr, indices, values, i, j, code, norms):
    if i == j:
        return 0.0
    a, aend = indptr[i], indptr[i + 1]
    b, bend = indptr[j], indptr[j + 1]
    if code == 2:
        ni = norms[i]
        nj = norms[j]
        if ni == 0.0 or nj == 0.0:
            if ni == 0.0 and nj == 0.0:
                return 0.0
            return 1.0
        dot = 0.0
        while a < aend and b < bend:
            ca, cb = indices[a], indices[b]
            if ca == cb:
                dot += (values[a] * 1.0) * (values[b] * 1.0)
                a += 1
                b += 1
            elif ca < cb:
                a += 1
            else:
                b += 1
        v = 1.0 - dot / (ni * nj)
        return v if v > 0.0 else 0.0
    s = 0.0
    while a < aend and b < bend:
        ca, cb = indices[a], indices[b]
        if ca == cb:
            dx = values[a] * 1.0 - values[b] * 1.0
            a += 1
            b += 1
        elif ca < cb:
            dx = values[a] * 1.0
            a += 1
        else:
            dx = -(values[b] * 1.0)
            b += 1
        s += abs(dx) if code == 0 else dx * dx
    while a < aend:
        dx = values[a] * 1.0
        s += abs(dx) if code == 0 else dx * dx
        a += 1
    while b < bend:
        dx = values[b] * 1.0
        s += abs(dx) if code == 0 else dx * dx
        b += 1
    return s if code == 0 else np.sqrt(s)


@njit(cache=True, nogil=True)
def _sum_block_dense(X, rows, cols, code, norms, out):
    for a in range(len(rows)):
        i = rows[a]
        acc = 0.0
        for b in range(len(cols)):
            acc += _pair_dense(X, i, cols[b], code, norms)
        out[a] = acc


@njit(cache=True, nogil=True)
def _sum_block_sparse(indptr, indices, values, rows, cols, code, norms, out):
    for a in range(len(rows)):
        i = rows[a]
        acc = 0.0
        for b in range(len(cols)):
            acc += _pair_sparse(indptr, indices, values, i, cols[b], code, norms)
        out[a] = acc


@njit(cache=True, nogil=True)
def _mat_block_dense(X, rows, cols, code, norms, out):
    for a in range(len(rows)):
        i = rows[a]
        for b in range(len(cols)):
            out[a, b] = _pair_dense(X, i, cols[b], code, norms)


@njit(cache=True, nogil=True)
def _mat_block_sparse(indptr, indices, values, rows, cols, code, norms, out):
    for a in range(len(rows)):
        i = rows[a]
        for b in range(len(cols)):
            out[a, b] = _pair_sparse(indptr, indices, values, i, cols[b], code, norms)


@njit(cache=True, nogil=True)
def _pairs_dense(X, I, J, code, norms, out):
    for p in range(len(I)):
        out[p] = _pair_dense(X, I[p], J[p], code, norms)


@njit(cache=True, nogil=True)
def _pairs_sparse(indptr, indices, values, I, J, code, norms, out):
    for p in range(len(I)):
        out[p] = _pair_sparse(indptr, indices, values, I[p], J[p], code, norms)


@njit(cache=True, nogil=True)
def _norms_dense(X, out):
    for i in range(X.shape[0]):
        s = 0.0
        for k in range(X.shape[1]):
            v = X[i, k] * 1.0
            s += v * v
        out[i] = np.sqrt(s)


@njit(cache=True, nogil=True)
def _norms_sparse(indptr, values, out):
    for i in range(len(out)):
        s = 0.0
        for p in range(indptr[i], indptr[i + 1]):
            v = values[p] * 1.0
            s += v * v
        out[i] = np.sqrt(s)


def row_norms(ds: Dataset) -> np.ndarray:
    """Per-row l2 norms in float64, computed once and cached on the dataset."""
    if ds._row_norms is None:
        out = np.empty(ds.n, dtype=np.float64)
        if ds.is_sparse:
            _norms_sparse(ds.indptr, ds.values, out)
        else:
            _norms_dense(ds.dense, out)
        ds._row_norms = out
    return ds._row_norms


def _check_indices(name: str, idx: np.ndarray, n: int) -> np.ndarray:
    idx = np.ascontiguousarray(idx, dtype=np.int64)
    if len(idx) and (idx.min() < 0 or idx.max() >= n):
        raise IndexError(f"{name} contains indices outside [0, {n})")
    return idx


def _norms_for(ds: Dataset, code: int) -> np.ndarray:
    return row_norms(ds) if code == _COS else _EMPTY_F64


def dist(metric: str, x, y) -> float:
    """Distance between two dense vectors under the named metric."""
    code = metric_code(metric)
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape[0]} vs {y.shape[0]}")
    if code == _COS and np.array_equal(x, y):
        return 0.0
    X = np.empty((2, len(x)), dtype=np.float64)
    X[0] = x
    X[1] = y
    norms = _EMPTY_F64
    if code == _COS:
        norms = np.empty(2, dtype=np.float64)
        _norms_dense(X, norms)
    return float(_pair_dense(X, 0, 1, code, norms))


def sum_block(
    ds: Dataset,
    metric: str,
    rows: np.ndarray,
    cols: np.ndarray,
    recorder: Recorder | None = None,
) -> np.ndarray:
    """Sum of d(row, c) over the given reference columns, one value per row.

    cols must be in the order the caller wants accumulated; every caller in
    this package passes ascending index order. recorder, when given, is
    called once with (rows, cols) before evaluation; it exists so tests can
    audit exactly which distance evaluations an algorithm performs.
    """
    code = metric_code(metric)
    rows = _check_indices("rows", rows, ds.n)
    cols = _check_indices("cols", cols, ds.n)
    if recorder is not None:
        recorder(rows, cols)
    out = np.empty(len(rows), dtype=np.float64)
    norms = _norms_for(ds, code)
    if ds.is_sparse:
        _sum_block_sparse(ds.indptr, ds.indices, ds.values, rows, cols, code, norms, out)
    else:
        _sum_block_dense(ds.dense, rows, cols, code, norms, out)
    return out


def pairwise_block(ds: Dataset, metric: str, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Full |rows| x |cols| distance matrix in float64."""
    code = metric_code(metric)
    rows = _check_indices("rows", rows, ds.n)
    cols = _check_indices("cols", cols, ds.n)
    out = np.empty((len(rows), len(cols)), dtype=np.float64)
    norms = _norms_for(ds, code)
    if ds.is_sparse:
        _mat_block_sparse(ds.indptr, ds.indices, ds.values, rows, cols, code, norms, out)
    else:
        _mat_block_dense(ds.dense, rows, cols, code, norms, out)
    return out


def pairs_dist(ds: Dataset, metric: str, I: np.ndarray, J: np.ndarray) -> np.ndarray:
    """Elementwise distances d(I[p], J[p]) in float64."""
    code = metric_code(metric)
    I = _check_indices("I", I, ds.n)
    J = _check_indices("J", J, ds.n)
    if len(I) != len(J):
        raise ValueError("I and J must have equal length")
    out = np.empty(len(I), dtype=np.float64)
    norms = _norms_for(ds, code)
    if ds.is_sparse:
        _pairs_sparse(ds.indptr, ds.indices, ds.values, I, J, code, norms, out)
    else:
        _pairs_dense(ds.dense, I, J, code, norms, out)
    return out


def theta_all(
    ds: Dataset,
    metric: str,
    rows: np.ndarray | None = None,
    recorder: Recorder | None = None,
) -> np.ndarray:
    """Exact mean distance to all n points for each requested row."""
    if rows is None:
        rows = np.arange(ds.n, dtype=np.int64)
    all_refs = np.arange(ds.n, dtype=np.int64)
    return sum_block(ds, metric, rows, all_refs, recorder) / ds.n


def theta_exact(ds: Dataset, metric: str, i: int) -> float:
    """Average distance from point i to every point, self included (so /n)."""
    if not 0 <= i < ds.n:
        raise IndexError(f"point index {i} out of range for n={ds.n}")
    return float(theta_all(ds, metric, np.array([i], dtype=np.int64))[0])
