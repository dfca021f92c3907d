"""Dataset loading, generation, and subsampling.

Points live in a Dataset with either dense row-major storage or sparse CSR
rows (strictly increasing column indices per row). File loaders store values
as float32; synthetic generators emit float64 so that exact geometric
constructions (unit circle) hold to 1e-12. All distance arithmetic upcasts
to float64 regardless of storage dtype.

Formats:
  csv     one point per line, comma-separated values
  bin     magic "MEDB", version byte 1, u64-LE n, u64-LE d, n*d f32-LE row-major
  sparse  text header "n d nnz", then nnz lines "row col value", 0-based
"""

from __future__ import annotations

import gzip
import math
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .sampling import make_rng, sample_without_replacement

_BIN_MAGIC = b"MEDB"
_BIN_VERSION = 1

SYNTHETIC_KINDS = ("gaussian-clusters", "line-1d", "unit-circle-plus-center")


class FormatError(ValueError):
    """Raised for malformed dataset files; message carries the line number."""


@dataclass
class Dataset:
    """n points of dimension d, dense or sparse storage (never both)."""

    n: int
    d: int
    dense: np.ndarray | None = None
    indptr: np.ndarray | None = None
    indices: np.ndarray | None = None
    values: np.ndarray | None = None
    labels: list[str] | None = None
    # per-row l2 norms, filled lazily by the metrics module for cosine
    _row_norms: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.n < 1 or self.d < 1:
            raise ValueError(f"need n >= 1 and d >= 1, got n={self.n}, d={self.d}")
        if self.dense is not None:
            if self.dense.shape != (self.n, self.d):
                raise ValueError(
                    f"dense storage shape {self.dense.shape} != ({self.n}, {self.d})"
                )
        elif self.indptr is None or self.indices is None or self.values is None:
            raise ValueError("dataset needs dense or sparse storage")
        if self.labels is not None and len(self.labels) != self.n:
            raise ValueError("labels length must equal n")

    @property
    def is_sparse(self) -> bool:
        return self.dense is None

    @classmethod
    def from_dense(cls, arr: np.ndarray, labels: list[str] | None = None) -> "Dataset":
        arr = np.ascontiguousarray(arr)
        if arr.ndim != 2:
            raise ValueError("dense data must be 2-d")
        return cls(n=arr.shape[0], d=arr.shape[1], dense=arr, labels=labels)

    @classmethod
    def from_sparse(
        cls,
        n: int,
        d: int,
        indptr: np.ndarray,
        indices: np.ndarray,
        values: np.ndarray,
        labels: list[str] | None = None,
    ) -> "Dataset":
        indptr = np.asarray(indptr, dtype=np.int64)
        indices = np.asarray(indices, dtype=np.int64)
        values = np.asarray(values, dtype=np.float32)
        if indptr.shape != (n + 1,) or indptr[0] != 0 or indptr[-1] != len(indices):
            raise ValueError("malformed indptr")
        if len(indices) != len(values):
            raise ValueError("indices/values length mismatch")
        for i in range(n):
            cols = indices[indptr[i] : indptr[i + 1]]
            if len(cols) and (np.any(np.diff(cols) <= 0) or cols[0] < 0 or cols[-1] >= d):
                raise ValueError(f"row {i}: column indices must be strictly increasing in [0, d)")
        return cls(n=n, d=d, indptr=indptr, indices=indices, values=values, labels=labels)

    def row_dense(self, i: int) -> np.ndarray:
        """Row i as a dense float64 vector (copy for sparse storage)."""
        if not 0 <= i < self.n:
            raise IndexError(f"point index {i} out of range for n={self.n}")
        if self.dense is not None:
            return self.dense[i].astype(np.float64)
        out = np.zeros(self.d, dtype=np.float64)
        sl = slice(self.indptr[i], self.indptr[i + 1])
        out[self.indices[sl]] = self.values[sl]
        return out


def to_dense(ds: Dataset) -> Dataset:
    """Densified copy (identity values; float32 when source is sparse)."""
    if not ds.is_sparse:
        return Dataset.from_dense(ds.dense.copy(), ds.labels)
    arr = np.zeros((ds.n, ds.d), dtype=np.float32)
    for i in range(ds.n):
        sl = slice(ds.indptr[i], ds.indptr[i + 1])
        arr[i, ds.indices[sl]] = ds.values[sl]
    return Dataset.from_dense(arr, ds.labels)


def to_sparse(ds: Dataset) -> Dataset:
    """Sparse copy keeping only nonzero entries (same arithmetic values)."""
    if ds.is_sparse:
        return Dataset.from_sparse(
            ds.n, ds.d, ds.indptr.copy(), ds.indices.copy(), ds.values.copy(), ds.labels
        )
    indptr = [0]
    cols: list[int] = []
    vals: list[float] = []
    arr = ds.dense
    for i in range(ds.n):
        nz = np.nonzero(arr[i])[0]
        cols.extend(int(c) for c in nz)
        vals.extend(arr[i, nz].tolist())
        indptr.append(len(cols))
    return Dataset.from_sparse(
        ds.n,
        ds.d,
        np.array(indptr, dtype=np.int64),
        np.array(cols, dtype=np.int64),
        np.array(vals, dtype=np.float32),
        ds.labels,
    )


# ---------------------------------------------------------------- loaders


def load_dense(path: str | Path, format: str = "csv") -> Dataset:
    """Load a dense dataset from csv or bin. Row order is preserved."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset file not found: {path}")
    if format == "csv":
        return _load_csv(path)
    if format == "bin":
        return _load_bin(path)
    raise ValueError(f"unknown dense format {format!r} (expected csv or bin)")


def _load_csv(path: Path) -> Dataset:
    rows: list[np.ndarray] = []
    d = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            tokens = [t.strip() for t in line.split(",")]
            try:
                vals = np.array([float(t) for t in tokens], dtype=np.float32)
            except ValueError:
                raise FormatError(f"{path} line {lineno}: non-numeric token") from None
            if d is None:
                d = len(vals)
            elif len(vals) != d:
                raise FormatError(
                    f"{path} line {lineno}: expected {d} values, got {len(vals)}"
                )
            rows.append(vals)
    if not rows:
        raise FormatError(f"{path}: empty file")
    return Dataset.from_dense(np.vstack(rows))


def _load_bin(path: Path) -> Dataset:
    raw = path.read_bytes()
    if len(raw) < 21 or raw[:4] != _BIN_MAGIC:
        raise FormatError(f"{path}: not a MEDB file")
    if raw[4] != _BIN_VERSION:
        raise FormatError(f"{path}: unsupported MEDB version {raw[4]}")
    n, d = struct.unpack_from("<QQ", raw, 5)
    expected = 21 + 4 * n * d
    if len(raw) != expected:
        raise FormatError(f"{path}: payload is {len(raw)} bytes, expected {expected}")
    arr = np.frombuffer(raw, dtype="<f4", count=n * d, offset=21).reshape(n, d)
    return Dataset.from_dense(arr.copy())


def load_sparse(path: str | Path) -> Dataset:
    """Load the text triplet format. Rows come out sorted by column index."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"dataset file not found: {path}")
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 3:
            raise FormatError(f"{path} line 1: expected header 'n d nnz'")
        try:
            n, d, nnz = (int(t) for t in header)
        except ValueError:
            raise FormatError(f"{path} line 1: non-integer header field") from None
        per_row: list[list[tuple[int, float]]] = [[] for _ in range(n)]
        count = 0
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise FormatError(f"{path} line {lineno}: expected 'row col value'")
            try:
                r, c, v = int(parts[0]), int(parts[1]), float(parts[2])
            except ValueError:
                raise FormatError(f"{path} line {lineno}: non-numeric token") from None
            if not 0 <= r < n:
                raise FormatError(f"{path} line {lineno}: row {r} out of range [0, {n})")
            if not 0 <= c < d:
                raise FormatError(f"{path} line {lineno}: col {c} out of range [0, {d})")
            per_row[r].append((c, v))
            count += 1
    if count != nnz:
        raise FormatError(f"{path}: header says nnz={nnz} but found {count} entries")
    indptr = np.zeros(n + 1, dtype=np.int64)
    cols: list[int] = []
    vals: list[float] = []
    for i, entries in enumerate(per_row):
        entries.sort()
        for j in range(1, len(entries)):
            if entries[j][0] == entries[j - 1][0]:
                raise FormatError(f"{path}: duplicate entry for (row {i}, col {entries[j][0]})")
        cols.extend(c for c, _ in entries)
        vals.extend(v for _, v in entries)
        indptr[i + 1] = len(cols)
    return Dataset.from_sparse(
        n, d, indptr, np.array(cols, dtype=np.int64), np.array(vals, dtype=np.float32)
    )


def save_dense(ds: Dataset, path: str | Path, format: str = "csv") -> None:
    """Write csv (%.9g per value, round-trips float32 exactly) or bin."""
    path = Path(path)
    arr = ds.dense if not ds.is_sparse else to_dense(ds).dense
    if format == "csv":
        with open(path, "w", encoding="utf-8") as fh:
            for row in arr:
                fh.write(",".join("%.9g" % v for v in row))
                fh.write("\n")
    elif format == "bin":
        with open(path, "wb") as fh:
            fh.write(_BIN_MAGIC)
            fh.write(bytes([_BIN_VERSION]))
            fh.write(struct.pack("<QQ", ds.n, ds.d))
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    else:
        raise ValueError(f"unknown dense format {format!r} (expected csv or bin)")


def save_sparse(ds: Dataset, path: str | Path) -> None:
    if not ds.is_sparse:
        ds = to_sparse(ds)
    with open(Path(path), "w", encoding="utf-8") as fh:
        fh.write(f"{ds.n} {ds.d} {len(ds.values)}\n")
        for i in range(ds.n):
            for p in range(ds.indptr[i], ds.indptr[i + 1]):
                fh.write("%d %d %.9g\n" % (i, ds.indices[p], ds.values[p]))


# ----------------------------------------------------------- generation


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a deterministic synthetic dataset.

    kind-specific fields: clusters/spread/center_spread for gaussian-clusters,
    values for line-1d (explicit coordinates; defaults to 0..n-1).
    d may be left 0 to take the kind's natural dimension.
    """

    kind: str
    n: int
    d: int = 0
    seed: int = 0
    clusters: int = 3
    spread: float = 1.0
    center_spread: float = 5.0
    values: tuple[float, ...] | None = None

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "n": self.n, "d": self.d, "seed": self.seed}
        if self.kind == "gaussian-clusters":
            out.update(
                clusters=self.clusters, spread=self.spread, center_spread=self.center_spread
            )
        if self.kind == "line-1d" and self.values is not None:
            out["values"] = list(self.values)
        return out


def gen_synthetic(spec: SyntheticSpec) -> Dataset:
    """Generate a dataset; identical spec+seed gives byte-identical output."""
    if spec.kind not in SYNTHETIC_KINDS:
        raise ValueError(f"unsupported synthetic kind {spec.kind!r}")
    if spec.n < 1:
        raise ValueError("n must be >= 1")

    if spec.kind == "line-1d":
        if spec.d not in (0, 1):
            raise ValueError("line-1d datasets are 1-dimensional")
        if spec.values is not None:
            if len(spec.values) != spec.n:
                raise ValueError(f"line-1d: n={spec.n} but {len(spec.values)} values given")
            col = np.array(spec.values, dtype=np.float64)
        else:
            col = np.arange(spec.n, dtype=np.float64)
        return Dataset.from_dense(col.reshape(-1, 1))

    if spec.kind == "unit-circle-plus-center":
        if spec.n < 4:
            raise ValueError("unit-circle-plus-center needs n >= 4")
        if spec.d not in (0, 2):
            raise ValueError("unit-circle-plus-center datasets are 2-dimensional")
        pts = np.zeros((spec.n, 2), dtype=np.float64)
        angles = 2.0 * math.pi * np.arange(spec.n - 1, dtype=np.float64) / (spec.n - 1)
        pts[1:, 0] = np.cos(angles)
        pts[1:, 1] = np.sin(angles)
        return Dataset.from_dense(pts)

    # gaussian-clusters
    if spec.d < 1:
        raise ValueError("gaussian-clusters needs an explicit d >= 1")
    if spec.clusters < 1:
        raise ValueError("clusters must be >= 1")
    rng = make_rng(spec.seed)
    centers = rng.standard_normal((spec.clusters, spec.d)) * spec.center_spread
    assign = rng.integers(0, spec.clusters, size=spec.n)
    pts = centers[assign] + rng.standard_normal((spec.n, spec.d)) * spec.spread
    return Dataset.from_dense(pts)


def subsample(ds: Dataset, m: int, seed: int) -> Dataset:
    """m distinct points drawn uniformly without replacement, order preserved."""
    if not 1 <= m <= ds.n:
        raise ValueError(f"subsample size {m} out of range [1, {ds.n}]")
    keep = sample_without_replacement(make_rng(seed), ds.n, m)
    labels = [ds.labels[i] for i in keep] if ds.labels is not None else None
    if not ds.is_sparse:
        return Dataset.from_dense(ds.dense[keep].copy(), labels)
    indptr = np.zeros(m + 1, dtype=np.int64)
    chunks_c = []
    chunks_v = []
    for out_i, i in enumerate(keep):
        sl = slice(ds.indptr[i], ds.indptr[i + 1])
        chunks_c.append(ds.indices[sl])
        chunks_v.append(ds.values[sl])
        indptr[out_i + 1] = indptr[out_i] + (ds.indptr[i + 1] - ds.indptr[i])
    cols = np.concatenate(chunks_c) if chunks_c else np.empty(0, dtype=np.int64)
    vals = np.concatenate(chunks_v) if chunks_v else np.empty(0, dtype=np.float32)
    return Dataset.from_sparse(m, ds.d, indptr, cols, vals, labels)


# ------------------------------------------------------------- IDX files

_IDX_DTYPES = {
    0x08: np.dtype(">u1"),
    0x09: np.dtype(">i1"),
    0x0B: np.dtype(">i2"),
    0x0C: np.dtype(">i4"),
    0x0D: np.dtype(">f4"),
    0x0E: np.dtype(">f8"),
}


def load_idx(path: str | Path) -> np.ndarray:
    """Read an IDX array file (the MNIST container format), gzipped or raw."""
    path = Path(path)
    with open(path, "rb") as probe:
        gzipped = probe.read(2) == b"\x1f\x8b"
    opener = gzip.open if gzipped else open
    with opener(path, "rb") as fh:
        magic = fh.read(4)
        if len(magic) != 4 or magic[0] != 0 or magic[1] != 0:
            raise FormatError(f"{path}: bad IDX magic {magic!r}")
        dtype = _IDX_DTYPES.get(magic[2])
        if dtype is None:
            raise FormatError(f"{path}: unknown IDX dtype code {magic[2]:#x}")
        ndim = magic[3]
        dims = struct.unpack(">" + "I" * ndim, fh.read(4 * ndim))
        data = fh.read()
    count = int(np.prod(dims))
    if len(data) != count * dtype.itemsize:
        raise FormatError(f"{path}: truncated IDX payload")
    return np.frombuffer(data, dtype=dtype, count=count).reshape(dims)


def digit_dataset(
    image_paths: list[str | Path], label_paths: list[str | Path], digit: int
) -> Dataset:
    """All images of one digit from IDX image/label file pairs, flattened.

    Pixel values are kept as raw 0..255 floats; every algorithm here is
    scale-invariant so normalization would not change any answer.
    """
    if len(image_paths) != len(label_paths):
        raise ValueError("need one label file per image file")
    blocks = []
    for ipath, lpath in zip(image_paths, label_paths):
        images = load_idx(ipath)
        labels = load_idx(lpath)
        if images.shape[0] != labels.shape[0]:
            raise ValueError(f"{ipath}: {images.shape[0]} images vs {labels.shape[0]} labels")
        mask = labels == digit
        blocks.append(images[mask].reshape(mask.sum(), -1).astype(np.float32))
    arr = np.vstack(blocks)
    if arr.shape[0] == 0:
        raise ValueError(f"no images of digit {digit} found")
    return Dataset.from_dense(arr)
