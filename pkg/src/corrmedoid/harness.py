"""Seeded multi-trial experiment runner and result serialization.

An ExperimentSpec pins everything: dataset (path or synthetic recipe),
metric, algorithm, a strictly increasing budget grid in pulls-per-arm
multipliers (total budget T = round(x * n)), and a seed range [s0, s1).
Each (budget, trial) cell runs one independent algorithm invocation whose
RNG seed is derive_seed(s0, budget_index, trial_index); the derivation is
a splitmix64 chain, so trials never share streams and the result is
byte-identical however many worker threads execute it.

Wall-clock means are measured but serialized as JSON null / empty CSV cell
unless ExperimentSpec.timing is set: emitted reports are byte-stable across
repeated runs by default, and timing is opt-in for humans.
"""

from __future__ import annotations

import json
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import metadata
from pathlib import Path

import numpy as np

from .baselines import exact_medoid, meddit, rand_medoid
from .dataset import Dataset, SyntheticSpec, gen_synthetic, load_dense, load_sparse
from .halving import CorrShConfig, corr_seq_halving, doubling_corrsh
from .metrics import VALID_METRICS
from .sampling import derive_seed

VALID_ALGOS = ("corrsh", "corrsh-doubling", "rand", "meddit", "exact")

# majority-vote ground truth above this size (exact costs n^2 evaluations)
EXACT_TRUTH_MAX_N = 25_000

CSV_HEADER = "budget_x,trials,failures,error_prob,mean_pulls_per_arm,mean_wall_ms"


def _version() -> str:
    try:
        return "corrmedoid " + metadata.version("corrmedoid")
    except metadata.PackageNotFoundError:
        return "corrmedoid 0.1.0"


@dataclass(frozen=True)
class ExperimentSpec:
    metric: str
    algo: str
    budgets_x: tuple[float, ...]
    seed_start: int = 0
    seed_end: int = 1
    data_path: str | None = None
    data_format: str | None = None  # csv | bin | sparse; inferred from suffix if None
    synthetic: SyntheticSpec | None = None
    truth: str = "auto"  # auto | exact | majority | provided
    truth_index: int | None = None
    reuse_past: bool = True
    delta: float | None = None  # meddit; defaults to 1/n at run time
    init_pulls: int = 16
    include_per_trial: bool = False
    timing: bool = False
    threads: int = 1

    def __post_init__(self) -> None:
        if self.metric not in VALID_METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.algo not in VALID_ALGOS:
            raise ValueError(f"unknown algo {self.algo!r}")
        if not self.budgets_x:
            raise ValueError("budget grid is empty")
        if any(b <= 0 for b in self.budgets_x):
            raise ValueError("budget multipliers must be positive")
        if list(self.budgets_x) != sorted(set(self.budgets_x)):
            raise ValueError("budget grid must be strictly increasing")
        if self.seed_end <= self.seed_start:
            raise ValueError("seed range is empty")
        if self.truth == "provided" and self.truth_index is None:
            raise ValueError("truth='provided' needs truth_index")
        if self.truth not in ("auto", "exact", "majority", "provided"):
            raise ValueError(f"unknown truth mode {self.truth!r}")
        if (self.data_path is None) == (self.synthetic is None):
            raise ValueError("give exactly one of data_path or synthetic")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")

    def to_dict(self) -> dict:
        out = {
            "metric": self.metric,
            "algo": self.algo,
            "budgets_x": list(self.budgets_x),
            "seed_start": self.seed_start,
            "seed_end": self.seed_end,
            "truth": self.truth,
        }
        if self.data_path is not None:
            out["data_path"] = self.data_path
            if self.data_format is not None:
                out["data_format"] = self.data_format
        if self.synthetic is not None:
            out["synthetic"] = self.synthetic.to_dict()
        if self.truth_index is not None:
            out["truth_index"] = self.truth_index
        if self.algo in ("corrsh", "corrsh-doubling"):
            out["reuse_past"] = self.reuse_past
        if self.algo == "meddit":
            out["delta"] = self.delta
            out["init_pulls"] = self.init_pulls
        return out


@dataclass
class CurvePoint:
    budget_x: float
    trials: int
    failures: int
    error_prob: float
    mean_pulls_per_arm: float
    mean_wall_ms: float | None

    def to_dict(self) -> dict:
        return {
            "budget_x": self.budget_x,
            "trials": self.trials,
            "failures": self.failures,
            "error_prob": self.error_prob,
            "mean_pulls_per_arm": self.mean_pulls_per_arm,
            "mean_wall_ms": self.mean_wall_ms,
        }


@dataclass
class TrialRecord:
    seed: int
    budget_x: float
    chosen: int
    correct: bool
    fresh_pulls: int

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "budget_x": self.budget_x,
            "chosen": self.chosen,
            "correct": self.correct,
            "fresh_pulls": self.fresh_pulls,
        }


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    truth_mode: str
    truth_index: int
    curves: list[CurvePoint] = field(default_factory=list)
    per_trial: list[TrialRecord] | None = None
    version: str = field(default_factory=_version)

    def to_dict(self) -> dict:
        out = {
            "spec": self.spec.to_dict(),
            "version": self.version,
            "ground_truth": {"mode": self.truth_mode, "index": self.truth_index},
            "curves": [c.to_dict() for c in self.curves],
        }
        if self.per_trial is not None:
            out["per_trial"] = [t.to_dict() for t in self.per_trial]
        return out


def resolve_dataset(spec: ExperimentSpec) -> Dataset:
    if spec.synthetic is not None:
        return gen_synthetic(spec.synthetic)
    fmt = spec.data_format
    if fmt is None:
        suffix = Path(spec.data_path).suffix.lower()
        fmt = {".csv": "csv", ".bin": "bin", ".medb": "bin", ".sparse": "sparse"}.get(suffix)
        if fmt is None:
            raise ValueError(
                f"cannot infer format from {spec.data_path!r}; set data_format"
            )
    if fmt == "sparse":
        return load_sparse(spec.data_path)
    return load_dense(spec.data_path, fmt)


def _run_one(ds: Dataset, spec: ExperimentSpec, x: float, seed: int):
    n = ds.n
    T = max(1, round(x * n))
    if spec.algo == "corrsh":
        return corr_seq_halving(ds, spec.metric, CorrShConfig(T, seed, spec.reuse_past))
    if spec.algo == "corrsh-doubling":
        return doubling_corrsh(ds, spec.metric, T, seed, spec.reuse_past)
    if spec.algo == "rand":
        k = min(max(1, round(x)), n)
        return rand_medoid(ds, spec.metric, k, seed)
    if spec.algo == "meddit":
        delta = spec.delta if spec.delta is not None else 1.0 / n
        return meddit(ds, spec.metric, delta, max(n, T), seed, spec.init_pulls)
    # exact: budget-independent; report the definitional n pulls per arm
    t0 = time.perf_counter()
    idx, _ = exact_medoid(ds, spec.metric)
    from .halving import RunResult

    return RunResult(
        chosen=idx,
        fresh_pulls=n * n,
        pulls_per_arm=np.full(n, n, dtype=np.int64),
        trace=[],
        wall_s=time.perf_counter() - t0,
    )


def run_experiment(spec: ExperimentSpec, ds: Dataset | None = None) -> ExperimentResult:
    """One trial per (budget, seed) cell; deterministic for any thread count."""
    if ds is None:
        ds = resolve_dataset(spec)
    n = ds.n
    trials = spec.seed_end - spec.seed_start
    cells = [(b, t) for b in range(len(spec.budgets_x)) for t in range(trials)]

    def job(cell):
        b, t = cell
        return _run_one(ds, spec, spec.budgets_x[b], derive_seed(spec.seed_start, b, t))

    if spec.threads > 1:
        with ThreadPoolExecutor(max_workers=spec.threads) as pool:
            results = list(pool.map(job, cells))
    else:
        results = [job(c) for c in cells]

    truth_mode = spec.truth
    if truth_mode == "auto":
        truth_mode = "exact" if n <= EXACT_TRUTH_MAX_N else "majority"
    if truth_mode == "exact":
        truth_index, _ = exact_medoid(ds, spec.metric, threads=spec.threads)
    elif truth_mode == "majority":
        votes = Counter(r.chosen for r in results)
        top = max(votes.values())
        truth_index = min(i for i, c in votes.items() if c == top)
    else:
        truth_index = spec.truth_index

    curves: list[CurvePoint] = []
    per_trial: list[TrialRecord] | None = [] if spec.include_per_trial else None
    for b, x in enumerate(spec.budgets_x):
        rows = results[b * trials : (b + 1) * trials]
        failures = sum(1 for r in rows if r.chosen != truth_index)
        mean_pulls = float(np.mean([r.fresh_pulls for r in rows])) / n
        wall = (
            float(np.mean([r.wall_s for r in rows])) * 1000.0 if spec.timing else None
        )
        curves.append(CurvePoint(x, trials, failures, failures / trials, mean_pulls, wall))
        if per_trial is not None:
            for t, r in enumerate(rows):
                per_trial.append(
                    TrialRecord(
                        spec.seed_start + t, x, r.chosen, r.chosen == truth_index,
                        r.fresh_pulls,
                    )
                )
    return ExperimentResult(spec, truth_mode, int(truth_index), curves, per_trial)


def zero_error_budget(curves: list[CurvePoint]) -> float | None:
    """Smallest grid budget with zero failures there AND at every larger
    budget; None when the grid tail never goes clean."""
    result = None
    for c in curves:
        if c.failures == 0:
            if result is None:
                result = c.budget_x
        else:
            result = None
    return result


def find_zero_error_budget(
    spec: ExperimentSpec, max_multiplier: float | None = None, ds: Dataset | None = None
) -> float | None:
    if max_multiplier is not None and spec.budgets_x[-1] < max_multiplier:
        raise ValueError(
            f"budget grid tops out at {spec.budgets_x[-1]}, below {max_multiplier}"
        )
    return zero_error_budget(run_experiment(spec, ds).curves)


# ------------------------------------------------------------ serialization


def to_json_str(result: ExperimentResult) -> str:
    return json.dumps(result.to_dict(), indent=2) + "\n"


def _csv_cell(v) -> str:
    return "" if v is None else repr(v) if isinstance(v, float) else str(v)


def to_csv_str(result: ExperimentResult) -> str:
    lines = [CSV_HEADER]
    for c in result.curves:
        lines.append(
            ",".join(
                _csv_cell(v)
                for v in (
                    c.budget_x, c.trials, c.failures, c.error_prob,
                    c.mean_pulls_per_arm, c.mean_wall_ms,
                )
            )
        )
    return "\n".join(lines) + "\n"


def emit(result: ExperimentResult, path: str | Path, format: str = "json") -> None:
    """Write the experiment report; json follows the documented schema, csv
    is one aggregate row per budget under CSV_HEADER."""
    if format == "json":
        text = to_json_str(result)
    elif format == "csv":
        text = to_csv_str(result)
    else:
        raise ValueError(f"unknown output format {format!r} (expected json or csv)")
    Path(path).write_text(text, encoding="utf-8")
