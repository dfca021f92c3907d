"""Command line front end.

Subcommands:
  gen         materialize a synthetic dataset to csv/bin/sparse
  medoid      run one algorithm once and print the chosen index
  bench       seeded error-probability sweep over a budget grid
  analyze     hardness quantities (sigma, rho, H2, H2~) plus bound checks
  import-idx  extract one digit class from IDX image/label files

Exit status: 0 on success, 1 on runtime failure (missing file, bad data,
refused gate), 2 on malformed arguments (argparse default).
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .analysis import hardness, rho_bounds_check
from .baselines import exact_medoid, meddit, rand_medoid
from .dataset import (
    FormatError,
    SyntheticSpec,
    digit_dataset,
    gen_synthetic,
    load_dense,
    load_sparse,
    save_dense,
    save_sparse,
)
from .halving import CorrShConfig, corr_seq_halving, doubling_corrsh
from .harness import (
    VALID_ALGOS,
    ExperimentSpec,
    emit,
    run_experiment,
    to_csv_str,
    to_json_str,
)
from .metrics import VALID_METRICS

ANALYZE_GATE_N = 30_000


def parse_seed_range(text: str) -> tuple[int, int]:
    """"A..B" (inclusive both ends) or a single integer."""
    if ".." in text:
        a_s, _, b_s = text.partition("..")
        a, b = int(a_s), int(b_s)
        if b < a:
            raise argparse.ArgumentTypeError(f"empty seed range {text!r}")
        return a, b + 1
    a = int(text)
    return a, a + 1


def _load(args):
    fmt = args.format
    if fmt is None:
        suffix = args.data.rsplit(".", 1)[-1].lower() if "." in args.data else ""
        fmt = {"csv": "csv", "bin": "bin", "medb": "bin", "sparse": "sparse"}.get(suffix)
        if fmt is None:
            raise ValueError(f"cannot infer format of {args.data!r}; pass --format")
    if fmt == "sparse":
        return load_sparse(args.data)
    return load_dense(args.data, fmt)


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="dataset file")
    p.add_argument("--format", choices=("csv", "bin", "sparse"), default=None,
                   help="file format (default: by extension)")
    p.add_argument("--metric", choices=VALID_METRICS, default="l2")


def _write_out(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as f:
            f.write(text)


def _cmd_gen(args) -> int:
    values = None
    if args.values is not None:
        values = tuple(float(v) for v in args.values.split(","))
    spec = SyntheticSpec(
        kind=args.kind, n=args.n, d=args.d, seed=args.seed, clusters=args.clusters,
        spread=args.spread, center_spread=args.center_spread, values=values,
    )
    ds = gen_synthetic(spec)
    if args.out_format == "sparse":
        save_sparse(ds, args.out)
    else:
        save_dense(ds, args.out, args.out_format)
    print(f"wrote {ds.n} x {ds.d} ({args.kind}) to {args.out}")
    return 0


def _cmd_medoid(args) -> int:
    ds = _load(args)
    n = ds.n
    record: dict = {"n": n, "metric": args.metric, "algo": args.algo}
    if args.algo == "exact":
        idx, theta = exact_medoid(ds, args.metric, threads=args.threads)
        record.update(chosen=int(idx), theta=float(theta[idx]),
                      fresh_pulls=n * n, pulls_per_arm=float(n))
    else:
        if args.algo == "rand":
            res = rand_medoid(ds, args.metric, min(args.k, n), seed=args.seed)
        elif args.algo == "meddit":
            delta = args.delta if args.delta is not None else 1.0 / n
            budget = max(n, round(args.budget_x * n))
            res = meddit(ds, args.metric, delta, budget, seed=args.seed,
                         init_pulls=args.init_pulls)
        elif args.algo == "corrsh-doubling":
            res = doubling_corrsh(ds, args.metric, max(1, round(args.budget_x * n)),
                                  seed=args.seed, reuse_past=not args.no_reuse)
        else:
            cfg = CorrShConfig(max(1, round(args.budget_x * n)), args.seed,
                               not args.no_reuse)
            res = corr_seq_halving(ds, args.metric, cfg)
        record.update(
            chosen=int(res.chosen),
            fresh_pulls=int(res.fresh_pulls),
            pulls_per_arm=float(res.fresh_pulls) / n,
            rounds=len(res.trace),
        )
        if res.below_theorem_regime:
            record["below_theorem_regime"] = True
    _write_out(json.dumps(record, indent=2) + "\n", args.out)
    return 0


def _cmd_bench(args) -> int:
    seed_start, seed_end = args.seeds
    truth, truth_index = args.truth, None
    if truth not in ("auto", "exact", "majority"):
        truth_index, truth = int(truth), "provided"
    spec = ExperimentSpec(
        metric=args.metric, algo=args.algo, budgets_x=tuple(args.budget_x),
        seed_start=seed_start, seed_end=seed_end,
        data_path=args.data, data_format=args.format,
        truth=truth, truth_index=truth_index,
        reuse_past=not args.no_reuse, delta=args.delta, init_pulls=args.init_pulls,
        include_per_trial=args.per_trial, timing=args.timing, threads=args.threads,
    )
    result = run_experiment(spec)
    text = to_json_str(result) if args.out_format == "json" else to_csv_str(result)
    _write_out(text, args.out)
    if args.plot is not None:
        from .plots import render_error_curve

        render_error_curve(result, args.plot)
    return 0


def _cmd_analyze(args) -> int:
    ds = _load(args)
    if ds.n > ANALYZE_GATE_N and not args.yes:
        print(
            f"dataset has n={ds.n} > {ANALYZE_GATE_N}; the full analysis costs "
            "O(n^2) distance evaluations. Re-run with --yes to proceed.",
            file=sys.stderr,
        )
        return 1
    report = hardness(ds, args.metric, sigma_pairs=args.sigma_pairs,
                      seed=args.seed, threads=args.threads)
    bounds = rho_bounds_check(ds, args.metric, report)
    doc = report.to_dict()
    doc["bounds"] = {
        "ok": bounds.ok,
        "skipped": bounds.skipped,
        "violations": [
            {"arm": v.arm, "bound": v.bound, "lhs": v.lhs, "rhs": v.rhs}
            for v in bounds.violations
        ],
    }
    _write_out(json.dumps(doc, indent=2) + "\n", args.out)
    if args.plot is not None:
        from .plots import render_hardness

        render_hardness(report, args.plot)
    return 0


def _cmd_import_idx(args) -> int:
    if len(args.images) != len(args.labels):
        raise ValueError("--images and --labels counts differ")
    ds = digit_dataset(args.images, args.labels, args.digit)
    save_dense(ds, args.out, args.out_format)
    print(f"wrote {ds.n} x {ds.d} digit-{args.digit} rows to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="corrmedoid", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="write a synthetic dataset")
    g.add_argument("--kind", required=True,
                   choices=("line-1d", "unit-circle-plus-center", "gaussian-clusters"))
    g.add_argument("--n", type=int, default=0)
    g.add_argument("--d", type=int, default=0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--clusters", type=int, default=3)
    g.add_argument("--spread", type=float, default=1.0)
    g.add_argument("--center-spread", type=float, default=5.0)
    g.add_argument("--values", default=None, help="comma list, line-1d only")
    g.add_argument("--out", required=True)
    g.add_argument("--out-format", choices=("csv", "bin", "sparse"), default="csv")
    g.set_defaults(func=_cmd_gen)

    m = sub.add_parser("medoid", help="single run of one algorithm")
    _add_data_args(m)
    m.add_argument("--algo", choices=VALID_ALGOS, default="corrsh")
    m.add_argument("--budget-x", type=float, default=20.0,
                   help="total budget as a pulls-per-arm multiplier")
    m.add_argument("--k", type=int, default=1000, help="rand: references per arm")
    m.add_argument("--delta", type=float, default=None, help="meddit: failure rate")
    m.add_argument("--init-pulls", type=int, default=16)
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--no-reuse", action="store_true",
                   help="discard estimates between halving rounds")
    m.add_argument("--threads", type=int, default=1)
    m.add_argument("--out", default=None, help="write JSON here instead of stdout")
    m.set_defaults(func=_cmd_medoid)

    b = sub.add_parser("bench", help="error-probability sweep across budgets")
    _add_data_args(b)
    b.add_argument("--algo", choices=VALID_ALGOS, default="corrsh")
    b.add_argument("--budget-x", type=float, action="append", required=True,
                   help="repeatable; grid of budget multipliers")
    b.add_argument("--seeds", type=parse_seed_range, default=(0, 10),
                   help='"A..B" inclusive, e.g. 0..99')
    b.add_argument("--truth", default="auto",
                   help="auto | exact | majority | explicit index")
    b.add_argument("--delta", type=float, default=None)
    b.add_argument("--init-pulls", type=int, default=16)
    b.add_argument("--no-reuse", action="store_true")
    b.add_argument("--per-trial", action="store_true",
                   help="include one record per (budget, seed) in JSON output")
    b.add_argument("--timing", action="store_true",
                   help="fill mean_wall_ms (off by default to keep reports stable)")
    b.add_argument("--threads", type=int, default=1)
    b.add_argument("--out", default=None)
    b.add_argument("--out-format", choices=("json", "csv"), default="json")
    b.add_argument("--plot", default=None, help="also render the curve to this image")
    b.set_defaults(func=_cmd_bench)

    a = sub.add_parser("analyze", help="hardness report")
    _add_data_args(a)
    a.add_argument("--sigma-pairs", type=int, default=200_000)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--threads", type=int, default=1)
    a.add_argument("--yes", action="store_true",
                   help=f"confirm O(n^2) analysis when n > {ANALYZE_GATE_N}")
    a.add_argument("--out", default=None)
    a.add_argument("--plot", default=None, help="render gap-vs-rho scatter here")
    a.set_defaults(func=_cmd_analyze)

    i = sub.add_parser("import-idx", help="extract a digit class from IDX files")
    i.add_argument("--images", action="append", required=True,
                   help="IDX image file (repeatable, e.g. train then test)")
    i.add_argument("--labels", action="append", required=True,
                   help="IDX label file, one per --images")
    i.add_argument("--digit", type=int, required=True)
    i.add_argument("--out", required=True)
    i.add_argument("--out-format", choices=("csv", "bin"), default="bin")
    i.set_defaults(func=_cmd_import_idx)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, ValueError, OSError) as exc:
        print(f"corrmedoid: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
