"""Command line front end.

Four subcommands: ``fit-predict`` scores a query CSV against a training
CSV, ``simulate`` runs the synthetic sweeps, ``htru2`` reproduces the pulsar
benchmark pipeline, and ``diagnose`` prints bias/variance and neighbor
distance scaling reports.  Every command is a pure function of its flags:
rerunning with the same arguments rewrites byte-identical output files, and
``--threads`` only caps workers without changing any result.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np

from .config import EstimatorConfig
from .core import (
    CLASSIFICATION,
    REGRESSION,
    LogInterpolated,
    PowerInterpolated,
    Uniform,
    WeightScheme,
    estimates_all_k,
)
from .data_io import (
    CsvSchema,
    SplitSpec,
    load_csv,
    load_features_csv,
    split_normalize,
    write_results,
    write_summary,
)
from .diagnostics import bias_variance, fit_rate, kth_distance_scaling
from .seeding import stream_seed
from .neighbors import BruteForce, KdTree, build_index, knn_matrix
from .simulations import (
    ScenarioSpec,
    SweepResult,
    SweepRow,
    bayes_risk_gaussian,
    feature_sampler,
    generate,
    generate_test,
    sweep_grid,
)

__all__ = ["main"]

HTRU2_FEATURES = 8


def parse_scheme(text: str) -> WeightScheme:
    """Parse 'uniform', 'log[:c]' or 'power:kappa'."""
    name, _, param = text.strip().partition(":")
    if name == "uniform":
        if param:
            raise ValueError("uniform takes no parameter")
        return Uniform()
    if name == "log":
        return LogInterpolated(float(param)) if param else LogInterpolated()
    if name == "power":
        if not param:
            raise ValueError("power requires a kappa, e.g. power:1")
        return PowerInterpolated(float(param))
    raise ValueError(f"unknown scheme {text!r} (expected uniform, log:c or power:kappa)")


def parse_schemes(text: str) -> list[WeightScheme]:
    return [parse_scheme(part) for part in text.split(",") if part.strip()]


def parse_backend(text: str):
    if text == "brute":
        return BruteForce()
    if text == "kdtree":
        return KdTree()
    raise ValueError(f"unknown backend {text!r} (expected brute or kdtree)")


def parse_int_list(text: str) -> list[int]:
    values = [int(part) for part in text.split(",") if part.strip()]
    if not values:
        raise ValueError("empty integer list")
    return values


def parse_k_grid(text: str, n: int):
    """Grid syntaxes: 'half', 'auto', 'a:b[:step]', or a comma list."""
    text = text.strip()
    if text == "half":
        return list(range(1, max(2, n // 2 + 1)))
    if text == "auto":
        ks = np.unique(np.rint(np.geomspace(1, max(2, n // 2), 48)).astype(int))
        return ks.tolist()
    if ":" in text:
        parts = [int(p) for p in text.split(":")]
        if len(parts) == 2:
            lo, hi, step = parts[0], parts[1], 1
        elif len(parts) == 3:
            lo, hi, step = parts
        else:
            raise ValueError(f"bad k range {text!r}")
        if step < 1 or hi < lo:
            raise ValueError(f"bad k range {text!r}")
        return list(range(lo, hi + 1, step))
    # Sorted and deduplicated so ties in later argmin scans resolve to the
    # smallest k no matter how the list was typed.
    return sorted(set(parse_int_list(text)))


def _count_columns(path, delimiter: str, header: bool) -> int:
    with open(path, newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        for lineno, row in enumerate(reader, start=1):
            if header and lineno == 1:
                continue
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            return len(row)
    raise ValueError(f"{path}: no data rows")


def _summary_path(out: Path) -> Path:
    return out.with_name(out.stem + "_summary" + (out.suffix or ".csv"))


def _build_spec(args) -> ScenarioSpec:
    return ScenarioSpec(
        variant=args.scenario,
        n=4,
        seed=args.seed,
        gamma=args.gamma,
        truth=args.truth,
        alpha=args.alpha if args.scenario == "rate" else None,
        d=args.d if args.scenario == "rate" else None,
    )


def cmd_fit_predict(args) -> int:
    delimiter = ","
    train_cols = _count_columns(args.train, delimiter, args.header)
    if train_cols < 2:
        raise ValueError(f"{args.train}: need at least one feature and a response")
    schema = CsvSchema(n_features=train_cols - 1, has_label=True, header=args.header)
    train = load_csv(args.train, schema, task=args.task)
    query_schema = CsvSchema(n_features=train_cols - 1, has_label=False, header=args.header)
    queries = load_features_csv(args.query, query_schema)

    if not 1 <= args.k <= train.n - 1:
        raise ValueError(f"k must satisfy 1 <= k <= n-1 = {train.n - 1}, got {args.k}")
    scheme = parse_scheme(args.scheme)
    index = build_index(train, parse_backend(args.backend))
    idx_mat, dist_mat = knn_matrix(index, queries, args.k + 1)
    est = estimates_all_k(dist_mat, train.responses[idx_mat[:, : args.k]], scheme)[:, -1]

    lines = ["row,prediction,class" if args.task == CLASSIFICATION else "row,prediction"]
    for r in range(queries.shape[0]):
        cells = [str(r), repr(float(est[r]))]
        if args.task == CLASSIFICATION:
            cells.append(str(int(est[r] >= 0.5)))
        lines.append(",".join(cells))
    Path(args.out).write_text("\n".join(lines) + "\n")
    print(f"wrote {queries.shape[0]} predictions to {args.out}")
    return 0


def cmd_simulate(args) -> int:
    spec = _build_spec(args)
    if args.schemes:
        schemes = parse_schemes(args.schemes)
    elif args.scenario == "toy":
        schemes = [Uniform(), LogInterpolated(1.0), PowerInterpolated(1.0)]
    else:
        schemes = [Uniform(), LogInterpolated(2.0)]
    n_grid = parse_int_list(args.n)
    k_text = args.k or ("auto" if args.scenario == "rate" else "half")

    result = sweep_grid(
        spec,
        n_grid,
        schemes,
        k_grid=lambda n: parse_k_grid(k_text, n),
        repetitions=args.reps,
        test_size=args.test_size,
        base_seed=args.seed,
        alpha=spec.alpha if spec.alpha is not None else args.alpha,
        backend=parse_backend(args.backend),
        threads=args.threads,
    )
    out = Path(args.out)
    write_results(result, out)
    write_summary(result, _summary_path(out))
    print(f"wrote {len(result.rows)} rows to {out} and summary to {_summary_path(out)}")

    if args.scenario == "gaussian":
        print(f"reference optimal risk: {bayes_risk_gaussian(args.gamma):.5f}")
    labels = [str(s) for s in schemes]
    for n in n_grid:
        parts = [
            f"{lbl}: {result.optimal_metric[(n, lbl)]:.6g} (k={result.optimal_k[(n, lbl)]})"
            for lbl in labels
        ]
        ordering = " <= ".join(sorted(labels, key=lambda l: result.optimal_metric[(n, l)]))
        print(f"n={n}: optimal {'; '.join(parts)}; observed ordering: {ordering}")
    if len(n_grid) >= 3:
        for lbl in labels:
            pts = [(n, result.optimal_metric[(n, lbl)]) for n in n_grid]
            if any(p[1] <= 0 for p in pts):
                print(f"{lbl}: optimal metric hit zero, no slope fitted")
                continue
            fit = fit_rate(pts)
            print(f"{lbl}: empirical slope {fit.slope:.3f} (r^2={fit.r_squared:.3f})")
    return 0


def cmd_htru2(args) -> int:
    cols = _count_columns(args.data, ",", args.header)
    if cols != HTRU2_FEATURES + 1:
        raise ValueError(
            f"{args.data}: expected {HTRU2_FEATURES} features plus a 0/1 label "
            f"({HTRU2_FEATURES + 1} columns), found {cols}"
        )
    schema = CsvSchema(n_features=HTRU2_FEATURES, has_label=True, header=args.header)
    full = load_csv(args.data, schema, task=CLASSIFICATION)
    train, test, _ = split_normalize(full, SplitSpec(args.test_size, args.seed, "zscore"))

    schemes = parse_schemes(args.schemes)
    k_list = parse_k_grid(args.k, train.n)
    if k_list[-1] > train.n - 1:
        raise ValueError(f"k grid exceeds n-1 = {train.n - 1}")
    index = build_index(train, parse_backend(args.backend))
    idx_mat, dist_mat = knn_matrix(index, test.features, k_list[-1] + 1)
    actual = (test.responses == 1.0)[:, None]

    rows = []
    optimal_k: dict[tuple[int, str], int] = {}
    optimal_metric: dict[tuple[int, str], float] = {}
    for scheme in schemes:
        label = str(scheme)
        est = estimates_all_k(dist_mat, train.responses[idx_mat[:, : k_list[-1]]], scheme)
        errors = ((est >= 0.5) != actual).mean(axis=0)
        curve = [float(errors[k - 1]) for k in k_list]
        for k, err in zip(k_list, curve):
            rows.append(SweepRow(train.n, k, label, 0, "misclassification_rate", err))
        best = int(np.argmin(curve))
        optimal_k[(train.n, label)] = k_list[best]
        optimal_metric[(train.n, label)] = curve[best]
        print(f"{label}: best k={k_list[best]} test error={curve[best]:.5f}")

    result = SweepResult(tuple(rows), optimal_k, optimal_metric)
    out = Path(args.out)
    write_results(result, out)
    write_summary(result, _summary_path(out))
    print(f"wrote {len(rows)} rows to {out} and summary to {_summary_path(out)}")
    return 0


def cmd_diagnose(args) -> int:
    spec = _build_spec(args)
    schemes = parse_schemes(args.schemes) if args.schemes else [Uniform(), LogInterpolated(2.0)]
    ds_spec = ScenarioSpec(
        variant=spec.variant,
        n=args.n,
        seed=args.seed,
        gamma=spec.gamma,
        truth=spec.truth,
        alpha=spec.alpha,
        d=spec.d,
    )
    dataset, truth = generate(ds_spec)
    test_x, _ = generate_test(ds_spec, args.test_size, stream_seed(args.seed, 1))
    alpha = spec.alpha if spec.alpha is not None else args.alpha

    lines = ["scheme,k,alpha,bias_proxy,variance_proxy,mse"]
    for scheme in schemes:
        config = EstimatorConfig(
            k=args.k,
            scheme=scheme,
            backend=parse_backend(args.backend),
            task=dataset.task,
        )
        report = bias_variance(truth, dataset, test_x, config, alpha)
        print(
            f"{scheme}: k={args.k} bias_proxy={report.bias_proxy:.6g} "
            f"variance_proxy={report.variance_proxy:.6g} mse={report.mse:.6g}"
        )
        lines.append(
            f"{scheme},{args.k},{repr(float(alpha))},{repr(report.bias_proxy)},"
            f"{repr(report.variance_proxy)},{repr(report.mse)}"
        )
    Path(args.out).write_text("\n".join(lines) + "\n")

    n_grid = parse_int_list(args.n_grid)
    fit = kth_distance_scaling(
        feature_sampler(ds_spec),
        n_grid,
        k_rule=lambda n: max(1, math.ceil(math.sqrt(n))),
        alpha=alpha,
        repetitions=args.reps,
        rng_seed=args.seed,
    )
    reference = 2.0 * alpha / ds_spec.dim
    print(
        f"neighbor distance scaling: empirical slope {fit.slope:.3f} "
        f"(reference 2*alpha/d = {reference:.3f}, r^2={fit.r_squared:.3f})"
    )
    print(f"wrote bias/variance table to {args.out}")
    return 0


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--seed", type=int, default=0, help="base seed (64-bit)")
    sub.add_argument("--threads", type=int, default=1, help="worker cap; never changes results")
    sub.add_argument("--out", required=True, help="output CSV path")


def _add_scenario(sub: argparse.ArgumentParser) -> None:
    sub.add_argument(
        "--scenario",
        required=True,
        choices=["model1", "model2", "gaussian", "toy", "rate"],
    )
    sub.add_argument("--gamma", type=float, default=None, help="gaussian class separation")
    sub.add_argument(
        "--truth", choices=["zero", "square", "shifted-square"], default=None, help="toy target"
    )
    sub.add_argument("--alpha", type=float, default=1.0, help="smoothness exponent")
    sub.add_argument("--d", type=int, default=2, help="dimension for the rate scenario")
    sub.add_argument("--schemes", default=None, help="comma list, e.g. uniform,log:2")
    sub.add_argument("--backend", default="brute", help="brute or kdtree")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="interpnn")
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("fit-predict", help="score a query CSV against a training CSV")
    p.add_argument("--train", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--task", choices=[REGRESSION, CLASSIFICATION], default=REGRESSION)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--scheme", default="log:2")
    p.add_argument("--backend", default="brute")
    p.add_argument("--header", action="store_true", help="input CSVs have a header row")
    _add_common(p)
    p.set_defaults(func=cmd_fit_predict)

    p = commands.add_parser("simulate", help="run a synthetic sweep over n, k, schemes")
    _add_scenario(p)
    p.add_argument("--n", default="256,512,1024,2048", help="comma list of sample sizes")
    p.add_argument("--k", default=None, help="k grid: half, auto, a:b[:step], or comma list")
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--test-size", type=int, default=1000)
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = commands.add_parser("htru2", help="pulsar benchmark: split, normalize, sweep k")
    p.add_argument("--data", required=True, help="headerless CSV, 8 features + 0/1 label")
    p.add_argument("--header", action="store_true", help="data CSV has a header row")
    p.add_argument("--test-size", type=int, default=2000)
    p.add_argument("--schemes", default="uniform,log:2")
    p.add_argument("--k", default="1:61:2")
    p.add_argument("--backend", default="brute")
    _add_common(p)
    p.set_defaults(func=cmd_htru2)

    p = commands.add_parser("diagnose", help="bias/variance report and distance scaling")
    _add_scenario(p)
    p.add_argument("--n", type=int, default=256, help="training size for bias/variance")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--test-size", type=int, default=200)
    p.add_argument("--n-grid", default="256,512,1024,2048,4096", help="sizes for scaling fit")
    p.add_argument("--reps", type=int, default=5)
    _add_common(p)
    p.set_defaults(func=cmd_diagnose)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
