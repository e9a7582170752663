"""Command-line front end: fit, sweep, classify, evaluate.

Exit codes: 0 success, 1 input/configuration error, 2 numerical
non-convergence.  All outputs are deterministic for a fixed configuration and
input, apart from the ``timestamp`` field in JSON reports.  The FIT_THREADS
environment variable caps internal parallelism.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from pathlib import Path

import numpy as np

from .classify import (
    extract_line_profile,
    load_model,
    nearest_cell_indices,
    predict_many,
    save_model,
    train,
    training_metrics,
)
from .data import DataFormatError, Dataset, ExtensionSpec, bin_to_grid, even_extension, load_csv
from .grid import GriddedData, GridSpec, SpectralField
from .kernel import default_truncation, kernel_predict_many, solve_kernel
from .lambda_select import log_lambda_grid, select_lambda_descent, sweep_lambda
from .solvers import (
    DivergenceError,
    FitReport,
    GDParams,
    save_fit_report,
    solve_gd,
    solve_linear,
)
from .spectral import FrequencyWeight


def _parse_grid(spec: str, m: int) -> GridSpec:
    parts = [p for p in spec.replace("x", ",").split(",") if p.strip()]
    counts = [int(p) for p in parts]
    if len(counts) == 1 and m > 1:
        counts = counts * m
    if len(counts) != m:
        raise ValueError(f"grid spec {spec!r} has {len(counts)} axes but the data has {m}")
    return GridSpec(tuple(counts))


def _write_field_csv(path: Path, grid: GridSpec, values: np.ndarray) -> None:
    coords = grid.coordinate_matrix()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["index"] + [f"x{i + 1}" for i in range(grid.m)] + ["value"])
        flat = np.asarray(values).reshape(-1)
        for i in range(grid.size):
            writer.writerow([i] + [repr(float(c)) for c in coords[i]] + [repr(float(flat[i]))])


def load_field_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """Read a sampled-field CSV back as (coordinates, values)."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        m = len(header) - 2
        coords, values = [], []
        for row in reader:
            coords.append([float(c) for c in row[1 : 1 + m]])
            values.append(float(row[-1]))
    return np.asarray(coords), np.asarray(values)


def load_feature_csv(path, label_col: str) -> tuple[np.ndarray, list[str], list[str]]:
    """Read a labeled feature CSV: numeric feature columns plus one label column."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataFormatError("feature file is empty") from None
        if label_col not in header:
            raise DataFormatError(f"label column {label_col!r} not found in header {header}")
        label_idx = header.index(label_col)
        names = [h for i, h in enumerate(header) if i != label_idx]
        rows, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != len(header):
                raise DataFormatError(f"line {lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                rows.append([float(x) for i, x in enumerate(row) if i != label_idx])
            except ValueError as exc:
                raise DataFormatError(f"line {lineno}: non-numeric feature ({exc})") from None
            labels.append(row[label_idx].strip())
    if not rows:
        raise DataFormatError("no data rows")
    return np.asarray(rows), labels, names


def _load_points(args) -> Dataset:
    dataset = load_csv(args.data)
    if args.extend == "even":
        bounds = tuple((0.0, 1.0) for _ in range(dataset.m))
        dataset = even_extension(dataset, ExtensionSpec("even-symmetric", bounds))
    return dataset


def _write_json(path: Path, payload: dict) -> None:
    payload = dict(payload)
    payload["timestamp"] = time.strftime("%Y-%m-%dT%H:%M:%S")
    path.write_text(json.dumps(payload, indent=2), encoding="utf-8")


def _auto_lambda(binned: GriddedData, fw: FrequencyWeight, args) -> float:
    grid = log_lambda_grid(args.lambda_min, args.lambda_max, args.lambda_count)
    return sweep_lambda(binned, fw, grid).lambda0


def cmd_fit(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dataset = _load_points(args)
    fw = FrequencyWeight(k=args.k, lam=args.lam if args.lam is not None else 1.0, scale_mode=args.scale)
    grid = _parse_grid(args.grid, dataset.m)

    if args.solver == "kernel":
        radius = args.trunc if args.trunc is not None else default_truncation(grid)
        model = solve_kernel(dataset, fw, radius)
        values = kernel_predict_many(model, grid.coordinate_matrix()).reshape(grid.samples)
        field = SpectralField(grid, values)
        binned = bin_to_grid(dataset, grid)
        residuals = (model.gram @ model.weights - dataset.values).tolist() if model.n else []
        report = FitReport(
            lam=fw.lam,
            k=fw.k,
            scale_mode=fw.scale_mode,
            solver="kernel",
            iterations=1,
            converged=True,
            final_objective=float("nan"),
            objective_trace=[],
            data_residuals=residuals,
            l2_norm=float(np.sqrt(np.mean(values**2))),
            kgrad_norm=float("nan"),
            extras={
                "truncation_radius": radius,
                "tail_bound": model.tail_bound,
                "dual_residual": model.dual_residual,
                "sampling_grid": list(grid.samples),
            },
        )
        del binned
    else:
        binned = bin_to_grid(dataset, grid)
        if args.auto_lambda:
            fw = fw.with_lambda(_auto_lambda(binned, fw, args))
        if args.solver == "gd":
            params = GDParams(learning_rate=args.delta, max_iters=args.max_iters)
            field, report = solve_gd(binned, fw, params)
        else:
            field, report = solve_linear(binned, fw)
        if args.auto_lambda:
            report.extras["auto_lambda"] = fw.lam

    save_fit_report(report, out / "report.json")
    _write_field_csv(out / "field.csv", grid, field.values)
    print(f"fit: solver={args.solver} lambda={report.lam:g} objective={report.final_objective:g}")
    return 0 if report.converged else 2


def cmd_sweep(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    dataset = _load_points(args)
    fw = FrequencyWeight(k=args.k, lam=1.0, scale_mode=args.scale)
    grid = _parse_grid(args.grid, dataset.m)
    binned = bin_to_grid(dataset, grid)
    lambdas = log_lambda_grid(args.lambda_min, args.lambda_max, args.lambda_count)
    result = sweep_lambda(binned, fw, lambdas)
    with open(out / "sweep.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lambda", "l2_norm", "max_residual"])
        for lam, norm, resid in result.to_rows():
            writer.writerow([repr(lam), repr(norm), repr(resid)])
    selection = {
        "lambda0": result.lambda0,
        "method": args.method,
        "endpoints": result.endpoints,
    }
    if args.method == "descent":
        params = GDParams(learning_rate=args.delta, max_iters=args.max_iters)
        lam0, _, state = select_lambda_descent(binned, fw, params)
        selection["descent_lambda0"] = lam0
        selection["descent_converged"] = state.converged
        selection["descent_iterations"] = state.iterations
        selection["descent_bracket_fallback"] = state.bracket_fallback
    _write_json(out / "selection.json", selection)
    print(f"sweep: lambda0={result.lambda0:g}" + (
        f" descent_lambda0={selection['descent_lambda0']:g}" if args.method == "descent" else ""
    ))
    return 0


def cmd_classify(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    features, labels, _ = load_feature_csv(args.data, args.label_col)
    positive = np.array([lab == args.positive_class for lab in labels])
    if not positive.any() or positive.all():
        raise ValueError(
            f"positive class {args.positive_class!r} must match some but not all rows"
        )
    fw = FrequencyWeight(k=args.k, lam=args.lam if args.lam is not None else 1e-4, scale_mode=args.scale)
    if args.auto_lambda:
        from .classify import fit_transform

        transform = fit_transform(features, args.quant_budget)
        cube = transform.cube_coordinates(features, clamp=False)
        dataset = Dataset.from_raw(cube, positive.astype(np.float64))
        binned = bin_to_grid(dataset, GridSpec(transform.counts))
        fw = fw.with_lambda(_auto_lambda(binned, fw, args))
    model, report = train(features, positive, fw, args.quant_budget)
    metrics = training_metrics(model, features, positive)
    metrics["positive_class"] = args.positive_class
    metrics["grid"] = list(model.grid.samples)
    metrics["lambda"] = fw.lam
    save_model(model, out / "model.json")
    _write_json(out / "metrics.json", metrics)

    longest_axis = int(np.argmax(model.grid.samples))
    first_pos = int(np.argmax(positive))
    anchor_flat = nearest_cell_indices(
        model.transform.cube_coordinates(features[first_pos : first_pos + 1]), model.grid
    )[0]
    anchor = np.unravel_index(anchor_flat, model.grid.samples)
    profile = extract_line_profile(model, longest_axis, anchor)
    with open(out / "profile.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["coordinate", "value"])
        for coord, value in profile:
            writer.writerow([repr(coord), repr(value)])
    print(f"classify: accuracy={metrics['accuracy']:g} grid={metrics['grid']}")
    return 0


def cmd_evaluate(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    model = load_model(args.model)
    features, labels, _ = load_feature_csv(args.data, args.label_col)
    positive = np.array([lab == args.positive_class for lab in labels])
    metrics = training_metrics(model, features, positive)
    metrics["positive_class"] = args.positive_class
    _write_json(out / "metrics.json", metrics)
    print(f"evaluate: accuracy={metrics['accuracy']:g}")
    return 0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="input CSV path")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--k", type=int, default=1, help="smoothness order")
    p.add_argument("--scale", choices=["2pi", "1"], default="2pi", help="multiplier scale")


def _add_lambda_grid(p: argparse.ArgumentParser) -> None:
    p.add_argument("--lambda-min", type=float, default=1e-4)
    p.add_argument("--lambda-max", type=float, default=1e4)
    p.add_argument("--lambda-count", type=int, default=25)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sobfit",
        description="Fit smooth periodic functions to scattered data and classify by their sign.",
        epilog="Set FIT_THREADS to cap internal parallelism.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit a function to a point dataset")
    _add_common(fit)
    fit.add_argument("--grid", default="64", help="per-axis sample counts, e.g. 64 or 64,32")
    group = fit.add_mutually_exclusive_group()
    group.add_argument("--lambda", dest="lam", type=float, default=None, help="fixed penalty")
    group.add_argument("--auto-lambda", action="store_true", help="select the penalty by sweep")
    fit.add_argument("--solver", choices=["gd", "linear", "kernel"], default="linear")
    fit.add_argument("--delta", type=float, default=None, help="gradient descent learning rate")
    fit.add_argument("--max-iters", type=int, default=200_000)
    fit.add_argument("--trunc", type=int, default=None, help="kernel truncation radius")
    fit.add_argument("--extend", choices=["none", "even"], default="none")
    _add_lambda_grid(fit)
    fit.set_defaults(func=cmd_fit)

    sweep = sub.add_parser("sweep", help="trace the solution norm along a penalty grid")
    _add_common(sweep)
    sweep.add_argument("--grid", default="64")
    _add_lambda_grid(sweep)
    sweep.add_argument("--method", choices=["sweep", "descent"], default="sweep")
    sweep.add_argument("--delta", type=float, default=None)
    sweep.add_argument("--max-iters", type=int, default=200_000)
    sweep.add_argument("--extend", choices=["none", "even"], default="none")
    sweep.set_defaults(func=cmd_sweep)

    cls = sub.add_parser("classify", help="train a binary sign classifier")
    _add_common(cls)
    cls.add_argument("--label-col", default="label")
    cls.add_argument("--positive-class", required=True)
    cls.add_argument("--quant-budget", type=int, default=12_000)
    group = cls.add_mutually_exclusive_group()
    group.add_argument("--lambda", dest="lam", type=float, default=None)
    group.add_argument("--auto-lambda", action="store_true")
    _add_lambda_grid(cls)
    cls.set_defaults(func=cmd_classify)

    ev = sub.add_parser("evaluate", help="apply a saved classifier to labeled data")
    ev.add_argument("--model", required=True)
    ev.add_argument("--data", required=True)
    ev.add_argument("--out", required=True)
    ev.add_argument("--label-col", default="label")
    ev.add_argument("--positive-class", required=True)
    ev.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 1 if exc.code else 0
    try:
        return args.func(args)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (DataFormatError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
