"""Command-line interface.

Subcommands: fit, predict, margins, simulate, benchmark, coverage, crossval,
inspect. Every command is deterministic under a fixed --seed for any --threads
value; exit status is 0 only when all requested artifact files were completely
written (outputs are written atomically).
"""

import argparse
import csv
import json
import os
import sys

import numpy as np

from . import __version__
from ._rng import STREAM_THRESHOLDS
from .baselines import KIND_MULTINOMIAL, KIND_ORDERED, fit_baseline
from .data import DataError, load_csv
from .evaluation import (
    EvaluationError,
    coverage_study,
    cross_validate,
    derive_seed,
    monte_carlo,
    write_boxplot_svgs,
)
from .forest import FitError, ForestParams, fit
from .inference import InferenceError, margins, predictions_with_se
from .model_io import ModelFormatError, load_model, save_model
from .synthetic import compute_thresholds, simulate_sample

KNOWN_ERRORS = (DataError, FitError, InferenceError, EvaluationError,
                ModelFormatError, ValueError)


def _add_forest_args(p):
    g = p.add_argument_group("forest parameters")
    g.add_argument("--trees", type=int, default=1000,
                   help="trees per class forest (default 1000)")
    g.add_argument("--subsample", type=float, default=0.5,
                   help="subsample fraction per tree, drawn without replacement")
    g.add_argument("--mtry", type=int, default=None,
                   help="candidate features per split (default ceil(sqrt(k)))")
    g.add_argument("--alpha", type=float, default=0.05,
                   help="regularity fraction each child must keep")
    g.add_argument("--min-leaf", type=int, default=5,
                   help="minimum training observations per leaf")
    g.add_argument("--honest-fraction", type=float, default=0.5,
                   help="share of rows reserved for leaf values (0 = adaptive)")
    g.add_argument("--omega", type=float, default=0.1,
                   help="step size in standard deviations for continuous effects")
    g.add_argument("--no-normalize", action="store_true",
                   help="skip the simplex normalization of predictions")
    g.add_argument("--stratify-honest", action="store_true",
                   help="draw the honest side per class (for rare classes)")
    g.add_argument("--max-discrete-levels", type=int, default=10,
                   help="max distinct integer values for a discrete column")


def _params_from_args(args, seed=None):
    return ForestParams(
        n_trees=args.trees,
        subsample_fraction=args.subsample,
        mtry=args.mtry,
        alpha=args.alpha,
        min_leaf=args.min_leaf,
        honest_fraction=args.honest_fraction,
        omega=args.omega,
        seed=args.seed if seed is None else seed,
        normalize=not args.no_normalize,
    )


def _write_text(path, text):
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _read_query_matrix(path, model):
    """Covariate matrix from a CSV, matched to the model schema by name."""
    if not os.path.exists(path):
        raise DataError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        positions = []
        for name in model.column_names:
            if name not in header:
                raise DataError(
                    f"{path}: column {name!r} required by the model is missing"
                )
            positions.append(header.index(name))
        rows = []
        for lineno, record in enumerate(reader, start=2):
            vals = []
            for name, j in zip(model.column_names, positions):
                cell = record[j].strip() if j < len(record) else ""
                if cell == "":
                    raise DataError(
                        f"{path}:{lineno}: missing value in column {name!r}"
                    )
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise DataError(
                        f"{path}:{lineno}: non-numeric value {cell!r} "
                        f"in column {name!r}"
                    ) from None
            rows.append(vals)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return np.array(rows, dtype=np.float64)


def _format_probability_csv(probs, ses=None):
    M = probs.shape[1]
    header = [f"p_{m}" for m in range(1, M + 1)]
    if ses is not None:
        header += [f"se_{m}" for m in range(1, M + 1)]
    lines = [",".join(header)]
    for i in range(probs.shape[0]):
        cells = [repr(float(v)) for v in probs[i]]
        if ses is not None:
            cells += [repr(float(v)) for v in ses[i]]
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def _int_list(text):
    try:
        return [int(v) for v in str(text).split(",") if v.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated int list, got {text!r}")


def _str_list(text):
    return [v.strip() for v in str(text).split(",") if v.strip() != ""]


def cmd_fit(args):
    dataset = load_csv(args.data, args.outcome,
                       max_discrete_levels=args.max_discrete_levels)
    params = _params_from_args(args)
    if args.estimator == "ocf":
        model = fit(dataset, params, n_jobs=args.threads,
                    stratify_honest=args.stratify_honest)
    else:
        kind = KIND_MULTINOMIAL if args.estimator == "mrf" else KIND_ORDERED
        model = fit_baseline(dataset, kind, params, n_jobs=args.threads,
                             stratify_honest=args.stratify_honest)
    save_model(model, args.out)
    if model.honest_split is not None:
        print(f"honest split: {model.honest_split.train_indices.size} training / "
              f"{model.honest_split.honest_indices.size} honest rows")
    else:
        print(f"adaptive fit on {dataset.n_rows} rows (no honest side)")
    for f in model.forests:
        print(f"surface {f.m}: {f.n_trees} trees")
    print(f"model written to {args.out}")
    return 0


def cmd_predict(args):
    model = load_model(args.model)
    W = _read_query_matrix(args.data, model)
    if args.se:
        if model.honest_split is None:
            raise InferenceError(
                "variance requires honest fit; this model was fitted with "
                "honest_fraction 0"
            )
        probs, ses = predictions_with_se(model, W)
        text = _format_probability_csv(probs, ses)
    else:
        probs = model.predict(W)
        text = _format_probability_csv(probs)
    if args.out:
        _write_text(args.out, text)
        print(f"predictions written to {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_margins(args):
    model = load_model(args.model)
    point = None
    if args.at == "point":
        if not args.point:
            raise InferenceError("--at point requires --point v1,v2,...")
        point = [float(v) for v in args.point.split(",")]
    table = margins(model, at=args.at, point=point, omega=args.omega,
                    level=args.level)
    if args.out:
        _write_text(args.out, table.to_csv())
        print(f"marginal effects written to {args.out}")
    else:
        print(table.format())
    return 0


def cmd_simulate(args):
    thresholds = compute_thresholds(
        args.design, derive_seed(args.seed, STREAM_THRESHOLDS, args.design))
    dataset = simulate_sample(args.design, thresholds, args.n, args.seed)
    header = list(dataset.column_names) + ["y"]
    lines = [",".join(header)]
    for i in range(dataset.n_rows):
        cells = [repr(float(v)) for v in dataset.covariates[i]]
        cells.append(str(int(dataset.outcome[i])))
        lines.append(",".join(cells))
    _write_text(args.out, "\n".join(lines) + "\n")
    meta = {
        "design": args.design,
        "n": args.n,
        "seed": args.seed,
        "thresholds": [thresholds.zeta1, thresholds.zeta2],
        "outcome_column": "y",
    }
    meta_path = args.out + ".meta.json"
    _write_text(meta_path, json.dumps(meta, indent=2) + "\n")
    print(f"simulated {args.n} rows of design {args.design} to {args.out}")
    print(f"metadata written to {meta_path}")
    return 0


def _emit_report(report, args):
    _write_text(args.out, report.to_json(indent=2) + "\n")
    print(f"report written to {args.out}")
    if getattr(args, "table", None):
        _write_text(args.table, report.format_table() + "\n")
        print(f"table written to {args.table}")
    else:
        print(report.format_table())
    if getattr(args, "emit_svg", None):
        paths = write_boxplot_svgs(report, args.emit_svg)
        print(f"wrote {len(paths)} SVG box plots to {args.emit_svg}")


def cmd_benchmark(args):
    external = {}
    for spec_text in args.external or []:
        if "=" not in spec_text:
            raise EvaluationError(
                f"--external expects NAME=FILE, got {spec_text!r}"
            )
        name, path = spec_text.split("=", 1)
        external[name] = path
    report = monte_carlo(
        designs=args.designs,
        sample_sizes=args.sizes,
        estimators=args.estimators,
        n_replications=args.reps,
        validation_n=args.validation_n,
        seed=args.seed,
        params=_params_from_args(args),
        n_jobs=args.threads,
        external=external or None,
    )
    _emit_report(report, args)
    return 0


def cmd_coverage(args):
    report = coverage_study(
        design=args.design,
        sample_sizes=args.sizes,
        n_replications=args.reps,
        seed=args.seed,
        params=_params_from_args(args),
        n_jobs=args.threads,
    )
    _write_text(args.out, report.to_json(indent=2) + "\n")
    print(f"report written to {args.out}")
    print(report.format_table())
    return 0


def cmd_crossval(args):
    dataset = load_csv(args.data, args.outcome,
                       max_discrete_levels=args.max_discrete_levels)
    report = cross_validate(
        dataset,
        estimators=args.estimators,
        folds=args.folds,
        repeats=args.repeats,
        seed=args.seed,
        params=_params_from_args(args),
        n_jobs=args.threads,
    )
    _emit_report(report, args)
    return 0


def cmd_inspect(args):
    model = load_model(args.model)
    kind = getattr(model, "kind", "ocf")
    print(f"kind: {kind}")
    print(f"classes: {model.n_classes}")
    print(f"covariates: {model.n_covariates} "
          f"({', '.join(model.column_names)})")
    p = model.params
    print(f"params: trees={p.n_trees} subsample={p.subsample_fraction} "
          f"mtry={p.mtry} alpha={p.alpha} min_leaf={p.min_leaf} "
          f"honest_fraction={p.honest_fraction} omega={p.omega} "
          f"seed={p.seed} normalize={p.normalize}")
    if model.honest_split is not None:
        print(f"honest split: {model.honest_split.train_indices.size} training / "
              f"{model.honest_split.honest_indices.size} honest rows")
    else:
        print("honest split: none (adaptive)")
    for f in model.forests:
        nodes = sum(t.n_nodes for t in f.trees)
        print(f"surface {f.m}: {f.n_trees} trees, {nodes} nodes")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ocforest",
        description=("Ordered correlation forest: honest probability forests "
                     "for ordered outcomes with weight-based inference."),
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a model on a CSV dataset")
    p.add_argument("data", help="CSV file with a header row")
    p.add_argument("--outcome", required=True, help="outcome column name")
    p.add_argument("--estimator", choices=["ocf", "mrf", "orf"], default="ocf")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=os.cpu_count())
    p.add_argument("--out", required=True, help="model file to write")
    _add_forest_args(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", help="predict class probabilities")
    p.add_argument("model")
    p.add_argument("data")
    p.add_argument("--se", action="store_true",
                   help="append weight-based standard errors per class")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("margins", help="marginal effects with standard errors")
    p.add_argument("model")
    p.add_argument("--at", choices=["mean", "median", "point"], default="mean")
    p.add_argument("--point", default=None, help="comma-separated covariates")
    p.add_argument("--omega", type=float, default=None)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_margins)

    p = sub.add_parser("simulate", help="draw a synthetic dataset")
    p.add_argument("--design", type=int, choices=[1, 2, 3], required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("benchmark", help="Monte Carlo estimator comparison")
    p.add_argument("--designs", type=_int_list, default=[1, 2, 3])
    p.add_argument("--sizes", type=_int_list, default=[500])
    p.add_argument("--estimators", type=_str_list,
                   default=["OCF_A", "OCF_H", "MRF", "ORF"])
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--validation-n", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=os.cpu_count())
    p.add_argument("--external", action="append", metavar="NAME=FILE",
                   help="externally produced validation predictions")
    p.add_argument("--out", required=True)
    p.add_argument("--table", default=None)
    p.add_argument("--emit-svg", default=None, metavar="DIR")
    _add_forest_args(p)
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("coverage", help="marginal-effect bias/variance/coverage")
    p.add_argument("--design", type=int, choices=[1, 2, 3], required=True)
    p.add_argument("--sizes", type=_int_list, default=[500])
    p.add_argument("--reps", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=os.cpu_count())
    p.add_argument("--out", required=True)
    _add_forest_args(p)
    p.set_defaults(func=cmd_coverage)

    p = sub.add_parser("crossval", help="repeated k-fold cross-validation")
    p.add_argument("data")
    p.add_argument("--outcome", required=True)
    p.add_argument("--estimators", type=_str_list,
                   default=["OCF_A", "OCF_H", "MRF", "ORF"])
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--repeats", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=os.cpu_count())
    p.add_argument("--out", required=True)
    p.add_argument("--table", default=None)
    p.add_argument("--emit-svg", default=None, metavar="DIR")
    _add_forest_args(p)
    p.set_defaults(func=cmd_crossval)

    p = sub.add_parser("inspect", help="print model metadata")
    p.add_argument("model")
    p.set_defaults(func=cmd_inspect)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except KNOWN_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
