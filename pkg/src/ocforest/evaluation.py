"""Metrics, Monte Carlo benchmarking, coverage studies and cross-validation.

Synthetic-truth metrics compare estimated probability vectors against the
oracle's; observed-outcome metrics replace the truth with outcome indicators
(Brier style) for real data. The Monte Carlo driver fixes one validation
sample per scenario and refits every estimator per replication; the coverage
study checks weight-based confidence intervals against the oracle's marginal
effects; repeated k-fold cross-validation scores estimators on held-out folds.
"""

import json
from dataclasses import dataclass, field, replace

import numpy as np
from joblib import Parallel, delayed
from scipy.stats import norm

from ._rng import (
    STREAM_FOLDS,
    STREAM_REPLICATION,
    STREAM_SIM,
    STREAM_THRESHOLDS,
    STREAM_VALIDATION,
    substream,
)
from . import baselines as _baselines
from . import forest as _forest
from . import synthetic as _synthetic


class EvaluationError(ValueError):
    """Raised for invalid evaluation requests."""


# ---------------------------------------------------------------------------
# metrics

def _check_simplex(p, tol=1e-6, what="probabilities"):
    off = np.abs(p.sum(axis=1) - 1.0)
    if (off > tol).any():
        raise EvaluationError(
            f"{what} are off the simplex by up to {off.max():.2e} (tol {tol})"
        )


def metrics_synthetic(true_p, est_p):
    """(mse, mae, rps) of estimated vs. true probability rows."""
    true_p = np.asarray(true_p, dtype=np.float64)
    est_p = np.asarray(est_p, dtype=np.float64)
    if true_p.shape != est_p.shape or true_p.ndim != 2:
        raise EvaluationError(
            f"probability matrices must share a 2-d shape, got "
            f"{true_p.shape} vs {est_p.shape}"
        )
    M = true_p.shape[1]
    if M < 2:
        raise EvaluationError("metrics need at least 2 classes")
    _check_simplex(true_p, what="true probabilities")
    _check_simplex(est_p, what="estimated probabilities")
    d = true_p - est_p
    mse = float(np.mean(np.sum(d * d, axis=1)))
    mae = float(np.mean(np.sum(np.abs(d), axis=1)))
    cd = np.cumsum(true_p, axis=1) - np.cumsum(est_p, axis=1)
    rps = float(np.mean(np.sum(cd * cd, axis=1) / (M - 1)))
    return mse, mae, rps


def metrics_observed(outcomes, est_p):
    """(mse, mae, rps) against one-hot outcome indicators."""
    est_p = np.asarray(est_p, dtype=np.float64)
    y = np.asarray(outcomes, dtype=np.int64)
    if est_p.ndim != 2 or y.shape != (est_p.shape[0],):
        raise EvaluationError(
            f"outcomes of length {y.shape} do not match predictions {est_p.shape}"
        )
    M = est_p.shape[1]
    if M < 2:
        raise EvaluationError("metrics need at least 2 classes")
    onehot = (y[:, None] == np.arange(1, M + 1)[None, :]).astype(np.float64)
    d = onehot - est_p
    mse = float(np.mean(np.sum(d * d, axis=1)))
    mae = float(np.mean(np.sum(np.abs(d), axis=1)))
    cd = np.cumsum(onehot, axis=1) - np.cumsum(est_p, axis=1)
    rps = float(np.mean(np.sum(cd * cd, axis=1) / (M - 1)))
    return mse, mae, rps


# ---------------------------------------------------------------------------
# estimator registry

ESTIMATOR_IDS = {
    "OCF_A": 1,
    "OCF_H": 2,
    "MRF": 3,
    "ORF": 4,
    "MRF_H": 5,
    "ORF_H": 6,
}


def fit_estimator(name, dataset, params, seed, n_jobs=1):
    """Fit one registered estimator; the returned object predicts via .predict."""
    if name not in ESTIMATOR_IDS:
        raise EvaluationError(
            f"unknown estimator {name!r}; known: {', '.join(sorted(ESTIMATOR_IDS))}"
        )
    honest_fraction = params.honest_fraction if params.honest_fraction > 0 else 0.5
    p = replace(params, seed=seed)
    if name == "OCF_H":
        return _forest.fit(dataset, replace(p, honest_fraction=honest_fraction),
                           n_jobs=n_jobs)
    if name == "OCF_A":
        return _forest.fit(dataset, replace(p, honest_fraction=0.0), n_jobs=n_jobs)
    kind = (_baselines.KIND_MULTINOMIAL if name.startswith("MRF")
            else _baselines.KIND_ORDERED)
    hf = honest_fraction if name.endswith("_H") else 0.0
    return _baselines.fit_baseline(dataset, kind, replace(p, honest_fraction=hf),
                                   n_jobs=n_jobs)


def derive_seed(seed, *path):
    """A 63-bit integer seed derived from (seed, path), stable across runs."""
    ss = np.random.SeedSequence(entropy=int(seed),
                                spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(2, np.uint64)[0] >> 1)


# ---------------------------------------------------------------------------
# reports

def _summary(values):
    if len(values) == 0:
        return {"mean": None, "median": None, "q1": None, "q3": None,
                "min": None, "max": None}
    v = np.asarray(values, dtype=np.float64)
    return {
        "mean": float(v.mean()),
        "median": float(np.median(v)),
        "q1": float(np.percentile(v, 25)),
        "q3": float(np.percentile(v, 75)),
        "min": float(v.min()),
        "max": float(v.max()),
    }


@dataclass
class ScenarioCell:
    """Metric values of one estimator in one scenario."""

    estimator: str
    n_train: int
    design: int | None = None
    n_replications: int = 0
    failures: list = field(default_factory=list)
    mse: list = field(default_factory=list)
    mae: list = field(default_factory=list)
    rps: list = field(default_factory=list)
    external: bool = False

    @property
    def n_failed(self):
        return len(self.failures)

    def mean(self, metric):
        values = getattr(self, metric)
        return float(np.mean(values)) if values else None

    def to_dict(self):
        return {
            "estimator": self.estimator,
            "design": self.design,
            "n_train": self.n_train,
            "n_replications": self.n_replications,
            "n_failed": self.n_failed,
            "failures": list(self.failures),
            "external": self.external,
            "metrics": {
                metric: {
                    "mean": self.mean(metric),
                    "values": list(getattr(self, metric)),
                    "summary": _summary(getattr(self, metric)),
                }
                for metric in ("mse", "mae", "rps")
            },
        }


@dataclass
class MetricReport:
    """Scenario-by-estimator metric table with replication-level values."""

    kind: str
    seed: int
    meta: dict
    cells: list

    def cell(self, estimator, design=None, n_train=None):
        for c in self.cells:
            if (c.estimator == estimator
                    and (design is None or c.design == design)
                    and (n_train is None or c.n_train == n_train)):
                return c
        raise KeyError(f"no cell for {estimator} design={design} n={n_train}")

    def to_dict(self):
        return {
            "report": self.kind,
            "seed": self.seed,
            "meta": self.meta,
            "cells": [c.to_dict() for c in self.cells],
        }

    def to_json(self, indent=None):
        return json.dumps(self.to_dict(), indent=indent)

    def format_table(self):
        lines = []
        header = (f"{'design':>6} {'n':>6} {'estimator':<10}"
                  f"{'mse':>10} {'mae':>10} {'rps':>10} {'reps':>6} {'failed':>7}")
        lines.append(header)
        lines.append("-" * len(header))
        for c in self.cells:
            d = "-" if c.design is None else str(c.design)
            vals = [c.mean(metric) for metric in ("mse", "mae", "rps")]
            cols = " ".join("       nan" if v is None else f"{v:>10.5f}" for v in vals)
            lines.append(
                f"{d:>6} {c.n_train:>6} {c.estimator:<10}{cols} "
                f"{c.n_replications:>6} {c.n_failed:>7}"
            )
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# Monte Carlo benchmark

def _mc_replication(design_id, zeta, n_train, r, estimator_names, params, seed,
                    W_val, true_p):
    thresholds = _synthetic.Thresholds(*zeta)
    train_seed = derive_seed(seed, STREAM_SIM, design_id, n_train, r)
    dataset = _synthetic.simulate_sample(design_id, thresholds, n_train, train_seed)
    out = {}
    for name in estimator_names:
        est_seed = derive_seed(seed, STREAM_REPLICATION, design_id, n_train, r,
                               ESTIMATOR_IDS[name])
        try:
            model = fit_estimator(name, dataset, params, est_seed)
            est_p = model.predict(W_val)
            out[name] = metrics_synthetic(true_p, est_p)
        except Exception as exc:  # recorded, never silently dropped
            out[name] = ("__error__", f"rep {r}: {exc}")
    return out


def monte_carlo(designs, sample_sizes, estimators, n_replications,
                validation_n=10_000, seed=0, params=None, n_jobs=1,
                rep_offset=0, external=None):
    """Benchmark estimators on synthetic scenarios.

    Per (design, size) scenario a fixed validation sample with oracle truths
    is drawn once; each replication simulates a fresh training sample, fits
    every estimator and scores it on the validation sample. `external` maps
    names to probability files for the validation sample, scored once.
    """
    if n_replications < 1:
        raise EvaluationError("need at least one replication")
    params = params or _forest.ForestParams()
    estimators = list(estimators)
    for name in estimators:
        if name not in ESTIMATOR_IDS:
            raise EvaluationError(f"unknown estimator {name!r}")
    cells = []
    for design_id in designs:
        design_id = int(design_id)
        thresholds = _synthetic.compute_thresholds(
            design_id, derive_seed(seed, STREAM_THRESHOLDS, design_id))
        oracle = _synthetic.make_oracle(design_id, thresholds)
        for n_train in sample_sizes:
            n_train = int(n_train)
            rng_val = substream(seed, STREAM_VALIDATION, design_id, n_train)
            W_val = _synthetic.draw_covariates(validation_n, rng_val)
            true_p = oracle.probabilities(W_val)
            zeta = (thresholds.zeta1, thresholds.zeta2)
            reps = range(rep_offset, rep_offset + n_replications)
            if n_jobs is not None and n_jobs != 1:
                results = Parallel(n_jobs=n_jobs)(
                    delayed(_mc_replication)(
                        design_id, zeta, n_train, r, estimators, params, seed,
                        W_val, true_p)
                    for r in reps
                )
            else:
                results = [
                    _mc_replication(design_id, zeta, n_train, r, estimators,
                                    params, seed, W_val, true_p)
                    for r in reps
                ]
            for name in estimators:
                cell = ScenarioCell(estimator=name, n_train=n_train,
                                    design=design_id,
                                    n_replications=n_replications)
                for res in results:
                    value = res[name]
                    if value[0] == "__error__":
                        cell.failures.append(value[1])
                    else:
                        mse, mae, rps = value
                        cell.mse.append(mse)
                        cell.mae.append(mae)
                        cell.rps.append(rps)
                cells.append(cell)
            for name, path in (external or {}).items():
                est_p = _baselines.load_external_predictions(
                    path, n_rows=validation_n, n_classes=_synthetic.N_CLASSES)
                mse, mae, rps = metrics_synthetic(true_p, est_p)
                cells.append(ScenarioCell(
                    estimator=name, n_train=n_train, design=design_id,
                    n_replications=1, mse=[mse], mae=[mae], rps=[rps],
                    external=True,
                ))
    meta = {
        "designs": [int(d) for d in designs],
        "sample_sizes": [int(n) for n in sample_sizes],
        "estimators": estimators,
        "n_replications": int(n_replications),
        "validation_n": int(validation_n),
        "rep_offset": int(rep_offset),
        "params": _params_dict(params),
    }
    return MetricReport(kind="benchmark", seed=int(seed), meta=meta, cells=cells)


def _params_dict(params):
    return {
        "n_trees": params.n_trees,
        "subsample_fraction": params.subsample_fraction,
        "mtry": params.mtry,
        "alpha": params.alpha,
        "min_leaf": params.min_leaf,
        "honest_fraction": params.honest_fraction,
        "omega": params.omega,
        "seed": params.seed,
        "normalize": params.normalize,
    }


# ---------------------------------------------------------------------------
# coverage study

Z_975 = float(norm.ppf(0.975))


@dataclass
class CoverageCell:
    """Marginal-effect estimation quality at one (size, evaluation point)."""

    design: int
    n_train: int
    at: str
    n_replications: int
    bias_sq: float
    variance: float
    coverage: float
    failures: list = field(default_factory=list)

    def to_dict(self):
        return {
            "design": self.design,
            "n_train": self.n_train,
            "at": self.at,
            "n_replications": self.n_replications,
            "n_failed": len(self.failures),
            "failures": list(self.failures),
            "bias_sq": self.bias_sq,
            "variance": self.variance,
            "coverage": self.coverage,
        }


@dataclass
class CoverageReport:
    design: int
    seed: int
    meta: dict
    cells: list

    def cell(self, n_train, at):
        for c in self.cells:
            if c.n_train == n_train and c.at == at:
                return c
        raise KeyError(f"no coverage cell for n={n_train} at={at}")

    def to_dict(self):
        return {
            "report": "coverage",
            "design": self.design,
            "seed": self.seed,
            "meta": self.meta,
            "cells": [c.to_dict() for c in self.cells],
        }

    def to_json(self, indent=None):
        return json.dumps(self.to_dict(), indent=indent)

    def format_table(self):
        header = (f"{'n':>6} {'at':<8}{'bias^2':>10} {'variance':>10} "
                  f"{'coverage':>10} {'reps':>6} {'failed':>7}")
        lines = [header, "-" * len(header)]
        for c in self.cells:
            lines.append(
                f"{c.n_train:>6} {c.at:<8}{c.bias_sq:>10.5f} "
                f"{c.variance:>10.5f} {c.coverage:>10.3f} "
                f"{c.n_replications:>6} {len(c.failures):>7}"
            )
        return "\n".join(lines)


def _coverage_replication(design_id, zeta, n_train, r, params, seed):
    from .inference import weighted_marginal_effect

    thresholds = _synthetic.Thresholds(*zeta)
    oracle = _synthetic.make_oracle(design_id, thresholds)
    train_seed = derive_seed(seed, STREAM_SIM, design_id, n_train, r)
    dataset = _synthetic.simulate_sample(design_id, thresholds, n_train, train_seed)
    est_seed = derive_seed(seed, STREAM_REPLICATION, design_id, n_train, r,
                           ESTIMATOR_IDS["OCF_H"])
    model = fit_estimator("OCF_H", dataset, params, est_seed)
    out = {}
    for at, w in (("mean", model.eval_mean), ("median", model.eval_median)):
        est = np.empty((_synthetic.N_COVARIATES, _synthetic.N_CLASSES))
        ses = np.empty_like(est)
        truth = np.empty_like(est)
        for j in range(_synthetic.N_COVARIATES):
            truth[j] = oracle.marginal_effects(j, w)
            for m in range(1, _synthetic.N_CLASSES + 1):
                eff, se, _, _ = weighted_marginal_effect(model, m, j, w)
                est[j, m - 1] = eff
                ses[j, m - 1] = se
        out[at] = (est, ses, truth)
    return out


def coverage_study(design, sample_sizes, n_replications, seed=0, params=None,
                   n_jobs=1):
    """Bias, variance and CI coverage of honest marginal effects.

    Per replication: simulate, fit the honest estimator, estimate all
    covariate-by-class effects with standard errors at the sample mean and
    median, and compare 95% intervals against the oracle's effects.
    """
    if n_replications < 1:
        raise EvaluationError("need at least one replication")
    params = params or _forest.ForestParams()
    design_id = int(design)
    thresholds = _synthetic.compute_thresholds(
        design_id, derive_seed(seed, STREAM_THRESHOLDS, design_id))
    zeta = (thresholds.zeta1, thresholds.zeta2)
    cells = []
    for n_train in sample_sizes:
        n_train = int(n_train)
        reps = range(n_replications)
        if n_jobs is not None and n_jobs != 1:
            raw = Parallel(n_jobs=n_jobs)(
                delayed(_try_coverage_replication)(
                    design_id, zeta, n_train, r, params, seed)
                for r in reps
            )
        else:
            raw = [
                _try_coverage_replication(design_id, zeta, n_train, r, params, seed)
                for r in reps
            ]
        failures = [msg for ok, msg in raw if not ok]
        results = [res for ok, res in raw if ok]
        for at in ("mean", "median"):
            est = np.stack([res[at][0] for res in results])     # (R, k, M)
            ses = np.stack([res[at][1] for res in results])
            truth = np.stack([res[at][2] for res in results])
            err = est - truth
            bias_sq = float(np.mean(err.mean(axis=0) ** 2))
            variance = float(np.mean(np.var(est, axis=0, ddof=1)))
            covered = np.abs(err) <= Z_975 * ses
            coverage = float(covered.mean())
            cells.append(CoverageCell(
                design=design_id, n_train=n_train, at=at,
                n_replications=n_replications, bias_sq=bias_sq,
                variance=variance, coverage=coverage, failures=list(failures),
            ))
    meta = {
        "sample_sizes": [int(n) for n in sample_sizes],
        "n_replications": int(n_replications),
        "params": _params_dict(params),
        "thresholds": list(zeta),
    }
    return CoverageReport(design=design_id, seed=int(seed), meta=meta, cells=cells)


def _try_coverage_replication(design_id, zeta, n_train, r, params, seed):
    try:
        return True, _coverage_replication(design_id, zeta, n_train, r, params, seed)
    except Exception as exc:
        return False, f"rep {r}: {exc}"


# ---------------------------------------------------------------------------
# repeated k-fold cross-validation

def _draw_folds(n, folds, outcomes, n_classes, rng, max_retries=100):
    """Shuffled-index chunking into folds of near-equal size.

    Re-draws until every fold's training complement holds all classes.
    """
    base = n // folds
    rem = n % folds
    sizes = [base + 1 if f < rem else base for f in range(folds)]
    for _ in range(max_retries):
        perm = rng.permutation(n)
        parts = []
        start = 0
        for s in sizes:
            parts.append(np.sort(perm[start:start + s]))
            start += s
        ok = True
        for f in range(folds):
            train_mask = np.ones(n, dtype=bool)
            train_mask[parts[f]] = False
            if np.unique(outcomes[train_mask]).size != n_classes:
                ok = False
                break
        if ok:
            return parts
    raise EvaluationError(
        f"could not draw {folds} folds whose training complements hold all "
        f"{n_classes} classes within {max_retries} attempts"
    )


def _cv_fold(dataset, train_idx, test_idx, estimator_names, params, fold_seed_path,
             seed):
    train_ds = dataset.subset(train_idx)
    X_test = dataset.covariates[test_idx]
    y_test = dataset.outcome[test_idx]
    out = {}
    for name in estimator_names:
        est_seed = derive_seed(seed, STREAM_FOLDS, *fold_seed_path,
                               ESTIMATOR_IDS[name])
        try:
            model = fit_estimator(name, train_ds, params, est_seed)
            out[name] = metrics_observed(y_test, model.predict(X_test))
        except Exception as exc:
            out[name] = ("__error__", f"repeat {fold_seed_path[0]} fold "
                                      f"{fold_seed_path[1]}: {exc}")
    return out


def cross_validate(dataset, estimators, folds=10, repeats=10, seed=0,
                   params=None, n_jobs=1):
    """Repeated k-fold cross-validation with observed-outcome metrics.

    Emits the full fold-level metric distribution per estimator (median, IQR,
    min, max in the summaries) across repeats x folds fits.
    """
    if dataset.n_rows < folds:
        raise EvaluationError(
            f"cannot split {dataset.n_rows} rows into {folds} folds"
        )
    params = params or _forest.ForestParams()
    estimators = list(estimators)
    for name in estimators:
        if name not in ESTIMATOR_IDS:
            raise EvaluationError(f"unknown estimator {name!r}")
    jobs = []
    for rep in range(repeats):
        rng = substream(seed, STREAM_FOLDS, rep)
        parts = _draw_folds(dataset.n_rows, folds, dataset.outcome,
                            dataset.n_classes, rng)
        for f in range(folds):
            test_idx = parts[f]
            train_mask = np.ones(dataset.n_rows, dtype=bool)
            train_mask[test_idx] = False
            jobs.append((rep, f, np.flatnonzero(train_mask), test_idx))
    if n_jobs is not None and n_jobs != 1:
        results = Parallel(n_jobs=n_jobs)(
            delayed(_cv_fold)(dataset, train_idx, test_idx, estimators, params,
                              (rep, f), seed)
            for rep, f, train_idx, test_idx in jobs
        )
    else:
        results = [
            _cv_fold(dataset, train_idx, test_idx, estimators, params, (rep, f),
                     seed)
            for rep, f, train_idx, test_idx in jobs
        ]
    cells = []
    for name in estimators:
        cell = ScenarioCell(estimator=name, n_train=dataset.n_rows,
                            n_replications=len(jobs))
        for res in results:
            value = res[name]
            if value[0] == "__error__":
                cell.failures.append(value[1])
            else:
                mse, mae, rps = value
                cell.mse.append(mse)
                cell.mae.append(mae)
                cell.rps.append(rps)
        cells.append(cell)
    meta = {
        "folds": int(folds),
        "repeats": int(repeats),
        "estimators": estimators,
        "n_rows": int(dataset.n_rows),
        "n_classes": int(dataset.n_classes),
        "params": _params_dict(params),
    }
    return MetricReport(kind="crossval", seed=int(seed), meta=meta, cells=cells)


# ---------------------------------------------------------------------------
# box-plot SVG emitter

def boxplot_svg(groups, title="", width=640, height=360):
    """Minimal box-and-whisker SVG for {label: values} without dependencies."""
    labels = list(groups)
    if not labels:
        raise EvaluationError("no groups to plot")
    stats = {lab: _summary(groups[lab]) for lab in labels}
    stats = {lab: s for lab, s in stats.items() if s["mean"] is not None}
    if not stats:
        raise EvaluationError("no non-empty groups to plot")
    lo = min(s["min"] for s in stats.values())
    hi = max(s["max"] for s in stats.values())
    if hi <= lo:
        hi = lo + 1.0
    pad = 0.05 * (hi - lo)
    lo -= pad
    hi += pad
    m_left, m_right, m_top, m_bottom = 60, 20, 30, 50
    plot_w = width - m_left - m_right
    plot_h = height - m_top - m_bottom

    def sy(v):
        return m_top + plot_h * (1.0 - (v - lo) / (hi - lo))

    n = len(stats)
    slot = plot_w / n
    box_w = min(40.0, slot * 0.5)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" '
        f'font-family="sans-serif" font-size="13">{title}</text>',
        f'<line x1="{m_left}" y1="{m_top}" x2="{m_left}" '
        f'y2="{m_top + plot_h}" stroke="black"/>',
        f'<line x1="{m_left}" y1="{m_top + plot_h}" x2="{m_left + plot_w}" '
        f'y2="{m_top + plot_h}" stroke="black"/>',
    ]
    for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
        v = lo + frac * (hi - lo)
        y = sy(v)
        parts.append(f'<line x1="{m_left - 4}" y1="{y:.1f}" x2="{m_left}" '
                     f'y2="{y:.1f}" stroke="black"/>')
        parts.append(f'<text x="{m_left - 8}" y="{y + 4:.1f}" text-anchor="end" '
                     f'font-family="sans-serif" font-size="10">{v:.4g}</text>')
    for i, (lab, s) in enumerate(stats.items()):
        cx = m_left + slot * (i + 0.5)
        x0 = cx - box_w / 2
        x1 = cx + box_w / 2
        parts.append(f'<line x1="{cx:.1f}" y1="{sy(s["min"]):.1f}" x2="{cx:.1f}" '
                     f'y2="{sy(s["max"]):.1f}" stroke="black"/>')
        for v in (s["min"], s["max"]):
            parts.append(f'<line x1="{cx - box_w / 4:.1f}" y1="{sy(v):.1f}" '
                         f'x2="{cx + box_w / 4:.1f}" y2="{sy(v):.1f}" stroke="black"/>')
        parts.append(
            f'<rect x="{x0:.1f}" y="{sy(s["q3"]):.1f}" width="{box_w:.1f}" '
            f'height="{max(sy(s["q1"]) - sy(s["q3"]), 0.5):.1f}" '
            f'fill="#9ecae1" stroke="black"/>'
        )
        parts.append(f'<line x1="{x0:.1f}" y1="{sy(s["median"]):.1f}" x2="{x1:.1f}" '
                     f'y2="{sy(s["median"]):.1f}" stroke="black" stroke-width="2"/>')
        parts.append(f'<text x="{cx:.1f}" y="{m_top + plot_h + 16}" '
                     f'text-anchor="middle" font-family="sans-serif" '
                     f'font-size="11">{lab}</text>')
    parts.append("</svg>")
    return "\n".join(parts)


def write_boxplot_svgs(report, directory, prefix=""):
    """One SVG per metric, grouping fold/replication values by estimator."""
    import os

    os.makedirs(directory, exist_ok=True)
    written = []
    scenarios = sorted({(c.design, c.n_train) for c in report.cells})
    for design, n_train in scenarios:
        for metric in ("mse", "mae", "rps"):
            groups = {}
            for c in report.cells:
                if (c.design, c.n_train) == (design, n_train):
                    groups[c.estimator] = getattr(c, metric)
            tag = f"design{design}_" if design is not None else ""
            name = f"{prefix}{tag}n{n_train}_{metric}.svg"
            title = f"{metric.upper()} ({'design ' + str(design) + ', ' if design else ''}n={n_train})"
            path = os.path.join(directory, name)
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(boxplot_svg(groups, title=title))
            written.append(path)
    return written
