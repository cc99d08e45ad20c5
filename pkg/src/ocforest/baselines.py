"""Forest baselines reusing the tree machinery.

Multinomial machine learning regresses the one-hot class indicators; ordered
machine learning regresses the cumulative indicators and differences adjacent
cumulative surfaces, truncating negative differences to zero. Both share the
forest engine (same subsampling, split-size rules and honest filling), so
benchmark comparisons isolate the prediction strategy.
"""

import csv
import os
import warnings
from dataclasses import dataclass

import numpy as np

from .data import DataError, evaluation_points
from .forest import (
    INDICATOR_CUMULATIVE,
    INDICATOR_EQUAL,
    FitError,
    fit_forests,
    normalize_rows,
    _as_query_matrix,
    _forest_raw,
)

KIND_MULTINOMIAL = "multinomial"
KIND_ORDERED = "ordered_cumulative"


@dataclass(eq=False)
class BaselineModel:
    """Fitted baseline: M one-hot forests, or M-1 cumulative forests."""

    kind: str
    n_classes: int
    forests: list
    params: object
    honest_split: object
    honest_outcomes: np.ndarray | None
    column_meta: tuple
    column_names: tuple
    eval_mean: np.ndarray
    eval_median: np.ndarray
    stratify_honest: bool = False

    @property
    def is_honest(self):
        return self.honest_split is not None

    @property
    def n_covariates(self):
        return len(self.column_meta)

    def raw_surfaces(self, W):
        """Per-surface forest averages: (Q, M) one-hot or (Q, M-1) cumulative."""
        W = _as_query_matrix(W, self.n_covariates)
        out = np.empty((W.shape[0], len(self.forests)))
        for idx, forest in enumerate(self.forests):
            out[:, idx] = _forest_raw(forest, W)
        return out

    def predict(self, w):
        return predict_baseline(self, w)


def fit_baseline(dataset, kind, params, n_jobs=1, stratify_honest=False):
    """Fit a multinomial or ordered baseline with the shared forest engine."""
    if kind == KIND_MULTINOMIAL:
        surfaces = list(range(1, dataset.n_classes + 1))
        indicator = INDICATOR_EQUAL
    elif kind == KIND_ORDERED:
        surfaces = list(range(1, dataset.n_classes))
        indicator = INDICATOR_CUMULATIVE
    else:
        raise FitError(f"unknown baseline kind {kind!r}")
    forests, split = fit_forests(dataset, params, surfaces, indicator,
                                 n_jobs=n_jobs, stratify_honest=stratify_honest)
    honest_outcomes = (
        dataset.outcome[split.honest_indices] if split is not None else None
    )
    return BaselineModel(
        kind=kind,
        n_classes=dataset.n_classes,
        forests=forests,
        params=params,
        honest_split=split,
        honest_outcomes=honest_outcomes,
        column_meta=dataset.column_meta,
        column_names=dataset.column_names,
        eval_mean=evaluation_points(dataset, "mean"),
        eval_median=evaluation_points(dataset, "median"),
        stratify_honest=stratify_honest,
    )


def cumulative_to_probabilities(mu):
    """Difference cumulative surfaces into class probabilities.

    Prepends mu_0 = 0 and appends mu_M = 1, truncates negative differences to
    zero and rescales each row onto the simplex. Rows that truncate to all
    zeros fall back to the uniform distribution; their count is returned.
    """
    mu = np.asarray(mu, dtype=np.float64)
    Q, m_cum = mu.shape
    full = np.empty((Q, m_cum + 2))
    full[:, 0] = 0.0
    full[:, 1:-1] = mu
    full[:, -1] = 1.0
    diffs = np.diff(full, axis=1)
    truncated = np.maximum(diffs, 0.0)
    zero_rows = int(np.count_nonzero(truncated.sum(axis=1) == 0))
    return normalize_rows(truncated), zero_rows


def predict_baseline(model, w):
    """Simplex probability predictions for one point or a matrix of points.

    Baseline predictions are always normalized; rows that collapse to zero
    raw mass fall back to the uniform distribution with a warning.
    """
    W = np.asarray(w, dtype=np.float64)
    single = W.ndim == 1
    raw = model.raw_surfaces(W)
    if model.kind == KIND_MULTINOMIAL:
        zero_rows = int(np.count_nonzero(raw.sum(axis=1) == 0))
        probs = normalize_rows(raw)
    else:
        probs, zero_rows = cumulative_to_probabilities(raw)
    if zero_rows:
        warnings.warn(
            f"{zero_rows} prediction row(s) had zero total mass; "
            "fell back to the uniform distribution",
            UserWarning,
            stacklevel=2,
        )
    return probs[0] if single else probs


def load_external_predictions(path, n_rows=None, n_classes=None, tol=1e-6):
    """Read an externally produced probability table.

    Delimited file of n rows by M probability columns (a header row is
    allowed and detected); every row must lie on the simplex within `tol`.
    """
    if not os.path.exists(path):
        raise DataError(f"no such file: {path}")
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        for lineno, record in enumerate(reader, start=1):
            cells = [c.strip() for c in record if c.strip() != ""]
            if not cells:
                continue
            try:
                vals = [float(c) for c in cells]
            except ValueError:
                if lineno == 1:
                    continue  # header row
                raise DataError(
                    f"{path}:{lineno}: non-numeric probability value"
                ) from None
            rows.append(vals)
    if not rows:
        raise DataError(f"{path}: no probability rows found")
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise DataError(f"{path}: inconsistent column counts {sorted(widths)}")
    P = np.array(rows, dtype=np.float64)
    if n_classes is not None and P.shape[1] != n_classes:
        raise DataError(
            f"{path}: expected {n_classes} probability columns, got {P.shape[1]}"
        )
    if n_rows is not None and P.shape[0] != n_rows:
        raise DataError(
            f"{path}: expected {n_rows} rows, got {P.shape[0]}"
        )
    if (P < -tol).any():
        bad = int(np.argwhere(P < -tol)[0][0]) + 1
        raise DataError(f"{path}: negative probability in row {bad}")
    sums = P.sum(axis=1)
    off = np.abs(sums - 1.0)
    if (off > tol).any():
        bad = int(np.argmax(off > tol)) + 1
        raise DataError(
            f"{path}: row {bad} is off the probability simplex by {off.max():.2e}"
        )
    return P
