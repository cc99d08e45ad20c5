"""Dataset representation, CSV ingestion and honest sample splitting.

Outcomes are ordered class labels 1..M. Covariates are a dense float matrix
with per-column kind metadata (continuous vs. discrete) driving how marginal
effects are evaluated for each column.
"""

import csv
import math
import os
from dataclasses import dataclass, replace

import numpy as np

from ._rng import STREAM_SPLIT, round_half_up, substream

MAX_SPLIT_RETRIES = 100

CONTINUOUS = "continuous"
DISCRETE = "discrete"


class DataError(ValueError):
    """Raised for malformed input data or invalid split requests."""


@dataclass(frozen=True)
class CovariateKind:
    """Kind and summary statistics of a single covariate column."""

    kind: str
    observed_min: float
    observed_max: float
    std_dev: float

    def __post_init__(self):
        if self.kind not in (CONTINUOUS, DISCRETE):
            raise DataError(f"unknown covariate kind {self.kind!r}")
        if self.observed_min > self.observed_max:
            raise DataError("observed_min must not exceed observed_max")
        if self.std_dev < 0:
            raise DataError("std_dev must be non-negative")


@dataclass(frozen=True)
class Dataset:
    """Covariate matrix plus ordered outcome labels in {1..M}.

    Arrays are frozen (read-only) after construction so datasets can be shared
    across concurrent tree builders. Presence of every class is enforced where
    it matters (CSV ingestion and model fitting), not at construction, so that
    tiny simulated samples remain representable.
    """

    covariates: np.ndarray
    outcome: np.ndarray
    n_classes: int
    column_meta: tuple
    column_names: tuple

    def __post_init__(self):
        X = np.ascontiguousarray(np.asarray(self.covariates, dtype=np.float64))
        y = np.asarray(self.outcome, dtype=np.int64)
        if X.ndim != 2:
            raise DataError("covariates must be a 2-d matrix")
        n, k = X.shape
        if n < 2 or k < 1:
            raise DataError(f"need at least 2 rows and 1 covariate, got {n}x{k}")
        if y.shape != (n,):
            raise DataError("outcome length must match covariate rows")
        if self.n_classes < 2:
            raise DataError("need at least 2 outcome classes")
        if y.min() < 1 or y.max() > self.n_classes:
            raise DataError(
                f"outcome labels must lie in 1..{self.n_classes}, "
                f"observed range [{y.min()}, {y.max()}]"
            )
        if np.isnan(X).any():
            raise DataError("covariates contain missing values")
        if len(self.column_meta) != k:
            raise DataError("column_meta length must equal the number of covariates")
        if len(self.column_names) != k:
            raise DataError("column_names length must equal the number of covariates")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "covariates", X)
        object.__setattr__(self, "outcome", y)
        object.__setattr__(self, "column_meta", tuple(self.column_meta))
        object.__setattr__(self, "column_names", tuple(str(c) for c in self.column_names))

    @property
    def n_rows(self):
        return self.covariates.shape[0]

    @property
    def n_covariates(self):
        return self.covariates.shape[1]

    def class_counts(self):
        """Occurrences of each class 1..M as a length-M array."""
        return np.bincount(self.outcome, minlength=self.n_classes + 1)[1:]

    def require_all_classes(self):
        counts = self.class_counts()
        if (counts == 0).any():
            missing = int(np.flatnonzero(counts == 0)[0]) + 1
            raise DataError(f"class {missing} absent from the data")

    def subset(self, indices):
        """Row subset as a new Dataset; column kinds are re-inferred."""
        indices = np.asarray(indices, dtype=np.intp)
        ds = Dataset(
            covariates=self.covariates[indices],
            outcome=self.outcome[indices],
            n_classes=self.n_classes,
            column_meta=self.column_meta,
            column_names=self.column_names,
        )
        return infer_kinds(ds)


@dataclass(frozen=True)
class HonestSplit:
    """Disjoint training / honest index sets covering all rows."""

    train_indices: np.ndarray
    honest_indices: np.ndarray

    def __post_init__(self):
        tr = np.asarray(self.train_indices, dtype=np.int64)
        ho = np.asarray(self.honest_indices, dtype=np.int64)
        if tr.size == 0 or ho.size == 0:
            raise DataError("both sides of an honest split must be non-empty")
        if np.intersect1d(tr, ho).size > 0:
            raise DataError("honest split sides must be disjoint")
        tr.setflags(write=False)
        ho.setflags(write=False)
        object.__setattr__(self, "train_indices", tr)
        object.__setattr__(self, "honest_indices", ho)

    @property
    def n_rows(self):
        return self.train_indices.size + self.honest_indices.size


def from_arrays(covariates, outcome, column_names=None, n_classes=None,
                max_discrete_levels=10):
    """Build a Dataset from raw arrays, inferring column kinds.

    M defaults to the maximum observed label.
    """
    X = np.asarray(covariates, dtype=np.float64)
    y = np.asarray(outcome, dtype=np.int64)
    if n_classes is None:
        n_classes = int(y.max())
    if column_names is None:
        column_names = tuple(f"x{j + 1}" for j in range(X.shape[1]))
    placeholder = tuple(
        CovariateKind(CONTINUOUS, 0.0, 0.0, 0.0) for _ in range(X.shape[1])
    )
    ds = Dataset(X, y, int(n_classes), placeholder, tuple(column_names))
    return infer_kinds(ds, max_discrete_levels=max_discrete_levels)


def load_csv(path, outcome_column, max_discrete_levels=10):
    """Load a comma-separated file with a header row into a Dataset.

    The outcome column must hold positive integers forming the contiguous set
    {1..M}; every other column is parsed as a float covariate. Missing or
    non-numeric cells are rejected with their location.
    """
    if not os.path.exists(path):
        raise DataError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if outcome_column not in header:
            raise DataError(
                f"{path}: outcome column {outcome_column!r} not found "
                f"(columns: {', '.join(header)})"
            )
        y_col = header.index(outcome_column)
        cov_cols = [j for j in range(len(header)) if j != y_col]
        if not cov_cols:
            raise DataError(f"{path}: no covariate columns besides the outcome")
        rows = []
        labels = []
        for lineno, record in enumerate(reader, start=2):
            if len(record) != len(header):
                raise DataError(
                    f"{path}:{lineno}: expected {len(header)} fields, got {len(record)}"
                )
            vals = np.empty(len(cov_cols))
            for out_idx, j in enumerate(cov_cols):
                cell = record[j].strip()
                if cell == "":
                    raise DataError(f"{path}:{lineno}: missing value in column {header[j]!r}")
                try:
                    vals[out_idx] = float(cell)
                except ValueError:
                    raise DataError(
                        f"{path}:{lineno}: non-numeric value {cell!r} in column {header[j]!r}"
                    ) from None
            if not np.isfinite(vals).all():
                bad = cov_cols[int(np.flatnonzero(~np.isfinite(vals))[0])]
                raise DataError(f"{path}:{lineno}: non-finite value in column {header[bad]!r}")
            cell = record[y_col].strip()
            if cell == "":
                raise DataError(f"{path}:{lineno}: missing value in outcome column")
            try:
                fy = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}:{lineno}: non-numeric outcome {cell!r}"
                ) from None
            if not fy.is_integer() or fy < 1:
                raise DataError(f"{path}:{lineno}: outcome {cell!r} is not a positive integer")
            rows.append(vals)
            labels.append(int(fy))
    if len(rows) < 2:
        raise DataError(f"{path}: need at least 2 data rows, got {len(rows)}")
    y = np.array(labels, dtype=np.int64)
    n_classes = int(y.max())
    present = np.bincount(y, minlength=n_classes + 1)[1:]
    if (present == 0).any():
        gap = int(np.flatnonzero(present == 0)[0]) + 1
        raise DataError(
            f"{path}: outcome labels must form a contiguous set 1..{n_classes}; "
            f"class {gap} absent"
        )
    names = tuple(header[j] for j in cov_cols)
    return from_arrays(np.vstack(rows), y, column_names=names, n_classes=n_classes,
                       max_discrete_levels=max_discrete_levels)


def infer_kinds(dataset, max_discrete_levels=10):
    """Fill per-column kind metadata from the observed values.

    A column is discrete iff all of its values are integers and it has at most
    ``max_discrete_levels`` distinct values; otherwise it is continuous. The
    standard deviation uses the n-1 denominator. Idempotent.
    """
    X = dataset.covariates
    meta = []
    for j in range(X.shape[1]):
        col = X[:, j]
        integral = bool(np.all(col == np.floor(col)))
        if integral and np.unique(col).size <= max_discrete_levels:
            kind = DISCRETE
        else:
            kind = CONTINUOUS
        sd = float(np.std(col, ddof=1)) if col.size > 1 else 0.0
        meta.append(CovariateKind(kind, float(col.min()), float(col.max()), sd))
    return replace(dataset, column_meta=tuple(meta))


def _draw_partition(n, n_honest, rng):
    perm = rng.permutation(n)
    honest = np.sort(perm[:n_honest])
    train = np.sort(perm[n_honest:])
    return train, honest


def split_honest(dataset, honest_fraction, seed, stratify=False):
    """Randomly partition rows into training and honest sides.

    The honest side gets round(n * honest_fraction) rows (halves round up, so
    odd samples put the surplus on the honest side). The partition is re-drawn
    up to 100 times until every class 1..M appears on the honest side;
    ``stratify=True`` instead draws the honest rows per class, which guarantees
    presence for rare classes at the cost of exchangeability.
    """
    if not 0.0 < honest_fraction < 1.0:
        raise DataError(f"honest_fraction must lie in (0, 1), got {honest_fraction}")
    n = dataset.n_rows
    M = dataset.n_classes
    if n * honest_fraction < M:
        raise DataError(
            f"honest side of fraction {honest_fraction} cannot hold all "
            f"{M} classes with n={n}"
        )
    dataset.require_all_classes()
    n_honest = round_half_up(n * honest_fraction)
    n_honest = min(max(n_honest, 1), n - 1)
    rng = substream(seed, STREAM_SPLIT)
    y = dataset.outcome
    if stratify:
        honest_parts = []
        for c in range(1, M + 1):
            members = np.flatnonzero(y == c)
            perm = members[rng.permutation(members.size)]
            take = min(max(round_half_up(members.size * honest_fraction), 1),
                       members.size)
            honest_parts.append(perm[:take])
        honest = np.sort(np.concatenate(honest_parts))
        if honest.size == n:
            honest = honest[:-1]
        train = np.setdiff1d(np.arange(n), honest)
        return HonestSplit(train, honest)
    for _ in range(MAX_SPLIT_RETRIES):
        train, honest = _draw_partition(n, n_honest, rng)
        if np.unique(y[honest]).size == M:
            return HonestSplit(train, honest)
    raise DataError(
        f"could not draw an honest side containing all {M} classes in "
        f"{MAX_SPLIT_RETRIES} attempts; a class is too rare "
        "(consider --stratify-honest)"
    )


def evaluation_points(dataset, kind="mean", point=None):
    """Covariate vector at which effects are evaluated.

    ``kind`` is "mean", "median" or "custom" (with ``point``). Means and
    medians of discrete columns are NOT rounded here; integer rounding happens
    inside marginal-effect evaluation.
    """
    X = dataset.covariates
    if kind == "mean":
        return X.mean(axis=0)
    if kind == "median":
        return np.median(X, axis=0)
    if kind == "custom":
        w = np.asarray(point, dtype=np.float64)
        if w.shape != (X.shape[1],):
            raise DataError(
                f"custom evaluation point must have length {X.shape[1]}, got {w.shape}"
            )
        return w
    raise DataError(f"unknown evaluation point kind {kind!r}")
