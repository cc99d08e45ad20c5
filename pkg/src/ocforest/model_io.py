"""Model serialization: self-describing JSON, lossless round trips.

The document carries the parameters, honest split indices and outcomes,
column metadata and per-tree node arrays. Parent pointers and subtree ends
are recomputed on load; floats survive via repr round-tripping in JSON.
"""

import json
import os

import numpy as np

from .baselines import KIND_MULTINOMIAL, KIND_ORDERED, BaselineModel
from .data import CovariateKind, DataError, HonestSplit
from .forest import ClassForest, ForestParams, OcfModel, Tree

FORMAT_NAME = "ocforest-model"
FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    """Raised when a model document cannot be parsed."""


def _tree_to_dict(tree):
    d = {
        "feature": tree.feature.tolist(),
        "threshold": tree.threshold.tolist(),
        "left": tree.left.tolist(),
        "right": tree.right.tolist(),
        "grown_on": tree.grown_on.tolist(),
    }
    if tree.filled:
        d["value_rows"] = tree.value_rows.tolist()
        d["slice_start"] = tree.slice_start.tolist()
        d["slice_end"] = tree.slice_end.tolist()
        d["leaf_value"] = tree.leaf_value.tolist()
    return d


def _tree_from_dict(d, m):
    feature = np.asarray(d["feature"], dtype=np.int64)
    left = np.asarray(d["left"], dtype=np.int64)
    right = np.asarray(d["right"], dtype=np.int64)
    n_nodes = feature.size
    parent = np.full(n_nodes, -1, dtype=np.int64)
    internal = np.flatnonzero(left >= 0)
    parent[left[internal]] = internal
    parent[right[internal]] = internal
    sub_end = np.empty(n_nodes, dtype=np.int64)
    for i in range(n_nodes - 1, -1, -1):
        sub_end[i] = i + 1 if feature[i] < 0 else sub_end[right[i]]
    kwargs = {}
    if "value_rows" in d:
        kwargs = {
            "value_rows": np.asarray(d["value_rows"], dtype=np.int64),
            "slice_start": np.asarray(d["slice_start"], dtype=np.int64),
            "slice_end": np.asarray(d["slice_end"], dtype=np.int64),
            "leaf_value": np.asarray(d["leaf_value"], dtype=np.float64),
        }
    return Tree(
        m=m, feature=feature,
        threshold=np.asarray(d["threshold"], dtype=np.float64),
        left=left, right=right, parent=parent, sub_end=sub_end,
        grown_on=np.asarray(d["grown_on"], dtype=np.int64),
        **kwargs,
    )


def model_to_dict(model):
    params = model.params
    doc = {
        "format": FORMAT_NAME,
        "format_version": FORMAT_VERSION,
        "kind": model.kind if isinstance(model, OcfModel) else model.kind,
        "n_classes": model.n_classes,
        "params": {
            "n_trees": params.n_trees,
            "subsample_fraction": params.subsample_fraction,
            "mtry": params.mtry,
            "alpha": params.alpha,
            "min_leaf": params.min_leaf,
            "honest_fraction": params.honest_fraction,
            "omega": params.omega,
            "seed": params.seed,
            "normalize": params.normalize,
        },
        "stratify_honest": model.stratify_honest,
        "column_names": list(model.column_names),
        "column_meta": [
            {"kind": cm.kind, "observed_min": cm.observed_min,
             "observed_max": cm.observed_max, "std_dev": cm.std_dev}
            for cm in model.column_meta
        ],
        "eval_mean": np.asarray(model.eval_mean).tolist(),
        "eval_median": np.asarray(model.eval_median).tolist(),
    }
    if model.honest_split is not None:
        doc["honest"] = {
            "train_indices": model.honest_split.train_indices.tolist(),
            "honest_indices": model.honest_split.honest_indices.tolist(),
            "honest_outcomes": model.honest_outcomes.tolist(),
        }
    else:
        doc["honest"] = None
    doc["forests"] = [
        {
            "surface": f.m,
            "indicator": f.indicator,
            "trees": [_tree_to_dict(t) for t in f.trees],
        }
        for f in model.forests
    ]
    return doc


def model_from_dict(doc):
    if doc.get("format") != FORMAT_NAME:
        raise ModelFormatError(
            f"not a model document (format={doc.get('format')!r})"
        )
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        raise ModelFormatError(
            f"unsupported model format version {version!r} "
            f"(this build reads version {FORMAT_VERSION})"
        )
    params = ForestParams(**doc["params"])
    meta = tuple(
        CovariateKind(cm["kind"], cm["observed_min"], cm["observed_max"],
                      cm["std_dev"])
        for cm in doc["column_meta"]
    )
    names = tuple(doc["column_names"])
    honest = doc.get("honest")
    if honest is not None:
        split = HonestSplit(
            np.asarray(honest["train_indices"], dtype=np.int64),
            np.asarray(honest["honest_indices"], dtype=np.int64),
        )
        honest_outcomes = np.asarray(honest["honest_outcomes"], dtype=np.int64)
    else:
        split = None
        honest_outcomes = None
    forests = [
        ClassForest(
            m=f["surface"],
            indicator=f["indicator"],
            trees=[_tree_from_dict(t, f["surface"]) for t in f["trees"]],
        )
        for f in doc["forests"]
    ]
    common = dict(
        n_classes=doc["n_classes"],
        forests=forests,
        params=params,
        honest_split=split,
        honest_outcomes=honest_outcomes,
        column_meta=meta,
        column_names=names,
        eval_mean=np.asarray(doc["eval_mean"], dtype=np.float64),
        eval_median=np.asarray(doc["eval_median"], dtype=np.float64),
        stratify_honest=doc.get("stratify_honest", False),
    )
    kind = doc.get("kind", "ocf")
    if kind == "ocf":
        return OcfModel(**common)
    if kind in (KIND_MULTINOMIAL, KIND_ORDERED):
        return BaselineModel(kind=kind, **common)
    raise ModelFormatError(f"unknown model kind {kind!r}")


def save_model(model, path):
    """Write the model document atomically."""
    doc = model_to_dict(model)
    tmp = f"{path}.tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
    os.replace(tmp, path)
    return path


def load_model(path):
    if not os.path.exists(path):
        raise DataError(f"no such file: {path}")
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelFormatError(f"{path}: invalid JSON ({exc})") from None
    return model_from_dict(doc)
