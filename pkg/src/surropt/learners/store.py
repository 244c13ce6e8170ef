"""Versioned on-disk model format.

A model file is a deterministic zip archive holding one JSON header
(``meta.json``) and the numeric payload as .npy members.  Arrays round-trip
bit-exactly, so save -> load -> predict is bit-identical to the in-memory
model.  ``format_version`` guards future layout changes.
"""

from __future__ import annotations

import numpy as np

from ..errors import InputError
from ..losses import LossSpec
from ..util import load_arrays, save_arrays
from .gbdt import GbdtModel, GbdtParams, Tree
from .ridge import RidgeModel
from .svr import SvrModel

FORMAT_VERSION = 1


def save_model(path, model) -> None:
    if isinstance(model, RidgeModel):
        meta = {
            "format_version": FORMAT_VERSION,
            "kind": "ridge",
            "lambda": model.lam,
            "cv_mse": {str(k): v for k, v in model.cv_mse.items()},
        }
        save_arrays(path, meta, {"coef": model.coef})
        return
    if isinstance(model, GbdtModel):
        arrays = {"base": model.base}
        tree_counts = []
        node_counts = []
        feature, threshold, left, right, value = [], [], [], [], []
        for trees in model.ensembles:
            tree_counts.append(len(trees))
            for t in trees:
                node_counts.append(t.feature.size)
                feature.append(t.feature)
                threshold.append(t.threshold)
                left.append(t.left)
                right.append(t.right)
                value.append(t.value)
        arrays["tree_counts"] = np.asarray(tree_counts, dtype=np.int64)
        arrays["node_counts"] = np.asarray(node_counts, dtype=np.int64)
        arrays["feature"] = np.concatenate(feature) if feature else np.zeros(0, np.int32)
        arrays["threshold"] = np.concatenate(threshold) if threshold else np.zeros(0)
        arrays["left"] = np.concatenate(left) if left else np.zeros(0, np.int32)
        arrays["right"] = np.concatenate(right) if right else np.zeros(0, np.int32)
        arrays["value"] = np.concatenate(value) if value else np.zeros(0)
        meta = {
            "format_version": FORMAT_VERSION,
            "kind": "gbdt",
            "params": model.params.to_dict(),
            "loss": model.loss.to_dict(),
            "n_features": model.n_features,
            "seed": model.seed,
            "row_order_sensitive": model.row_order_sensitive,
            "diagnostics": model.diagnostics,
        }
        save_arrays(path, meta, arrays)
        return
    if isinstance(model, SvrModel):
        arrays = {"bias": model.bias}
        sv_counts = []
        for j, sv in enumerate(model.support):
            sv_counts.append(sv.shape[0])
            arrays[f"sv_{j:04d}"] = sv
            arrays[f"coef_{j:04d}"] = model.coef[j]
        arrays["sv_counts"] = np.asarray(sv_counts, dtype=np.int64)
        meta = {
            "format_version": FORMAT_VERSION,
            "kind": "svr",
            "gamma": model.gamma,
            "epsilon": model.epsilon,
            "C": model.C,
            "n_features": model.n_features,
            "cv_mse": {str(k): v for k, v in model.cv_mse.items()},
        }
        save_arrays(path, meta, arrays)
        return
    raise InputError(f"cannot serialize model of type {type(model).__name__}")


def load_model(path):
    meta, arrays = load_arrays(path)
    version = meta.get("format_version")
    if version != FORMAT_VERSION:
        raise InputError(f"unsupported model format version {version}")
    kind = meta.get("kind")
    if kind == "ridge":
        return RidgeModel(
            coef=arrays["coef"],
            lam=float(meta["lambda"]),
            cv_mse={float(k): v for k, v in meta.get("cv_mse", {}).items()},
        )
    if kind == "gbdt":
        ensembles = []
        node_counts = arrays["node_counts"]
        starts = np.concatenate([[0], np.cumsum(node_counts)])
        t = 0
        for count in arrays["tree_counts"]:
            trees = []
            for _ in range(int(count)):
                lo, hi = starts[t], starts[t + 1]
                trees.append(
                    Tree(
                        feature=arrays["feature"][lo:hi],
                        threshold=arrays["threshold"][lo:hi],
                        left=arrays["left"][lo:hi],
                        right=arrays["right"][lo:hi],
                        value=arrays["value"][lo:hi],
                    )
                )
                t += 1
            ensembles.append(trees)
        return GbdtModel(
            params=GbdtParams(**meta["params"]),
            loss=LossSpec.from_dict(meta["loss"]),
            base=arrays["base"],
            ensembles=ensembles,
            n_features=int(meta["n_features"]),
            seed=int(meta["seed"]),
            diagnostics=meta.get("diagnostics", {}),
            row_order_sensitive=bool(meta.get("row_order_sensitive", False)),
        )
    if kind == "svr":
        n_out = arrays["sv_counts"].size
        return SvrModel(
            support=[arrays[f"sv_{j:04d}"] for j in range(n_out)],
            coef=[arrays[f"coef_{j:04d}"] for j in range(n_out)],
            bias=arrays["bias"],
            gamma=float(meta["gamma"]),
            epsilon=float(meta["epsilon"]),
            C=float(meta["C"]),
            n_features=int(meta["n_features"]),
            cv_mse={float(k): v for k, v in meta.get("cv_mse", {}).items()},
        )
    raise InputError(f"unknown model kind {kind!r}")
