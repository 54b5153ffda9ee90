"""Versioned JSON model file.

Floats are written with ``repr`` precision, so a save/load round trip gives
bit-identical coefficients and reference rows.
"""

from __future__ import annotations

import json
import os
import tempfile

import numpy as np

from .data import Bag, ScaleParams
from .exceptions import InputError
from .model import BaggedEnsemble, LogisticModel
from .osf import Column

FORMAT_VERSION = 1


def ensemble_to_dict(ens: BaggedEnsemble) -> dict:
    return {
        "format": "bore-model",
        "version": FORMAT_VERSION,
        "feature_names": list(ens.feature_names or []),
        "scale": None if ens.scale is None else {
            "min": ens.scale.min.tolist(),
            "max": ens.scale.max.tolist(),
        },
        "columns": [c.to_dict() for c in ens.columns],
        "reference": None if ens.reference is None else ens.reference.tolist(),
        "models": [
            {
                "beta": m.beta.tolist(),
                "intercept": float(m.intercept),
                "active_set": None if m.active_set is None else list(m.active_set),
            }
            for m in ens.models
        ],
        "bags": [{"bag_id": b.bag_id, "indices": b.indices.tolist()} for b in ens.bags],
        "stable_set": None if ens.stable_set is None else list(ens.stable_set),
        "meta": ens.meta,
    }


def ensemble_from_dict(d: dict) -> BaggedEnsemble:
    if d.get("format") != "bore-model":
        raise InputError("not a bore model file")
    if d.get("version") != FORMAT_VERSION:
        raise InputError(f"unsupported model file version {d.get('version')}")
    models = [
        LogisticModel(
            np.array(m["beta"], dtype=float),
            float(m["intercept"]),
            None if m["active_set"] is None else tuple(m["active_set"]),
        )
        for m in d["models"]
    ]
    scale = None
    if d["scale"] is not None:
        scale = ScaleParams(np.array(d["scale"]["min"], dtype=float),
                            np.array(d["scale"]["max"], dtype=float))
    reference = None if d["reference"] is None else np.array(d["reference"], dtype=float)
    return BaggedEnsemble(
        models=models,
        bags=[Bag(np.array(b["indices"], dtype=int), int(b["bag_id"])) for b in d["bags"]],
        stable_set=None if d["stable_set"] is None else tuple(d["stable_set"]),
        scale=scale,
        columns=[Column.from_dict(c) for c in d["columns"]],
        reference=reference,
        feature_names=list(d["feature_names"]),
        meta=dict(d.get("meta") or {}),
    )


def write_atomic(path, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dumps(ens: BaggedEnsemble) -> str:
    return json.dumps(ensemble_to_dict(ens), sort_keys=True, indent=1) + "\n"


def save_model(ens: BaggedEnsemble, path) -> None:
    write_atomic(path, dumps(ens))


def load_model(path) -> BaggedEnsemble:
    if not os.path.isfile(path):
        raise InputError(f"model file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"{path} is not valid JSON: {exc}") from None
    return ensemble_from_dict(d)
