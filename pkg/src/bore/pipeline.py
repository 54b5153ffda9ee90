"""End-to-end helpers: raw dataset -> representation -> ensemble -> scores."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .budget import DEFAULT_COST_POOL, SelectionTrace, annotate_costs, assign_costs, train_bore_budget
from .data import BagSpec, LabeledDataset, ScaleParams, apply_minmax, fit_minmax
from .exceptions import InputError
from .model import BaggedEnsemble, FitOptions, predict_proba, train_bore
from .osf import OsfSpec, OutlierRepresentation, build_representation, default_osf_grid, \
    score_external, subspace_grid


@dataclass(frozen=True)
class Featurized:
    scale: ScaleParams
    reference: np.ndarray
    rep: OutlierRepresentation
    feature_names: list[str]

    def family_counts(self) -> dict[str, int]:
        return dict(Counter(c.spec.family for c in self.rep.columns if c.kind == "osf"))


def grid_specs(grid: str, n_train: int, k_raw: int, seed: int = 0) -> list[OsfSpec]:
    """Resolve a grid selector: ``default`` or ``subspace:<count>``."""
    if grid == "default":
        return default_osf_grid(n_train, k_raw)
    if grid.startswith("subspace:"):
        try:
            count = int(grid.split(":", 1)[1])
        except ValueError:
            raise InputError(f"bad grid selector {grid!r}") from None
        return subspace_grid(n_train, k_raw, count, seed)
    raise InputError(f"unknown grid selector {grid!r}; use 'default' or 'subspace:N'")


def featurize(train: LabeledDataset, specs: Sequence[OsfSpec]) -> Featurized:
    scale = fit_minmax(train)
    reference = apply_minmax(train.features, scale)
    rep = build_representation(reference, specs, train.feature_names)
    return Featurized(scale, reference, rep, list(train.feature_names))


def represent(ensemble_or_featurized, X_raw: np.ndarray, needed: Sequence[int] | None = None):
    src = ensemble_or_featurized
    columns = src.columns if isinstance(src, BaggedEnsemble) else src.rep.columns
    X = apply_minmax(X_raw, src.scale)
    return score_external(columns, src.reference, X, needed)


def fit_bore(
    train: LabeledDataset,
    specs: Sequence[OsfSpec],
    bag_spec: BagSpec | None = None,
    opts: FitOptions | None = None,
    budget: float | None = None,
    cost_pool: Sequence[float] = DEFAULT_COST_POOL,
    cost_seed: int = 0,
    featurized: Featurized | None = None,
) -> tuple[BaggedEnsemble, SelectionTrace | None]:
    """Featurise the training rows and train BORE, or BORE-Budget if ``budget``."""
    feat = featurized or featurize(train, specs)
    bag_spec = bag_spec or BagSpec()
    trace = None
    columns = feat.rep.columns
    if budget is None:
        ens = train_bore(feat.rep, train.labels, bag_spec, opts)
    else:
        costs = assign_costs(columns, cost_pool, cost_seed).with_budget(budget)
        columns = annotate_costs(columns, costs)
        ens, trace = train_bore_budget(feat.rep, train.labels, bag_spec, costs, opts)
    ens = replace(
        ens,
        scale=feat.scale,
        reference=feat.reference,
        columns=list(columns),
        feature_names=feat.feature_names,
    )
    return ens, trace


def predict_dataset(ensemble: BaggedEnsemble, X_raw: np.ndarray) -> np.ndarray:
    """Outlier probabilities for raw rows; only columns the model uses are scored."""
    Phi = represent(ensemble, X_raw, ensemble.used_columns())
    return predict_proba(ensemble, Phi)
