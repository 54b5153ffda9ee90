"""Cost-aware sparse selection: OMP for logistic regression, its budgeted
variant, and stability selection across balanced bags."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .data import Bag, BagSpec, sample_balanced_bags
from .evaluation import metric_report
from .exceptions import FitError, InputError
from .model import BaggedEnsemble, FitOptions, LogisticModel, fit_logistic, predict_proba

log = logging.getLogger(__name__)

DEFAULT_COST_POOL = (10.0, 20.0, 50.0, 100.0, 200.0, 300.0, 1000.0, 2000.0)
STRATEGIES = ("budgeted", "plain_omp", "random")


@dataclass(frozen=True)
class CostVector:
    costs: np.ndarray
    budget: float = math.inf

    def with_budget(self, budget: float) -> "CostVector":
        return replace(self, budget=float(budget))

    @property
    def total(self) -> float:
        return float(np.sum(self.costs))


@dataclass
class SelectionTrace:
    per_bag_active: list[list[int]]
    frequencies: np.ndarray
    stable_set: list[int]
    selection_order: list[int] = field(default_factory=list)


def _column_norms(Phi: np.ndarray) -> np.ndarray:
    return np.einsum("ij,ij->j", Phi, Phi)


def _omp_path(Phi, y, opts, weights=None, costs=None, budget=None, gamma=None):
    """Greedy forward selection with a logistic refit after every addition.

    The next column maximises |Phi_j' R| / (Phi_j' Phi_j), divided by
    ``weights[j]`` when given. The residual starts at y. Selection stops after
    ``gamma`` columns, when no selectable column is left, or as soon as the
    chosen column would push the summed ``costs`` above ``budget``.
    """
    n, d = Phi.shape
    y = np.asarray(y, dtype=float)
    norms = _column_norms(Phi)
    selectable = norms > 0
    if not selectable.all():
        log.debug("skipping %d zero columns", int((~selectable).sum()))
    taken = np.zeros(d, dtype=bool)
    residual = y.copy()
    active: list[int] = []
    model = None
    spent = 0.0
    safe_norms = np.where(selectable, norms, 1.0)
    while gamma is None or len(active) < gamma:
        cand = selectable & ~taken
        if not cand.any():
            break
        crit = np.abs(Phi.T @ residual) / safe_norms
        if weights is not None:
            crit = crit / weights
        crit[~cand] = -np.inf
        j = int(np.argmax(crit))
        if budget is not None and spent + costs[j] > budget:
            break
        active.append(j)
        taken[j] = True
        if costs is not None:
            spent += costs[j]
        model = fit_logistic(Phi, y, opts, active, init=model)
        residual = y - model.predict_proba(Phi)
    if model is None:
        model = LogisticModel(np.zeros(d), 0.0, ())
    return model, active


def _check_labels(y):
    y = np.asarray(y)
    if not (np.any(y == 1) and np.any(y == 0)):
        raise FitError("both classes must be present")
    return y


def omp_fit(Phi, y, gamma: int, opts: FitOptions | None = None):
    """Orthogonal matching pursuit for logistic regression with ``gamma`` steps.

    Returns the final model and the active columns in selection order.
    """
    Phi = np.asarray(Phi, dtype=float)
    y = _check_labels(y)
    usable = int(np.count_nonzero(_column_norms(Phi) > 0))
    if gamma > usable:
        raise InputError(f"gamma={gamma} exceeds the {usable} non-zero columns")
    return _omp_path(Phi, y, opts or FitOptions(), gamma=gamma)


def _check_costs(Phi, costs: CostVector):
    c = np.asarray(costs.costs, dtype=float)
    if c.shape != (Phi.shape[1],):
        raise InputError(f"need one cost per column ({Phi.shape[1]}), got {c.shape}")
    if np.any(c[_column_norms(Phi) > 0] <= 0):
        raise InputError("selectable columns must have strictly positive cost")
    return c


def budgeted_omp_fit(Phi, y, costs: CostVector, opts: FitOptions | None = None):
    """OMP with the selection criterion divided by column cost.

    Runs until the next chosen column no longer fits in ``costs.budget``.
    """
    Phi = np.asarray(Phi, dtype=float)
    y = _check_labels(y)
    c = _check_costs(Phi, costs)
    return _omp_path(Phi, y, opts or FitOptions(), weights=c, costs=c, budget=costs.budget)


def assign_costs(columns, pool: Sequence[float] = DEFAULT_COST_POOL, seed: int = 0) -> CostVector:
    """Raw columns cost 1; every OSF column draws uniformly from ``pool``."""
    pool = [float(p) for p in pool]
    if not pool:
        raise InputError("cost pool must not be empty")
    if any(p <= 0 for p in pool):
        raise InputError("cost pool values must be positive")
    rng = np.random.default_rng(seed)
    costs = np.ones(len(columns))
    for j, col in enumerate(columns):
        if col.kind == "osf":
            costs[j] = pool[int(rng.integers(len(pool)))]
    return CostVector(costs)


def annotate_costs(columns, costs: CostVector) -> list:
    return [replace(c, cost=float(v)) for c, v in zip(columns, costs.costs)]


def selection_frequencies(per_bag_active: Sequence[Iterable[int]], d: int) -> np.ndarray:
    counts = np.zeros(d)
    for active in per_bag_active:
        counts[list(set(active))] += 1
    return counts / len(per_bag_active) if len(per_bag_active) else counts


def _frequency_order(J, costs):
    idx = np.arange(len(J))
    return [int(j) for j in np.lexsort((idx, costs, -np.asarray(J)))]


def stable_set(J, costs: CostVector) -> list[int]:
    """Most frequently selected columns that fit the budget.

    Walks columns by descending frequency (then ascending cost, then index)
    and keeps every column that still fits; a column that does not fit is
    skipped. Columns never selected are never taken.
    """
    J = np.asarray(J, dtype=float)
    c = np.asarray(costs.costs, dtype=float)
    chosen, spent = [], 0.0
    for j in _frequency_order(J, c):
        if J[j] <= 0:
            break
        if spent + c[j] <= costs.budget:
            chosen.append(j)
            spent += c[j]
    return chosen


def _refit_on(Phi, labels, bags, opts, cols):
    return [
        fit_logistic(Phi[b.indices], labels[b.indices], opts, cols) for b in bags
    ]


def train_bore_budget(
    rep,
    labels,
    bag_spec: BagSpec | None = None,
    costs: CostVector | None = None,
    opts: FitOptions | None = None,
    bags: list[Bag] | None = None,
) -> tuple[BaggedEnsemble, SelectionTrace]:
    """Budgeted OMP per bag, stability selection, then a plain refit on S_C."""
    Phi = np.asarray(getattr(rep, "matrix", rep), dtype=float)
    labels = np.asarray(labels)
    opts = opts or FitOptions()
    if costs is None:
        raise InputError("a cost vector with a budget is required")
    if bags is None:
        bags = sample_balanced_bags(labels, bag_spec or BagSpec())
    per_bag = [
        budgeted_omp_fit(Phi[b.indices], labels[b.indices], costs, opts)[1] for b in bags
    ]
    J = selection_frequencies(per_bag, Phi.shape[1])
    S = stable_set(J, costs)
    if not S:
        log.warning("budget %s admits no column; falling back to intercept-only models",
                    costs.budget)
    models = _refit_on(Phi, labels, bags, opts, S)
    ensemble = BaggedEnsemble(
        models, list(bags), stable_set=tuple(sorted(S)),
        columns=list(getattr(rep, "columns", [])),
    )
    trace = SelectionTrace(per_bag, J, S, _frequency_order(J, np.asarray(costs.costs)))
    return ensemble, trace


@dataclass(frozen=True)
class SweepRow:
    budget: float
    strategy: str
    auc: float
    auc_01: float
    precision_at_no: float


def _prefix_within(path, costs, budget):
    out, spent = [], 0.0
    for j in path:
        if spent + costs[j] > budget:
            break
        out.append(j)
        spent += costs[j]
    return out


def random_subset(costs: np.ndarray, budget: float, rng) -> list[int]:
    """Random columns, visited in random order, kept while they fit."""
    chosen, spent = [], 0.0
    for j in rng.permutation(len(costs)):
        if spent + costs[j] <= budget:
            chosen.append(int(j))
            spent += costs[j]
    return sorted(chosen)


def budget_sweep(
    rep_train,
    labels_train,
    rep_test,
    labels_test,
    costs: CostVector,
    budgets: Sequence[float],
    bag_spec: BagSpec | None = None,
    strategies: Sequence[str] = STRATEGIES,
    opts: FitOptions | None = None,
    random_draws: int = 20,
    seed: int = 0,
) -> list[SweepRow]:
    """Test metrics of each selection strategy at each budget.

    The OMP orderings are computed once per bag up to the largest budget;
    the budget-C selection is the affordable prefix of that ordering.
    """
    budgets = [float(b) for b in budgets]
    if budgets != sorted(budgets):
        raise InputError("budgets must be sorted ascending")
    unknown = set(strategies) - set(STRATEGIES)
    if unknown:
        raise InputError(f"unknown strategies {sorted(unknown)}")
    Phi = np.asarray(getattr(rep_train, "matrix", rep_train), dtype=float)
    Phi_test = np.asarray(getattr(rep_test, "matrix", rep_test), dtype=float)
    labels_train = np.asarray(labels_train)
    labels_test = np.asarray(labels_test)
    opts = opts or FitOptions()
    c = _check_costs(Phi, costs)
    bags = sample_balanced_bags(labels_train, bag_spec or BagSpec())
    top = max(budgets) if budgets else 0.0

    paths = {}
    for strategy in strategies:
        if strategy == "random":
            continue
        weights = c if strategy == "budgeted" else None
        paths[strategy] = [
            _omp_path(Phi[b.indices], labels_train[b.indices].astype(float), opts,
                      weights=weights, costs=c, budget=top)[1]
            for b in bags
        ]

    def score(cols):
        models = _refit_on(Phi, labels_train, bags, opts, cols)
        ens = BaggedEnsemble(models, bags)
        return metric_report(predict_proba(ens, Phi_test), labels_test)

    rng = np.random.default_rng(seed)
    rows = []
    for budget in budgets:
        for strategy in strategies:
            if strategy == "random":
                reports = [score(random_subset(c, budget, rng)) for _ in range(random_draws)]
                rows.append(SweepRow(
                    budget, strategy,
                    float(np.mean([r.auc for r in reports])),
                    float(np.mean([r.auc_01 for r in reports])),
                    float(np.mean([r.precision_at_no for r in reports])),
                ))
                continue
            per_bag = [_prefix_within(p, c, budget) for p in paths[strategy]]
            J = selection_frequencies(per_bag, Phi.shape[1])
            S = stable_set(J, costs.with_budget(budget))
            r = score(S)
            rows.append(SweepRow(budget, strategy, r.auc, r.auc_01, r.precision_at_no))
    return rows
