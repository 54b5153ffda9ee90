"""Unregularised logistic regression and the class-balanced bagged ensemble."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .data import Bag, BagSpec, ScaleParams, sample_balanced_bags
from .exceptions import FitError, ShapeError


STEP_RULES = ("lbfgs", "fixed_with_backtracking")


@dataclass(frozen=True)
class FitOptions:
    max_iterations: int = 500
    gradient_tolerance: float = 1e-6
    step_rule: str = "lbfgs"
    # keeps coefficients finite on separable bags
    coef_cap: float = 50.0

    def __post_init__(self):
        if self.max_iterations < 1 or self.gradient_tolerance <= 0 or self.coef_cap <= 0:
            raise ValueError("fit options must be positive")
        if self.step_rule not in STEP_RULES:
            raise ValueError(f"unsupported step rule {self.step_rule!r}")


@dataclass(frozen=True)
class LogisticModel:
    beta: np.ndarray
    intercept: float
    active_set: tuple[int, ...] | None = None

    def decision_function(self, Phi: np.ndarray) -> np.ndarray:
        return np.asarray(Phi, dtype=float) @ self.beta + self.intercept

    def predict_proba(self, Phi: np.ndarray) -> np.ndarray:
        return sigmoid(self.decision_function(Phi))


@dataclass(frozen=True)
class BaggedEnsemble:
    models: list[LogisticModel]
    bags: list[Bag]
    stable_set: tuple[int, ...] | None = None
    scale: ScaleParams | None = None
    columns: list = field(default_factory=list)
    reference: np.ndarray | None = None
    feature_names: list[str] | None = None
    meta: dict = field(default_factory=dict)

    @property
    def d(self) -> int:
        return len(self.models[0].beta)

    @property
    def coefficients(self) -> np.ndarray:
        return np.vstack([m.beta for m in self.models])

    @property
    def intercepts(self) -> np.ndarray:
        return np.array([m.intercept for m in self.models])

    def used_columns(self) -> list[int]:
        """Columns with a nonzero coefficient in at least one bag."""
        if self.stable_set is not None:
            return sorted(self.stable_set)
        return [int(j) for j in np.flatnonzero(np.any(self.coefficients != 0, axis=0))]


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    e = np.exp(-np.abs(z))
    out = np.where(z >= 0, 1.0 / (1.0 + e), e / (1.0 + e))
    return float(out) if out.ndim == 0 else out


def _check_shapes(beta, Phi, y):
    Phi = np.asarray(Phi, dtype=float)
    y = np.asarray(y, dtype=float)
    beta = np.asarray(beta, dtype=float)
    if Phi.ndim != 2 or Phi.shape[0] != len(y) or Phi.shape[1] != len(beta):
        raise ShapeError(f"shape mismatch: Phi {Phi.shape}, beta {beta.shape}, y {y.shape}")
    return beta, Phi, y


def nll(beta, intercept, Phi, y) -> float:
    """Negative log-likelihood, summed over rows."""
    beta, Phi, y = _check_shapes(beta, Phi, y)
    eta = Phi @ beta + intercept
    return float(np.sum(np.logaddexp(0.0, eta) - y * eta))


def nll_gradient(beta, intercept, Phi, y) -> tuple[np.ndarray, float]:
    beta, Phi, y = _check_shapes(beta, Phi, y)
    r = sigmoid(Phi @ beta + intercept) - y
    return Phi.T @ r, float(r.sum())


def _nll_eta(eta, y):
    return float(np.logaddexp(0.0, eta).sum() - y @ eta)


class _Standardized:
    """Centred and scaled copy of the design matrix.

    With v = w * std and the column means folded into the intercept, the
    objective and the box |w| <= cap are unchanged but far better
    conditioned. Constant columns keep unit scale.
    """

    def __init__(self, X, cap):
        self.mu = X.mean(axis=0)
        sd = X.std(axis=0)
        sd[sd <= 0] = 1.0
        self.sd = sd
        self.Z = (X - self.mu) / sd
        self.bound = cap * sd

    def to_inner(self, w, b):
        return w * self.sd, float(b) + float(self.mu @ w)

    def to_outer(self, v, c):
        w = v / self.sd
        return w, c - float(self.mu @ w)


def _descend(std, y, v, c, opts, history):
    """Projected gradient descent with Barzilai-Borwein trial steps.

    Trial steps are halved until the sufficient-decrease test for projected
    steps holds, so the objective never increases.
    """
    Z, bound, cap = std.Z, std.bound, opts.coef_cap
    eta = Z @ v + c
    val = _nll_eta(eta, y)
    if history is not None:
        history.append(val)
    step = 1.0 / (0.25 * len(y) * (Z.shape[1] + 1))
    prev = None
    it = 0
    while it < opts.max_iterations:
        r = sigmoid(eta) - y
        gb = float(r.sum())
        gv = r @ Z
        # projected gradient in the original coordinates
        w = v / std.sd
        pg = np.clip(w - (gv / std.sd + std.mu * gb), -cap, cap) - w
        if max(np.max(np.abs(pg), initial=0.0), abs(gb)) < opts.gradient_tolerance:
            break
        if prev is not None:
            dv, dc = v - prev[0], c - prev[1]
            sv, sc = gv - prev[2], gb - prev[3]
            sy = dv @ sv + dc * sc
            step = (dv @ dv + dc * dc) / sy if sy > 0 else 2.0 * step
        while True:
            v_new = np.clip(v - step * gv, -bound, bound)
            c_new = c - step * gb
            eta_new = Z @ v_new + c_new
            val_new = _nll_eta(eta_new, y)
            dv, dc = v_new - v, c_new - c
            model_val = val + gv @ dv + gb * dc + (dv @ dv + dc * dc) / (2.0 * step)
            if val_new <= model_val and val_new <= val:
                break
            step *= 0.5
            if step < 1e-30:
                return v, c, it
        prev = (v, c, gv, gb)
        v, c, val, eta = v_new, c_new, val_new, eta_new
        it += 1
        if history is not None:
            history.append(val)
    return v, c, it


def _lbfgs(std, y, v, c, opts, history):
    Z = std.Z

    def fun(theta):
        eta = Z @ theta[:-1] + theta[-1]
        r = sigmoid(eta) - y
        return _nll_eta(eta, y), np.append(r @ Z, r.sum())

    def record(intermediate_result):
        history.append(float(intermediate_result.fun))

    theta0 = np.append(v, c)
    if history is not None:
        history.append(fun(theta0)[0])
    bounds = [(-b, b) for b in std.bound] + [(None, None)]
    res = minimize(
        fun, theta0, jac=True, method="L-BFGS-B", bounds=bounds,
        callback=record if history is not None else None,
        options={"maxiter": opts.max_iterations, "gtol": opts.gradient_tolerance},
    )
    theta = res.x
    # L-BFGS-B only accepts descent steps; guard against a worse final iterate
    if res.fun > fun(theta0)[0]:
        theta = theta0
    return theta[:-1], float(theta[-1]), int(res.nit)


def minimize_nll(X, y, w0, b0, opts: FitOptions, history: list | None = None):
    """Minimise the summed negative log-likelihood over |w| <= cap.

    Returns (w, b, iterations). ``history`` collects the objective after
    every accepted iterate.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    std = _Standardized(X, opts.coef_cap)
    v, c = std.to_inner(np.clip(np.asarray(w0, dtype=float), -opts.coef_cap, opts.coef_cap), b0)
    solver = _lbfgs if opts.step_rule == "lbfgs" else _descend
    v, c, it = solver(std, y, v, c, opts, history)
    w, b = std.to_outer(v, c)
    return np.clip(w, -opts.coef_cap, opts.coef_cap), b, it


def _logit(p: float) -> float:
    return float(np.log(p) - np.log1p(-p))


def fit_logistic(
    Phi: np.ndarray,
    y: np.ndarray,
    opts: FitOptions | None = None,
    column_subset: Sequence[int] | None = None,
    init: LogisticModel | None = None,
    history: list | None = None,
) -> LogisticModel:
    """Maximum-likelihood fit restricted to ``column_subset``.

    Columns outside the subset stay at 0. With an empty subset the result is
    the intercept-only model whose probability equals the class prior.
    """
    opts = opts or FitOptions()
    Phi = np.asarray(Phi, dtype=float)
    y = np.asarray(y, dtype=float)
    if Phi.ndim != 2 or Phi.shape[0] != len(y):
        raise ShapeError(f"Phi {Phi.shape} does not match {len(y)} labels")
    if not (np.any(y == 1) and np.any(y == 0)):
        raise FitError("both classes must be present to fit a logistic model")
    d = Phi.shape[1]
    if column_subset is None:
        cols = list(range(d))
    else:
        cols = sorted({int(j) for j in column_subset})
        if cols and (cols[0] < 0 or cols[-1] >= d):
            raise ShapeError(f"column subset outside 0..{d - 1}")
    X = np.ascontiguousarray(Phi[:, cols])
    if init is None:
        w0, b0 = np.zeros(len(cols)), _logit(y.mean())
    else:
        w0, b0 = np.asarray(init.beta, dtype=float)[cols], init.intercept
    w, b, _ = minimize_nll(X, y, w0, b0, opts, history)
    beta = np.zeros(d)
    beta[cols] = w
    return LogisticModel(beta, float(b), None if column_subset is None else tuple(cols))


def train_bore(
    rep,
    labels,
    bag_spec: BagSpec | None = None,
    opts: FitOptions | None = None,
    column_subset: Sequence[int] | None = None,
    bags: list[Bag] | None = None,
) -> BaggedEnsemble:
    """One unregularised fit per balanced bag, all on the same columns.

    ``rep`` is an :class:`~bore.osf.OutlierRepresentation` or a plain matrix.
    Restricting ``column_subset`` to the raw columns gives the BE baseline.
    """
    Phi = np.asarray(getattr(rep, "matrix", rep), dtype=float)
    labels = np.asarray(labels)
    if bags is None:
        bags = sample_balanced_bags(labels, bag_spec or BagSpec())
    models = [
        fit_logistic(Phi[bag.indices], labels[bag.indices], opts, column_subset)
        for bag in bags
    ]
    return BaggedEnsemble(models, list(bags), columns=list(getattr(rep, "columns", [])))


def predict_proba(ensemble: BaggedEnsemble, Phi_new: np.ndarray) -> np.ndarray:
    """Average of the per-bag probabilities."""
    Phi_new = np.asarray(Phi_new, dtype=float)
    if Phi_new.ndim != 2 or Phi_new.shape[1] != ensemble.d:
        raise ShapeError(f"expected {ensemble.d} columns, got shape {Phi_new.shape}")
    P = sigmoid(Phi_new @ ensemble.coefficients.T + ensemble.intercepts)
    # sorted before summing so the result does not depend on bag order
    return np.sort(P.reshape(Phi_new.shape[0], -1), axis=1).mean(axis=1)


def classify(probs, threshold: float = 0.5) -> np.ndarray:
    return (np.asarray(probs) > threshold).astype(int)
