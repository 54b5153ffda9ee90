"""Bagged outlier representation ensembles.

Raw features are concatenated with a grid of unsupervised outlier scores,
and class-balanced bags of logistic models are trained on the result. An
optional cost budget restricts which scores are computed at prediction time.
"""

__version__ = "0.1.0"

from .budget import (
    DEFAULT_COST_POOL,
    CostVector,
    SelectionTrace,
    assign_costs,
    budget_sweep,
    budgeted_omp_fit,
    omp_fit,
    selection_frequencies,
    stable_set,
    train_bore_budget,
)
from .data import BagSpec, LabeledDataset, ScaleParams, load_csv, train_test_split
from .evaluation import MetricReport, auc, metric_report, partial_auc, precision_at_n, roc_curve
from .exceptions import BoreError, FitError, InputError
from .model import BaggedEnsemble, FitOptions, LogisticModel, fit_logistic, predict_proba, train_bore
from .modelfile import load_model, save_model
from .osf import OsfSpec, OutlierRepresentation, build_representation, compute_osf, default_osf_grid
from .pipeline import featurize, fit_bore, predict_dataset

__all__ = [
    "BagSpec", "BaggedEnsemble", "BoreError", "CostVector", "DEFAULT_COST_POOL", "FitError",
    "FitOptions", "InputError", "LabeledDataset", "LogisticModel", "MetricReport", "OsfSpec",
    "OutlierRepresentation", "ScaleParams", "SelectionTrace", "assign_costs", "auc",
    "budget_sweep", "budgeted_omp_fit", "build_representation", "compute_osf",
    "default_osf_grid", "featurize", "fit_bore", "fit_logistic", "load_csv", "load_model",
    "metric_report", "omp_fit", "partial_auc", "precision_at_n", "predict_dataset",
    "predict_proba", "roc_curve", "save_model", "selection_frequencies", "stable_set",
    "train_bore", "train_bore_budget", "train_test_split",
]
