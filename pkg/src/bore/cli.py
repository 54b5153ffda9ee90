"""Command line interface.

Subcommands: featurize, train, predict, evaluate, budget-sweep. Settings come
from an optional JSON config file (``--config``); explicit flags win.
Exit codes: 0 success, 1 runtime failure, 2 invalid input or configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from collections import defaultdict
from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import __version__
from .budget import DEFAULT_COST_POOL, STRATEGIES, assign_costs, budget_sweep
from .data import BagSpec, LabeledDataset, load_csv, train_test_split
from .evaluation import metric_report, roc_curve
from .exceptions import BoreError, InputError, ShapeError
from .model import FitOptions, classify
from .modelfile import load_model, save_model, write_atomic
from .pipeline import featurize, fit_bore, grid_specs, predict_dataset, represent


DEFAULT_BUDGETS = ("10", "20", "50", "100", "200", "500", "1000", "2000", "5000",
                   "10000", "20000", "max")


@dataclass
class RunConfig:
    data: str | None = None
    label_col: str = "label"
    id_col: str | None = None
    seed: int = 0
    train_fraction: float = 0.6
    bags: int = 50
    outlier_frac: float = 0.7
    grid: str = "default"
    cost_pool: list[float] = field(default_factory=lambda: list(DEFAULT_COST_POOL))
    cost_seed: int | None = None
    budgets: list[str] = field(default_factory=lambda: list(DEFAULT_BUDGETS))
    replicates: int = 20
    random_draws: int = 20
    strategies: list[str] = field(default_factory=lambda: list(STRATEGIES))
    out: str | None = None

    def validate(self) -> "RunConfig":
        if not 0.0 < self.train_fraction <= 1.0:
            raise InputError("train_fraction must lie in (0, 1]")
        if self.bags < 1:
            raise InputError("bags must be >= 1")
        if not 0.0 < self.outlier_frac <= 1.0:
            raise InputError("outlier_frac must lie in (0, 1]")
        if not self.cost_pool or any(float(c) <= 0 for c in self.cost_pool):
            raise InputError("cost_pool must hold positive values")
        if self.replicates < 1 or self.random_draws < 1:
            raise InputError("replicates and random_draws must be >= 1")
        bad = set(self.strategies) - set(STRATEGIES)
        if bad:
            raise InputError(f"unknown strategies {sorted(bad)}")
        for b in self.budgets:
            _parse_budget(b, 1.0)
        if self.grid != "default" and not self.grid.startswith("subspace:"):
            raise InputError(f"unknown grid selector {self.grid!r}")
        return self

    @property
    def bag_spec(self) -> BagSpec:
        return BagSpec(self.bags, self.outlier_frac, self.seed)


def _parse_budget(token, total: float) -> float:
    token = str(token).strip()
    try:
        if token == "max":
            return total
        if token.endswith("%"):
            return float(token[:-1]) / 100.0 * total
        value = float(token)
    except ValueError:
        raise InputError(f"bad budget {token!r}; use a number, 'N%' or 'max'") from None
    if value < 0:
        raise InputError("budgets must be non-negative")
    return value


def _split_list(text):
    return [t.strip() for t in str(text).split(",") if t.strip()]


def build_config(args) -> RunConfig:
    cfg = RunConfig()
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise InputError(f"cannot read config {args.config}: {exc}") from None
        except json.JSONDecodeError as exc:
            raise InputError(f"config {args.config} is not valid JSON: {exc}") from None
        known = {f.name for f in fields(RunConfig)}
        unknown = set(raw) - known
        if unknown:
            raise InputError(f"unknown config keys {sorted(unknown)}")
        cfg = replace(cfg, **raw)
    overrides = {}
    for f in fields(RunConfig):
        value = getattr(args, f.name, None)
        if value is None:
            continue
        if f.name == "cost_pool":
            try:
                value = [float(v) for v in _split_list(value)]
            except ValueError:
                raise InputError(f"bad cost pool {value!r}") from None
        elif f.name in ("budgets", "strategies"):
            value = _split_list(value)
        overrides[f.name] = value
    return replace(cfg, **overrides).validate()


def _require(cfg, name):
    if getattr(cfg, name) is None:
        raise InputError(f"--{name.replace('_', '-')} is required")
    return getattr(cfg, name)


def _load(cfg) -> LabeledDataset:
    return load_csv(_require(cfg, "data"), cfg.label_col, cfg.id_col)


def _split(cfg, ds):
    if cfg.train_fraction >= 1.0:
        return ds, None
    return train_test_split(ds, cfg.train_fraction, cfg.seed)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(x) -> str:
    return repr(float(x))


def cmd_featurize(cfg: RunConfig) -> int:
    out = _require(cfg, "out")
    ds = _load(cfg)
    train, test = _split(cfg, ds)
    specs = grid_specs(cfg.grid, train.n, len(train.feature_names), cfg.seed)
    feat = featurize(train, specs)
    names = [c.name for c in feat.rep.columns]
    os.makedirs(out, exist_ok=True)

    def table(part, matrix):
        rows = [[rid, int(lab)] + [_fmt(v) for v in row]
                for rid, lab, row in zip(part.row_ids, part.labels, matrix)]
        return _csv_text(["row_id", "label"] + names, rows)

    write_atomic(os.path.join(out, "representation.csv"), table(train, feat.rep.matrix))
    if test is not None:
        write_atomic(os.path.join(out, "test_representation.csv"),
                     table(test, represent(feat, test.features)))
    meta = {
        "label_col": cfg.label_col,
        "seed": cfg.seed,
        "train_fraction": cfg.train_fraction,
        "grid": cfg.grid,
        "columns": [c.to_dict() for c in feat.rep.columns],
    }
    write_atomic(os.path.join(out, "columns.json"), json.dumps(meta, indent=1, sort_keys=True) + "\n")
    print(f"rows={train.n} k_raw={feat.rep.k_raw} m={feat.rep.m} d={feat.rep.d}")
    for family, count in sorted(feat.family_counts().items()):
        print(f"  {family}: {count}")
    return 0


def cmd_train(cfg: RunConfig, budget: float | None = None) -> int:
    out = _require(cfg, "out")
    ds = _load(cfg)
    train, test = _split(cfg, ds)
    specs = grid_specs(cfg.grid, train.n, len(train.feature_names), cfg.seed)
    cost_seed = cfg.seed if cfg.cost_seed is None else cfg.cost_seed
    ens, trace = fit_bore(train, specs, cfg.bag_spec, FitOptions(), budget,
                          cfg.cost_pool, cost_seed)
    meta = {
        "label_col": cfg.label_col,
        "seed": cfg.seed,
        "train_fraction": cfg.train_fraction,
        "grid": cfg.grid,
        "bags": cfg.bags,
        "outlier_frac": cfg.outlier_frac,
        "budget": budget,
        "cost_seed": cost_seed if budget is not None else None,
        "holdout_row_ids": None if test is None else list(test.row_ids),
        "version": __version__,
    }
    if trace is not None:
        meta["selection_frequencies"] = trace.frequencies.tolist()
    ens = replace(ens, meta=meta)
    save_model(ens, out)
    used_osf = [j for j in ens.used_columns() if ens.columns[j].kind == "osf"]
    print(f"trained {len(ens.models)} bags on {train.n} rows, d={ens.d}, "
          f"OSF columns used={len(used_osf)}")
    return 0


def _load_features(path, ens, id_col=None):
    """Feature matrix in the model's column order; extra columns are ignored."""
    if not os.path.isfile(path):
        raise InputError(f"data file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise InputError(f"{path} is empty; a header row is required") from None
        rows = [r for r in reader if r]
    missing = [n for n in ens.feature_names if n not in header]
    if missing:
        raise ShapeError(f"{path} lacks model columns: {', '.join(missing)}")
    pos = [header.index(n) for n in ens.feature_names]
    X = np.empty((len(rows), len(pos)))
    for r, row in enumerate(rows, start=1):
        for j, p in enumerate(pos):
            try:
                X[r - 1, j] = float(row[p])
            except (ValueError, IndexError):
                raise InputError(f"bad value at row {r}, column {header[p]!r}") from None
    if not np.all(np.isfinite(X)):
        raise InputError(f"{path} contains missing or non-finite values")
    if id_col is not None and id_col in header:
        ids = [row[header.index(id_col)] for row in rows]
    else:
        ids = [str(i) for i in range(len(rows))]
    return X, ids


def cmd_predict(cfg: RunConfig, model_path: str) -> int:
    out = _require(cfg, "out")
    ens = load_model(model_path)
    X, ids = _load_features(_require(cfg, "data"), ens, cfg.id_col)
    probs = predict_dataset(ens, X) if len(X) else np.empty(0)
    labels = classify(probs)
    rows = [[rid, _fmt(p), int(c)] for rid, p, c in zip(ids, probs, labels)]
    write_atomic(out, _csv_text(["row_id", "probability", "label"], rows))
    print(f"wrote {len(rows)} predictions to {out}")
    return 0


def _evaluation_rows(ens, ds, rows_mode):
    holdout = ens.meta.get("holdout_row_ids")
    if rows_mode == "all" or (rows_mode == "auto" and not holdout):
        return ds, "all"
    if not holdout:
        raise InputError("model records no holdout rows; use --rows all")
    wanted = set(holdout)
    present = [i for i, rid in enumerate(ds.row_ids) if rid in wanted]
    if len(present) != len(wanted):
        if rows_mode == "holdout":
            raise InputError("data file does not contain the model's holdout rows")
        return ds, "all"
    return ds.subset(present), "holdout"


def cmd_evaluate(cfg: RunConfig, model_path: str, rows_mode: str = "auto") -> int:
    out = _require(cfg, "out")
    ens = load_model(model_path)
    label_col = cfg.label_col
    ds = load_csv(_require(cfg, "data"), label_col, cfg.id_col)
    ds, used = _evaluation_rows(ens, ds, rows_mode)
    X = ds.features[:, [ds.feature_names.index(n) for n in ens.feature_names]] \
        if set(ens.feature_names) <= set(ds.feature_names) else None
    if X is None:
        missing = sorted(set(ens.feature_names) - set(ds.feature_names))
        raise ShapeError(f"data lacks model columns: {', '.join(missing)}")
    probs = predict_dataset(ens, X)
    report = metric_report(probs, ds.labels)
    curve = roc_curve(probs, ds.labels)
    os.makedirs(out, exist_ok=True)
    payload = dict(report.to_dict(), rows=used, n=ds.n)
    write_atomic(os.path.join(out, "metrics.json"), json.dumps(payload, indent=1, sort_keys=True) + "\n")
    write_atomic(os.path.join(out, "roc.csv"),
                 _csv_text(["fpr", "tpr"], [[_fmt(f), _fmt(t)] for f, t in curve.points]))
    print(f"auc={report.auc:.4f} auc_01={report.auc_01:.4f} "
          f"precision@n_o={report.precision_at_no:.4f} n_o={report.n_o} ({used} rows)")
    return 0


def run_budget_sweep(cfg: RunConfig) -> list[dict]:
    ds = _load(cfg)
    train, test = _split(cfg, ds)
    if test is None:
        raise InputError("budget-sweep needs a held-out part; use train_fraction < 1")
    specs = grid_specs(cfg.grid, train.n, len(train.feature_names), cfg.seed)
    feat = featurize(train, specs)
    Phi_test = represent(feat, test.features)
    base_seed = cfg.seed if cfg.cost_seed is None else cfg.cost_seed
    acc = defaultdict(list)
    for r in range(cfg.replicates):
        costs = assign_costs(feat.rep.columns, cfg.cost_pool, base_seed + r)
        resolved = [(tok, _parse_budget(tok, costs.total)) for tok in cfg.budgets]
        resolved.sort(key=lambda t: t[1])
        rows = budget_sweep(
            feat.rep, train.labels, Phi_test, test.labels, costs,
            [v for _, v in resolved], cfg.bag_spec, cfg.strategies,
            random_draws=cfg.random_draws, seed=cfg.seed + r,
        )
        tokens = [tok for tok, _ in resolved for _ in cfg.strategies]
        for tok, row in zip(tokens, rows):
            acc[(tok, row.strategy)].append(row)
    out = []
    for tok in cfg.budgets:
        for strategy in cfg.strategies:
            rows = acc[(str(tok).strip(), strategy)]
            out.append({
                "budget": str(tok).strip(),
                "strategy": strategy,
                "auc": float(np.mean([x.auc for x in rows])),
                "auc_01": float(np.mean([x.auc_01 for x in rows])),
                "precision_at_no": float(np.mean([x.precision_at_no for x in rows])),
                "replicate_count": len(rows),
                "budget_value": float(np.mean([x.budget for x in rows])),
            })
    return out


def cmd_budget_sweep(cfg: RunConfig) -> int:
    out = _require(cfg, "out")
    rows = run_budget_sweep(cfg)
    header = ["budget", "strategy", "auc", "auc_01", "precision_at_no", "replicate_count",
              "budget_value"]
    write_atomic(out, _csv_text(header, [
        [r["budget"], r["strategy"], _fmt(r["auc"]), _fmt(r["auc_01"]),
         _fmt(r["precision_at_no"]), r["replicate_count"], _fmt(r["budget_value"])]
        for r in rows
    ]))
    print(f"wrote {len(rows)} rows to {out}")
    return 0


def _common(p, out_help):
    p.add_argument("--config", help="JSON file with run settings; flags override it")
    p.add_argument("--data", help="input CSV with a header row")
    p.add_argument("--label-col", dest="label_col", help="name of the 0/1 label column (default: label)")
    p.add_argument("--id-col", dest="id_col", help="optional column holding row ids")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help=out_help)


def _training(p):
    p.add_argument("--train-fraction", dest="train_fraction", type=float,
                   help="stratified training share (default 0.6; 1 uses every row)")
    p.add_argument("--bags", type=int, help="number of balanced bags (default 50)")
    p.add_argument("--outlier-frac", dest="outlier_frac", type=float,
                   help="share of training outliers drawn into each bag (default 0.7)")
    p.add_argument("--grid", help="OSF grid: 'default' or 'subspace:<count>'")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bore", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("featurize", help="compute the outlier representation")
    _common(p, "output directory")
    _training(p)

    p = sub.add_parser("train", help="train a bagged ensemble and save the model file")
    _common(p, "model JSON path")
    _training(p)
    p.add_argument("--budget", type=float, help="prediction-time cost budget")
    p.add_argument("--cost-pool", dest="cost_pool", help="comma-separated OSF costs")
    p.add_argument("--cost-seed", dest="cost_seed", type=int)

    p = sub.add_parser("predict", help="score rows with a saved model")
    _common(p, "output CSV path")
    p.add_argument("--model", required=True)

    p = sub.add_parser("evaluate", help="metrics and ROC points on labelled rows")
    _common(p, "output directory")
    p.add_argument("--model", required=True)
    p.add_argument("--rows", choices=("auto", "all", "holdout"), default="auto",
                   help="evaluate every row or only the model's recorded holdout rows")

    p = sub.add_parser("budget-sweep", help="compare selection strategies across budgets")
    _common(p, "output CSV path")
    _training(p)
    p.add_argument("--budgets", help="comma-separated budgets: numbers, 'N%%' of total cost, 'max'")
    p.add_argument("--strategies", help=f"comma-separated subset of {','.join(STRATEGIES)}")
    p.add_argument("--replicates", type=int, help="random cost assignments (default 20)")
    p.add_argument("--random-draws", dest="random_draws", type=int,
                   help="random subsets per budget (default 20)")
    p.add_argument("--cost-pool", dest="cost_pool", help="comma-separated OSF costs")
    p.add_argument("--cost-seed", dest="cost_seed", type=int)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        cfg = build_config(args)
        if args.command == "featurize":
            return cmd_featurize(cfg)
        if args.command == "train":
            return cmd_train(cfg, args.budget)
        if args.command == "predict":
            return cmd_predict(cfg, args.model)
        if args.command == "evaluate":
            return cmd_evaluate(cfg, args.model, args.rows)
        return cmd_budget_sweep(cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (BoreError, Exception) as exc:  # noqa: BLE001 - any failure maps to exit 1
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
