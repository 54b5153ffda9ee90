import csv
import json

import numpy as np
import pytest

import bore.osf as osf
from bore.cli import RunConfig, build_config, main, make_parser
from bore.exceptions import InputError
from bore.modelfile import load_model


def _write(path, X, y, ids=False):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow((["id"] if ids else []) + ["a", "b", "c", "label"])
        for i, (row, lab) in enumerate(zip(X, y)):
            w.writerow(([f"r{i}"] if ids else []) + [*(repr(float(v)) for v in row), int(lab)])
    return str(path)


@pytest.fixture
def dataset(tmp_path, toy_outliers):
    return _write(tmp_path / "toy.csv", *toy_outliers)


@pytest.fixture
def dataset_ids(tmp_path, toy_outliers):
    return _write(tmp_path / "toy_ids.csv", *toy_outliers, ids=True)


def run(*argv):
    return main([str(a) for a in argv])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_defaults():
    cfg = RunConfig()
    assert (cfg.train_fraction, cfg.bags, cfg.outlier_frac) == (0.6, 50, 0.7)
    assert cfg.cost_pool == [10, 20, 50, 100, 200, 300, 1000, 2000]
    assert cfg.replicates == 20


def test_config_file_and_flag_precedence(tmp_path):
    conf = tmp_path / "c.json"
    conf.write_text(json.dumps({"bags": 7, "seed": 4, "grid": "subspace:5"}))
    args = make_parser().parse_args(["train", "--config", str(conf), "--seed", "9"])
    cfg = build_config(args)
    assert (cfg.bags, cfg.seed, cfg.grid) == (7, 9, "subspace:5")
    conf.write_text(json.dumps({"bogus": 1}))
    with pytest.raises(InputError):
        build_config(make_parser().parse_args(["train", "--config", str(conf)]))
    with pytest.raises(InputError):
        build_config(make_parser().parse_args(["train", "--outlier-frac", "1.5"]))


def test_featurize(tmp_path, dataset_ids, capsys):
    out = tmp_path / "feat"
    assert run("featurize", "--data", dataset_ids, "--id-col", "id", "--out", out) == 0
    text = capsys.readouterr().out
    # 43 training rows keep k <= 41: five k values per family, four for ldof
    assert "rows=43" in text and "m=29 d=32" in text and "ldof: 4" in text
    rows = read_csv(out / "representation.csv")
    test_rows = read_csv(out / "test_representation.csv")
    assert len(rows) + len(test_rows) == 72
    assert list(rows[0])[:3] == ["row_id", "label", "a"]
    meta = json.loads((out / "columns.json").read_text())
    assert len(meta["columns"]) == 32


def test_featurize_subspace(tmp_path, dataset, capsys):
    assert run("featurize", "--data", dataset, "--grid", "subspace:4", "--out",
               tmp_path / "f") == 0
    assert "m=4 d=7" in capsys.readouterr().out


def test_bad_label_column_exit_2(tmp_path, dataset, capsys):
    assert run("featurize", "--data", dataset, "--label-col", "target", "--out", tmp_path) == 2
    assert "'target'" in capsys.readouterr().err


def test_missing_data_exit_2(tmp_path):
    assert run("train", "--data", tmp_path / "nope.csv", "--out", tmp_path / "m.json") == 2
    assert run("train", "--out", tmp_path / "m.json") == 2


def test_train_predict_evaluate(tmp_path, dataset_ids):
    dataset = dataset_ids
    model = tmp_path / "m.json"
    assert run("train", "--data", dataset, "--id-col", "id", "--bags", 8, "--out", model) == 0
    ens = load_model(model)
    assert ens.stable_set is None and len(ens.models) == 8
    assert ens.meta["holdout_row_ids"] and ens.meta["seed"] == 0

    pred = tmp_path / "p.csv"
    assert run("predict", "--model", model, "--data", dataset, "--id-col", "id",
               "--out", pred) == 0
    rows = read_csv(pred)
    assert list(rows[0]) == ["row_id", "probability", "label"] and rows[0]["row_id"] == "r0"
    p = np.array([float(r["probability"]) for r in rows])
    assert np.all((p > 0) & (p < 1))
    assert p[60:].mean() > p[:60].mean()

    ev = tmp_path / "ev"
    assert run("evaluate", "--model", model, "--data", dataset, "--id-col", "id",
               "--out", ev) == 0
    metrics = json.loads((ev / "metrics.json").read_text())
    assert metrics["rows"] == "holdout" and metrics["n"] == 29
    assert metrics["n_o"] == 5
    roc = read_csv(ev / "roc.csv")
    assert list(roc[0]) == ["fpr", "tpr"] and roc[0] == {"fpr": "0.0", "tpr": "0.0"}


def test_evaluate_separable_auc_one_and_roc_rows(tmp_path, dataset):
    model = tmp_path / "m.json"
    run("train", "--data", dataset, "--bags", 5, "--train-fraction", 1, "--out", model)
    ev = tmp_path / "ev"
    assert run("evaluate", "--model", model, "--data", dataset, "--out", ev) == 0
    metrics = json.loads((ev / "metrics.json").read_text())
    assert metrics["auc"] == 1.0 and metrics["rows"] == "all" and metrics["n_o"] == 12
    pred = tmp_path / "p.csv"
    run("predict", "--model", model, "--data", dataset, "--out", pred)
    distinct = len({r["probability"] for r in read_csv(pred)})
    assert len(read_csv(ev / "roc.csv")) == distinct + 1


def test_single_class_evaluate_fails(tmp_path, dataset):
    model = tmp_path / "m.json"
    run("train", "--data", dataset, "--bags", 3, "--out", model)
    one = tmp_path / "one.csv"
    lines = open(dataset).read().splitlines()
    one.write_text("\n".join(lines[:20]) + "\n")
    assert run("evaluate", "--model", model, "--data", one, "--rows", "all",
               "--out", tmp_path / "ev") == 2


def test_deterministic_model_bytes(tmp_path, dataset):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    for path in (a, b):
        assert run("train", "--data", dataset, "--bags", 4, "--seed", 5, "--out", path) == 0
    assert a.read_bytes() == b.read_bytes()


def test_budget_zero_intercept_only(tmp_path, dataset, caplog):
    model = tmp_path / "m.json"
    assert run("train", "--data", dataset, "--bags", 3, "--budget", 0, "--out", model) == 0
    ens = load_model(model)
    assert ens.stable_set == () and np.all(ens.coefficients == 0)
    assert "intercept-only" in caplog.text


def test_budgeted_predict_counts_columns(tmp_path, dataset, monkeypatch):
    model = tmp_path / "m.json"
    assert run("train", "--data", dataset, "--bags", 5, "--budget", 40, "--out", model) == 0
    ens = load_model(model)
    seen = []
    real = osf._score_new_column
    monkeypatch.setattr(osf, "_score_new_column",
                        lambda i, s, p: seen.append(s.name) or real(i, s, p))
    assert run("predict", "--model", model, "--data", dataset, "--out", tmp_path / "p.csv") == 0
    n_stable_osf = sum(1 for j in ens.stable_set if ens.columns[j].kind == "osf")
    assert len(seen) == n_stable_osf


def test_predict_schema_and_empty(tmp_path, dataset, capsys):
    model = tmp_path / "m.json"
    run("train", "--data", dataset, "--bags", 3, "--out", model)
    narrow = tmp_path / "narrow.csv"
    narrow.write_text("a,label\n0.1,0\n")
    assert run("predict", "--model", model, "--data", narrow, "--out", tmp_path / "x.csv") == 2
    assert "b, c" in capsys.readouterr().err
    empty = tmp_path / "empty.csv"
    empty.write_text("a,b,c\n")
    out = tmp_path / "empty_out.csv"
    assert run("predict", "--model", model, "--data", empty, "--out", out) == 0
    assert out.read_text() == "row_id,probability,label\n"


def test_budget_sweep_shape(tmp_path, dataset):
    out = tmp_path / "sweep.csv"
    assert run("budget-sweep", "--data", dataset, "--bags", 3, "--replicates", 2,
               "--random-draws", 2, "--budgets", "10,20,10%,50%,max", "--out", out) == 0
    rows = read_csv(out)
    assert len(rows) == 15
    assert list(rows[0]) == ["budget", "strategy", "auc", "auc_01", "precision_at_no",
                             "replicate_count", "budget_value"]
    assert {r["replicate_count"] for r in rows} == {"2"}
    top = [r for r in rows if r["budget"] == "max"]
    assert len({r["auc"] for r in top}) == 1


def test_budget_sweep_bad_budget(tmp_path, dataset):
    assert run("budget-sweep", "--data", dataset, "--budgets", "lots",
               "--out", tmp_path / "s.csv") == 2
