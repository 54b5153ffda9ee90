import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import bore.osf as osf
from bore.exceptions import OsfError, ShapeError
from bore.neighbors import NeighborIndex
from bore.osf import (
    EPS, FAMILIES, OsfSpec, build_representation, compute_osf, default_osf_grid,
    sample_subspaces, score_external, score_knn_dist, score_ldof, score_lof, score_odin,
    subspace_grid,
)

import oracles

LINE = np.array([[0.0], [1.0], [2.0], [10.0]])


def scores(X, family, k, **kw):
    return compute_osf(np.asarray(X, dtype=float), OsfSpec(family, k, **kw)).values


def test_knn_line():
    assert scores(LINE, "knn_dist", 1).tolist() == [1, 1, 1, 8]
    assert scores(LINE, "knn_dist", 3).tolist() == [10, 9, 8, 10]
    assert scores(LINE, "knn_weight", 2).tolist() == [3, 2, 3, 17]
    assert np.array_equal(scores(LINE, "knn_weight", 1), scores(LINE, "knn_dist", 1))


def test_identical_points_zero():
    X = np.ones((5, 2))
    for fam in ("knn_dist", "knn_weight"):
        assert np.all(scores(X, fam, 2) == 0)


def test_odin_line():
    assert scores(LINE, "odin", 1).tolist() == [1 / 2, 1 / 3, 1 / 2, 1.0]
    pair = np.array([[0.0], [1.0]])
    s = scores(pair, "odin", 1)
    assert s[0] == s[1] == 0.5


def test_lof_examples():
    grid = np.arange(10.0)[:, None]
    interior = scores(grid, "lof", 2)[2:-2]
    assert np.all((interior >= 0.8) & (interior <= 1.3))
    dup = np.zeros((5, 1))
    assert np.allclose(scores(dup, "lof", 2), 1.0)
    assert np.allclose(scores(dup, "simplified_lof", 2), 1.0)
    far = np.array([[0.0], [1.0], [2.0], [50.0]])
    lof = scores(far, "lof", 2)
    slof = scores(far, "simplified_lof", 2)
    assert lof[3] > 3 and slof[3] > 10
    assert np.argmax(lof) == np.argmax(slof) == 3
    grid_slof = scores(grid, "simplified_lof", 2)[2:-2]
    assert np.allclose(grid_slof, 1.0)


def test_ldof_examples():
    tri = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, np.sqrt(3) / 2]])
    assert np.allclose(scores(tri, "ldof", 2), 1.0)
    assert scores(LINE, "ldof", 2)[3] == 8.5
    # two exact duplicates next to the query: inner distance 0 -> epsilon floor
    X = np.array([[0.0], [0.0], [1.0]])
    s = scores(X, "ldof", 2)
    assert np.isfinite(s).all() and s[2] == pytest.approx(1.0 / EPS)


def test_preconditions():
    with pytest.raises(OsfError):
        scores(LINE, "lof", 5)
    with pytest.raises(OsfError):
        scores(LINE, "ldof", 1)
    with pytest.raises(OsfError):
        scores(np.zeros((1, 1)), "knn_dist", 1)
    with pytest.raises(OsfError):
        scores(LINE, "isolation_forest", 1)
    with pytest.raises(OsfError):
        score_lof(NeighborIndex(LINE), OsfSpec("knn_dist", 1))


def test_scorer_entry_points():
    index = NeighborIndex(LINE)
    assert score_knn_dist(index, OsfSpec("knn_dist", 1)).values.tolist() == [1, 1, 1, 8]
    assert score_odin(index, OsfSpec("odin", 1)).values[3] == 1.0
    assert score_ldof(index, OsfSpec("ldof", 2)).values[3] == 8.5


@pytest.mark.parametrize("family", sorted(oracles.FAMILIES))
def test_matches_naive_oracle(family):
    rng = np.random.default_rng(hash(family) % 2**32)
    for _ in range(15):
        n = int(rng.integers(4, 31))
        X = rng.normal(size=(n, int(rng.integers(1, 4))))
        k = int(rng.integers(2 if family == "ldof" else 1, min(5, n - 1) + 1))
        got = scores(X, family, k)
        want = oracles.FAMILIES[family](X.tolist(), k)
        if family in ("knn_dist", "knn_weight", "odin"):
            assert got.tolist() == want
        else:
            np.testing.assert_allclose(got, want, rtol=1e-9, atol=1e-9)


def test_subspace_selects_columns():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(20, 2))
    a = scores(X, "lof", 3, subspace=(0,))
    b = scores(X[:, :1], "lof", 3)
    assert np.array_equal(a, b)
    full = scores(X, "ldof", 3, subspace=(0, 1))
    assert np.array_equal(full, scores(X, "ldof", 3))
    with pytest.raises(OsfError):
        scores(X, "lof", 3, subspace=(0, 5))


@pytest.mark.parametrize("family", sorted(FAMILIES))
def test_isolated_point_is_argmax(family):
    rng = np.random.default_rng(0)
    X = np.vstack([rng.normal(0, 0.1, size=(25, 2)), [[8.0, 8.0]]])
    s = scores(X, family, 3)
    # ODIN scores are coarse; cluster rows nobody picks share the top value
    assert s[25] == s.max()
    if family != "odin":
        assert np.sum(s == s.max()) == 1


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10**6), st.floats(-100, 100), st.sampled_from(sorted(FAMILIES)))
def test_shift_invariant_ranking(seed, shift, family):
    rng = np.random.default_rng(seed)
    # integer-valued data keeps distances exact under the shift
    X = rng.integers(-20, 20, size=(15, 2)).astype(float)
    shift = float(round(shift))
    a = scores(X, family, 3)
    b = scores(X + shift, family, 3)
    assert np.array_equal(np.argsort(a, kind="stable"), np.argsort(b, kind="stable"))


def test_default_grid_counts():
    assert len(default_osf_grid(1600, 32)) == 65
    assert sorted({s.k for s in default_osf_grid(25)}) == [1, 10, 20]
    small = default_osf_grid(3)
    assert len(small) == 5 and {s.k for s in small} == {1}
    assert "ldof" not in {s.family for s in small}


def test_subspaces():
    subs = sample_subspaces(32, 50, seed=4)
    assert len(subs) == 50 and all(16 <= len(s) <= 31 for s in subs)
    assert all(len(set(s)) == len(s) for s in subs)
    assert subs == sample_subspaces(32, 50, seed=4)
    assert all(len(s) == 1 for s in sample_subspaces(2, 10))
    grid = subspace_grid(400, 32, 50)
    assert len(grid) == 50 and {s.family for s in grid} == {"knn_dist", "lof"}


def test_build_representation_shape():
    rng = np.random.default_rng(5)
    X = rng.uniform(size=(30, 2))
    specs = [OsfSpec("knn_dist", 2), OsfSpec("lof", 3), OsfSpec("odin", 1)]
    rep = build_representation(X, specs)
    assert rep.d == 5 and rep.k_raw == 2 and rep.m == 3
    assert [c.kind for c in rep.columns] == ["raw", "raw", "osf", "osf", "osf"]
    assert np.array_equal(rep.matrix[:, :2], X)
    osf_part = rep.matrix[:, 2:]
    assert np.all(osf_part.min(axis=0) == 0) and np.all(osf_part.max(axis=0) == 1)
    with pytest.raises(OsfError):
        build_representation(X, [])
    with pytest.raises(ShapeError):
        build_representation(X, specs, ["only_one"])


def test_subspace_grid_representation_width():
    rng = np.random.default_rng(6)
    X = rng.uniform(size=(60, 32))
    rep = build_representation(X, subspace_grid(60, 32, 50, seed=1))
    assert rep.d == 82


def _raw_inductive(spec, train, new):
    return FAMILIES[spec.family].inductive(NeighborIndex(train), spec.k, new)


def test_external_self_match_convention():
    # a new point equal to a training row sees that row at distance 0, so
    # its k-NN score equals the row's in-sample score at k - 1
    for k in (2, 3):
        got = _raw_inductive(OsfSpec("knn_dist", k), LINE, LINE)
        assert got.tolist() == scores(LINE, "knn_dist", k - 1).tolist()


def test_external_centroid_lof_near_one():
    grid = np.array([[i, j] for i in range(7) for j in range(7)], dtype=float)
    got = _raw_inductive(OsfSpec("lof", 4), grid, np.array([[3.0, 3.0]]))
    assert got[0] == pytest.approx(1.0, abs=0.1)


def test_external_odin_inductive_rule():
    # 1.5 lies 0.5 from rows 1 and 2, closer than their 1-NN distance of 1,
    # so both would adopt it; 9.0 only beats row 3's 1-NN distance of 8
    got = _raw_inductive(OsfSpec("odin", 1), LINE, np.array([[1.5], [9.0], [30.0]]))
    assert got.tolist() == [1 / 3, 1 / 2, 1.0]
    # a tie with the current k-distance does not count
    assert _raw_inductive(OsfSpec("odin", 1), LINE, np.array([[-1.0]])).tolist() == [1.0]


def test_score_external_shapes_and_needed():
    rng = np.random.default_rng(8)
    X = rng.uniform(size=(25, 2))
    rep = build_representation(X, [OsfSpec("knn_dist", 3), OsfSpec("lof", 3)])
    empty = score_external(rep.columns, X, np.empty((0, 2)))
    assert empty.shape == (0, 4)
    new = rng.uniform(size=(5, 2))
    full = score_external(rep.columns, X, new)
    assert np.all((full[:, 2:] >= 0) & (full[:, 2:] <= 1))
    part = score_external(rep.columns, X, new, needed=[3])
    assert np.all(part[:, 2] == 0) and np.array_equal(part[:, 3], full[:, 3])
    with pytest.raises(ShapeError):
        score_external(rep.columns, X, np.zeros((2, 3)))


def test_score_external_only_evaluates_needed(monkeypatch):
    rng = np.random.default_rng(9)
    X = rng.uniform(size=(25, 2))
    rep = build_representation(X, default_osf_grid(25))
    seen = []
    real = osf._score_new_column

    def counting(index, spec, points):
        seen.append(spec.name)
        return real(index, spec, points)

    monkeypatch.setattr(osf, "_score_new_column", counting)
    score_external(rep.columns, X, X[:3], needed=[0, 4, 7])
    assert seen == [rep.columns[4].name, rep.columns[7].name]
