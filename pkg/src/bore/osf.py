"""Unsupervised outlier scoring functions and the outlier representation.

Every family returns one score per row oriented so that larger means more
outlying. Families are registered in ``FAMILIES``; adding a new one means
writing an in-sample scorer, an inductive scorer and calling
:func:`register_family`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .exceptions import OsfError, ShapeError
from .neighbors import NeighborIndex, pairwise_distances

EPS = 1e-10
DEFAULT_K_VALUES = (1, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100)


@dataclass(frozen=True)
class OsfSpec:
    family: str
    k: int
    metric: str = "euclidean"
    subspace: tuple[int, ...] | None = None

    def __post_init__(self):
        if self.subspace is not None:
            object.__setattr__(self, "subspace", tuple(int(c) for c in self.subspace))

    @property
    def name(self) -> str:
        parts = [f"{self.family}_k{self.k}"]
        if self.metric != "euclidean":
            parts.append(self.metric)
        if self.subspace is not None:
            parts.append("s" + "-".join(map(str, self.subspace)))
        return "_".join(parts)

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "k": self.k,
            "metric": self.metric,
            "subspace": None if self.subspace is None else list(self.subspace),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OsfSpec":
        sub = d.get("subspace")
        return cls(d["family"], int(d["k"]), d.get("metric", "euclidean"),
                   None if sub is None else tuple(sub))


@dataclass(frozen=True)
class OsfScores:
    values: np.ndarray
    spec: OsfSpec


@dataclass(frozen=True)
class Column:
    """Metadata for one representation column.

    ``lo``/``hi`` are the training-set extremes of the unnormalised OSF
    output; inductive scores are rescaled with them.
    """

    name: str
    kind: str
    spec: OsfSpec | None = None
    cost: float | None = 1.0
    lo: float = 0.0
    hi: float = 1.0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "spec": None if self.spec is None else self.spec.to_dict(),
            "cost": self.cost,
            "lo": self.lo,
            "hi": self.hi,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Column":
        spec = None if d.get("spec") is None else OsfSpec.from_dict(d["spec"])
        return cls(d["name"], d["kind"], spec, d.get("cost"), d["lo"], d["hi"])


@dataclass(frozen=True)
class OutlierRepresentation:
    matrix: np.ndarray
    columns: list[Column] = field(default_factory=list)

    @property
    def d(self) -> int:
        return self.matrix.shape[1]

    @property
    def raw_indices(self) -> list[int]:
        return [j for j, c in enumerate(self.columns) if c.kind == "raw"]

    @property
    def osf_indices(self) -> list[int]:
        return [j for j, c in enumerate(self.columns) if c.kind == "osf"]

    @property
    def k_raw(self) -> int:
        return len(self.raw_indices)

    @property
    def m(self) -> int:
        return len(self.osf_indices)

    def with_columns(self, columns: list[Column]) -> "OutlierRepresentation":
        return replace(self, columns=list(columns))


# -- family registry ---------------------------------------------------------

@dataclass(frozen=True)
class Family:
    name: str
    in_sample: Callable[[NeighborIndex, int], np.ndarray]
    inductive: Callable[[NeighborIndex, int, np.ndarray], np.ndarray]
    min_k: int = 1
    needs_n_above_k: bool = False


FAMILIES: dict[str, Family] = {}


def register_family(family: Family) -> Family:
    FAMILIES[family.name] = family
    return family


def _inverse_mean(k: int, sums: np.ndarray) -> np.ndarray:
    out = np.full(sums.shape, 1.0 / EPS)
    nz = sums > 0
    out[nz] = k / sums[nz]
    return out


def _k_distance(index: NeighborIndex, k: int) -> np.ndarray:
    _, dist = index.member_neighbors(k)
    return dist[:, -1]


def _lrd(kdist, idx, dist):
    reach = np.maximum(kdist[idx], dist)
    return _inverse_mean(idx.shape[1], reach.sum(axis=1))


def _knn_dist(index, k):
    _, dist = index.member_neighbors(k)
    return dist[:, -1].copy()


def _knn_dist_new(index, k, points):
    _, dist = index.external_neighbors(points, k)
    return dist[:, -1].copy()


def _knn_weight(index, k):
    _, dist = index.member_neighbors(k)
    return np.cumsum(dist, axis=1)[:, -1]


def _knn_weight_new(index, k, points):
    _, dist = index.external_neighbors(points, k)
    return np.cumsum(dist, axis=1)[:, -1]


def _odin(index, k):
    idx, _ = index.member_neighbors(k)
    indegree = np.bincount(idx.ravel(), minlength=index.n)
    return 1.0 / (1.0 + indegree)


def _odin_new(index, k, points):
    # a training row would adopt the new point as neighbour if it is strictly
    # closer than that row's current k-th neighbour
    kdist = _k_distance(index, k)
    d = pairwise_distances(points, index.reference, index.metric)
    indegree = (d < kdist[None, :]).sum(axis=1)
    return 1.0 / (1.0 + indegree)


def _lof(index, k):
    idx, dist = index.member_neighbors(k)
    lrd = _lrd(dist[:, -1], idx, dist)
    return lrd[idx].mean(axis=1) / lrd


def _lof_new(index, k, points):
    idx, dist = index.member_neighbors(k)
    kdist = dist[:, -1]
    lrd = _lrd(kdist, idx, dist)
    qidx, qdist = index.external_neighbors(points, k)
    lrd_q = _lrd(kdist, qidx, qdist)
    return lrd[qidx].mean(axis=1) / lrd_q


def _slof(index, k):
    idx, dist = index.member_neighbors(k)
    dens = _inverse_mean(idx.shape[1], dist.sum(axis=1))
    return dens[idx].mean(axis=1) / dens


def _slof_new(index, k, points):
    idx, dist = index.member_neighbors(k)
    dens = _inverse_mean(idx.shape[1], dist.sum(axis=1))
    qidx, qdist = index.external_neighbors(points, k)
    dens_q = _inverse_mean(qidx.shape[1], qdist.sum(axis=1))
    return dens[qidx].mean(axis=1) / dens_q


def _ldof_from(index, idx, dist):
    k = idx.shape[1]
    inner = np.empty(len(idx))
    D = index.distances
    step = max(1, 2_000_000 // (k * k))
    for s in range(0, len(idx), step):
        blk = idx[s:s + step]
        inner[s:s + step] = D[blk[:, :, None], blk[:, None, :]].sum(axis=(1, 2))
    inner /= k * (k - 1)
    inner[inner <= 0] = EPS
    return dist.mean(axis=1) / inner


def _ldof(index, k):
    idx, dist = index.member_neighbors(k)
    return _ldof_from(index, idx, dist)


def _ldof_new(index, k, points):
    idx, dist = index.external_neighbors(points, k)
    return _ldof_from(index, idx, dist)


register_family(Family("knn_dist", _knn_dist, _knn_dist_new))
register_family(Family("knn_weight", _knn_weight, _knn_weight_new))
register_family(Family("odin", _odin, _odin_new))
register_family(Family("lof", _lof, _lof_new, needs_n_above_k=True))
register_family(Family("simplified_lof", _slof, _slof_new, needs_n_above_k=True))
register_family(Family("ldof", _ldof, _ldof_new, min_k=2, needs_n_above_k=True))


def _family(spec: OsfSpec) -> Family:
    try:
        return FAMILIES[spec.family]
    except KeyError:
        raise OsfError(f"unknown OSF family {spec.family!r}") from None


def _check(index: NeighborIndex, spec: OsfSpec) -> Family:
    fam = _family(spec)
    if spec.k < fam.min_k:
        raise OsfError(f"{spec.name}: {spec.family} needs k >= {fam.min_k}")
    if index.n < 2:
        raise OsfError(f"{spec.name}: at least 2 rows are required")
    if fam.needs_n_above_k and index.n <= spec.k:
        raise OsfError(f"{spec.name}: needs more than k={spec.k} rows, got {index.n}")
    return fam


def _score(index: NeighborIndex, spec: OsfSpec, family: str) -> OsfScores:
    if spec.family != family:
        raise OsfError(f"spec family {spec.family!r} passed to the {family} scorer")
    fam = _check(index, spec)
    return OsfScores(fam.in_sample(index, spec.k), spec)


def score_knn_dist(index: NeighborIndex, spec: OsfSpec) -> OsfScores:
    return _score(index, spec, "knn_dist")


def score_knn_weight(index: NeighborIndex, spec: OsfSpec) -> OsfScores:
    return _score(index, spec, "knn_weight")


def score_odin(index: NeighborIndex, spec: OsfSpec) -> OsfScores:
    """1 / (1 + in-degree in the kNN graph)."""
    return _score(index, spec, "odin")


def score_lof(index: NeighborIndex, spec: OsfSpec) -> OsfScores:
    return _score(index, spec, "lof")


def score_simplified_lof(index: NeighborIndex, spec: OsfSpec) -> OsfScores:
    return _score(index, spec, "simplified_lof")


def score_ldof(index: NeighborIndex, spec: OsfSpec) -> OsfScores:
    return _score(index, spec, "ldof")


def _restrict(X: np.ndarray, spec: OsfSpec) -> np.ndarray:
    if spec.subspace is None:
        return X
    sub = list(spec.subspace)
    if not sub or len(set(sub)) != len(sub) or min(sub) < 0 or max(sub) >= X.shape[1]:
        raise OsfError(f"{spec.name}: invalid subspace for {X.shape[1]} columns")
    return X[:, sub]


class _IndexCache:
    def __init__(self, X: np.ndarray):
        self.X = X
        self._indices: dict = {}

    def get(self, spec: OsfSpec) -> NeighborIndex:
        key = (spec.subspace, spec.metric)
        if key not in self._indices:
            self._indices[key] = NeighborIndex(_restrict(self.X, spec), spec.metric)
        return self._indices[key]


def compute_osf(X: np.ndarray, spec: OsfSpec, _cache: _IndexCache | None = None) -> OsfScores:
    X = np.asarray(X, dtype=float)
    fam = _family(spec)
    index = _cache.get(spec) if _cache is not None else NeighborIndex(_restrict(X, spec), spec.metric)
    _check(index, spec)
    return OsfScores(fam.in_sample(index, spec.k), spec)


def default_osf_grid(n: int, k_raw: int | None = None) -> list[OsfSpec]:
    """All registered built-in families crossed with k in {1, 10, ..., 100}.

    k is capped at n - 2; families that need k >= 2 drop k = 1.
    """
    specs = []
    for family in ("knn_dist", "knn_weight", "odin", "lof", "simplified_lof", "ldof"):
        fam = FAMILIES[family]
        for k in DEFAULT_K_VALUES:
            if k <= n - 2 and k >= fam.min_k:
                specs.append(OsfSpec(family, k))
    return specs


def sample_subspaces(k_raw: int, count: int, seed: int = 0) -> list[list[int]]:
    if k_raw < 2:
        raise OsfError("feature bagging needs at least 2 raw columns")
    if count < 1:
        raise OsfError("count must be >= 1")
    rng = np.random.default_rng(seed)
    lo, hi = math.ceil(k_raw / 2), k_raw - 1
    out = []
    for _ in range(count):
        size = int(rng.integers(lo, hi + 1))
        out.append(sorted(int(c) for c in rng.choice(k_raw, size=size, replace=False)))
    return out


def subspace_grid(n: int, k_raw: int, count: int, seed: int = 0, k: int = 10) -> list[OsfSpec]:
    """Feature-bagging grid: ``count`` random subspaces alternating kNN and LOF."""
    k = max(1, min(k, n - 2))
    families = ("knn_dist", "lof")
    return [
        OsfSpec(families[i % 2], k, subspace=tuple(sub))
        for i, sub in enumerate(sample_subspaces(k_raw, count, seed))
    ]


def _unique_names(names: Sequence[str]) -> list[str]:
    seen: dict[str, int] = {}
    out = []
    for name in names:
        seen[name] = seen.get(name, 0) + 1
        out.append(name if seen[name] == 1 else f"{name}#{seen[name]}")
    return out


def _rescale(values, lo, hi):
    if hi <= lo:
        return np.zeros_like(values, dtype=float)
    return np.clip((values - lo) / (hi - lo), 0.0, 1.0)


def build_representation(
    X_scaled: np.ndarray,
    specs: Sequence[OsfSpec],
    feature_names: Sequence[str] | None = None,
) -> OutlierRepresentation:
    """Concatenate the raw columns with one min-max normalised column per spec."""
    X_scaled = np.asarray(X_scaled, dtype=float)
    if not specs:
        raise OsfError("at least one OSF spec is required")
    n, k_raw = X_scaled.shape
    if feature_names is None:
        feature_names = [f"x{j}" for j in range(k_raw)]
    if len(feature_names) != k_raw:
        raise ShapeError("one feature name per raw column is required")

    cache = _IndexCache(X_scaled)
    blocks = [X_scaled]
    columns = [Column(name, "raw", None, 1.0) for name in feature_names]
    for spec in specs:
        try:
            values = compute_osf(X_scaled, spec, cache).values
        except OsfError:
            raise
        except Exception as exc:
            raise OsfError(f"{spec.name}: {exc}") from exc
        lo, hi = float(values.min()), float(values.max())
        blocks.append(_rescale(values, lo, hi)[:, None])
        columns.append(Column(spec.name, "osf", spec, None, lo, hi))
    names = _unique_names([c.name for c in columns])
    columns = [replace(c, name=nm) for c, nm in zip(columns, names)]
    return OutlierRepresentation(np.hstack(blocks), columns)


def _score_new_column(index: NeighborIndex, spec: OsfSpec, points: np.ndarray) -> np.ndarray:
    fam = _check(index, spec)
    return fam.inductive(index, spec.k, points)


def score_external(
    columns: Sequence[Column],
    X_train_scaled: np.ndarray,
    X_new_scaled: np.ndarray,
    needed: Sequence[int] | None = None,
) -> np.ndarray:
    """Representation of unseen rows, scored against the training rows.

    Raw columns pass through. OSF columns use neighbourhoods drawn from the
    training rows only and the column's training min/max, clamped to [0, 1].
    A new row that duplicates a training row therefore finds that row at
    distance 0 among its k neighbours. When ``needed`` is given, OSF columns
    outside it are left at 0 and never evaluated.
    """
    X_train_scaled = np.asarray(X_train_scaled, dtype=float)
    X_new_scaled = np.asarray(X_new_scaled, dtype=float)
    if X_new_scaled.size == 0:
        X_new_scaled = X_new_scaled.reshape(0, X_train_scaled.shape[1])
    raw = [j for j, c in enumerate(columns) if c.kind == "raw"]
    if X_new_scaled.ndim != 2 or X_new_scaled.shape[1] != X_train_scaled.shape[1] \
            or len(raw) != X_train_scaled.shape[1]:
        raise ShapeError(
            f"new data must have {X_train_scaled.shape[1]} raw columns, got {X_new_scaled.shape}"
        )
    out = np.zeros((X_new_scaled.shape[0], len(columns)))
    out[:, raw] = X_new_scaled
    if X_new_scaled.shape[0] == 0:
        return out
    wanted = None if needed is None else set(int(j) for j in needed)
    cache = _IndexCache(X_train_scaled)
    for j, col in enumerate(columns):
        if col.kind != "osf" or (wanted is not None and j not in wanted):
            continue
        spec = col.spec
        index = cache.get(spec)
        try:
            values = _score_new_column(index, spec, _restrict(X_new_scaled, spec))
        except OsfError:
            raise
        except Exception as exc:
            raise OsfError(f"{spec.name}: cannot score new points: {exc}") from exc
        out[:, j] = _rescale(values, col.lo, col.hi)
    return out
