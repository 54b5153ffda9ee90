"""Exact brute-force k-nearest-neighbour queries.

Distances are accumulated one dimension at a time, left to right, so results
are reproducible bit-for-bit and identical to a naive scalar loop. Ties on
distance are always broken by the lower reference row index.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ShapeError

METRICS = ("euclidean", "manhattan")

# rows per block when materialising query x reference distance blocks
_BLOCK_ELEMENTS = 4_000_000


def pairwise_distances(A: np.ndarray, B: np.ndarray, metric: str = "euclidean") -> np.ndarray:
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if metric not in METRICS:
        raise ValueError(f"unknown metric {metric!r}; choose from {METRICS}")
    if A.shape[1] != B.shape[1]:
        raise ShapeError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    out = np.empty((A.shape[0], B.shape[0]))
    step = max(1, _BLOCK_ELEMENTS // max(1, B.shape[0]))
    for start in range(0, A.shape[0], step):
        block = A[start:start + step]
        acc = np.zeros((block.shape[0], B.shape[0]))
        for j in range(A.shape[1]):
            diff = block[:, j, None] - B[None, :, j]
            if metric == "euclidean":
                acc += diff * diff
            else:
                acc += np.abs(diff)
        out[start:start + step] = np.sqrt(acc) if metric == "euclidean" else acc
    return out


@dataclass(frozen=True)
class NeighborList:
    indices: np.ndarray
    distances: np.ndarray


class NeighborIndex:
    """Immutable reference set answering exact kNN queries.

    The full distance matrix and the per-row neighbour ordering are computed
    lazily on first in-sample query and then reused for every k.
    """

    def __init__(self, reference: np.ndarray, metric: str = "euclidean"):
        reference = np.array(reference, dtype=float)
        if reference.ndim != 2 or reference.shape[0] < 1:
            raise ShapeError("reference matrix must be non-empty and 2-D")
        if metric not in METRICS:
            raise ValueError(f"unknown metric {metric!r}; choose from {METRICS}")
        self.reference = reference
        self.reference.setflags(write=False)
        self.metric = metric
        self._dist = None
        self._order = None

    @property
    def n(self) -> int:
        return self.reference.shape[0]

    @property
    def distances(self) -> np.ndarray:
        if self._dist is None:
            d = pairwise_distances(self.reference, self.reference, self.metric)
            d.setflags(write=False)
            self._dist = d
        return self._dist

    @property
    def member_order(self) -> np.ndarray:
        """n x (n-1) matrix: row i lists the other rows nearest first."""
        if self._order is None:
            d = np.array(self.distances)
            np.fill_diagonal(d, -np.inf)
            order = np.argsort(d, axis=1, kind="stable")[:, 1:]
            order.setflags(write=False)
            self._order = order
        return self._order

    def member_neighbors(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Self-excluded kNN of every row: (indices, distances), each n x k_eff."""
        if k < 1:
            raise ValueError("k must be >= 1")
        k_eff = min(k, self.n - 1)
        idx = np.ascontiguousarray(self.member_order[:, :k_eff])
        dist = np.take_along_axis(self.distances, idx, axis=1)
        return idx, dist

    def external_neighbors(self, points: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
        """kNN among reference rows for each of ``points`` (no exclusion)."""
        if k < 1:
            raise ValueError("k must be >= 1")
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[1] != self.reference.shape[1]:
            raise ShapeError(
                f"query points must have {self.reference.shape[1]} columns, got {points.shape}"
            )
        k_eff = min(k, self.n)
        if points.shape[0] == 0:
            return np.empty((0, k_eff), dtype=int), np.empty((0, k_eff))
        d = pairwise_distances(points, self.reference, self.metric)
        idx = np.argsort(d, axis=1, kind="stable")[:, :k_eff]
        return idx, np.take_along_axis(d, idx, axis=1)


def build_index(reference: np.ndarray, metric: str = "euclidean") -> NeighborIndex:
    return NeighborIndex(reference, metric)


def knn_of_member(index: NeighborIndex, row: int, k: int) -> NeighborList:
    if not 0 <= row < index.n:
        raise IndexError(f"row {row} outside reference of size {index.n}")
    if k < 1:
        raise ValueError("k must be >= 1")
    k_eff = min(k, index.n - 1)
    idx = np.array(index.member_order[row, :k_eff])
    return NeighborList(idx, index.distances[row, idx])


def knn_of_external(index: NeighborIndex, point, k: int) -> NeighborList:
    point = np.asarray(point, dtype=float).reshape(1, -1)
    idx, dist = index.external_neighbors(point, k)
    return NeighborList(idx[0], dist[0])
