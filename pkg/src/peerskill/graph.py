"""Interaction graphs, Laplacians and the total-variation smoothness measure.

Ratings attached to the nodes of a graph are plain 1-D float arrays; the
helpers here validate them on the way in.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_signal, check_weights

__all__ = [
    "InteractionGraph",
    "LaplacianMatrix",
    "build_laplacian",
    "total_variation",
    "pairwise_variation",
    "average_rating",
    "normalize_series",
]


@dataclass(frozen=True, eq=False)
class InteractionGraph:
    """Undirected weighted graph of comment exchanges within one prompt.

    ``weights[i, j]`` counts the comments participants ``i`` and ``j``
    gave each other. The array is validated and frozen at construction.
    """

    weights: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "weights", check_weights(self.weights))

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    @property
    def n_edges(self) -> int:
        return int(np.count_nonzero(np.triu(self.weights, 1)))

    @classmethod
    def empty(cls, n: int) -> "InteractionGraph":
        return cls(np.zeros((n, n), dtype=np.int64))

    @classmethod
    def from_edges(cls, n: int, edges, weight: int = 1) -> "InteractionGraph":
        """Build a graph from 0-based ``(i, j)`` pairs; repeated pairs accumulate."""
        w = np.zeros((n, n), dtype=np.int64)
        for i, j in edges:
            if i == j:
                raise ValueError(f"self-loop at node {i}")
            w[i, j] += weight
            w[j, i] += weight
        return cls(w)

    def __eq__(self, other):
        if not isinstance(other, InteractionGraph):
            return NotImplemented
        return np.array_equal(self.weights, other.weights)

    def __hash__(self):
        return hash(self.weights.tobytes())


@dataclass(frozen=True, eq=False)
class LaplacianMatrix:
    entries: np.ndarray
    degrees: np.ndarray

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    @property
    def d_max(self) -> float:
        return float(self.degrees.max()) if self.degrees.size else 0.0


def build_laplacian(graph: InteractionGraph) -> LaplacianMatrix:
    """Combinatorial Laplacian ``diag(W 1) - W`` of ``graph``."""
    w = graph.weights.astype(float)
    degrees = w.sum(axis=1)
    entries = np.diag(degrees) - w
    entries.setflags(write=False)
    degrees.setflags(write=False)
    return LaplacianMatrix(entries, degrees)


def total_variation(laplacian: LaplacianMatrix, signal) -> float:
    """Quadratic form ``r^T L r``: weighted squared rating gaps across edges."""
    r = check_signal(signal)
    if r.shape[0] != laplacian.n:
        raise ValueError(
            f"signal has length {r.shape[0]} but the Laplacian is {laplacian.n}x{laplacian.n}"
        )
    # L annihilates constants; centering keeps roundoff relative to the variation itself
    rc = r - r.mean() if r.size else r
    return max(float(rc @ laplacian.entries @ rc), 0.0)


def pairwise_variation(graph: InteractionGraph, signal) -> float:
    """Edge-sum form of the total variation, ``sum_{i>j} W_ij (r_i - r_j)^2``."""
    r = check_signal(signal, graph.n)
    i, j = np.tril_indices(graph.n, -1)
    return float(np.sum(graph.weights[i, j] * (r[i] - r[j]) ** 2))


def average_rating(signal) -> float:
    r = check_signal(signal)
    if r.size == 0:
        raise ValueError("cannot average an empty signal")
    return float(r.mean())


def normalize_series(tv_values) -> np.ndarray:
    """Scale a per-prompt series to unit Euclidean norm.

    Raises
    ------
    ValueError
        If the series is empty or identically zero.
    """
    v = np.asarray(tv_values, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("expected a nonempty 1-D series")
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise ValueError("cannot normalize an all-zero series")
    return v / norm
