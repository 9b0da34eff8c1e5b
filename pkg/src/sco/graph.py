"""Datasets and the k-nearest-neighbour variable graph built from them.

Every instance becomes a vertex; an undirected edge joins two instances
when either is among the k Euclidean-nearest neighbours of the other.
Edge weights are inversely proportional to the distance, capped so that
coincident points get a finite weight.

All functions here are pure and operate on immutable inputs, so they are
safe to call concurrently.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DataValidationError, ParameterError

DEFAULT_WEIGHT_CAP = 1e6


@dataclass(frozen=True)
class Dataset:
    """An n-by-d matrix of instances plus optional regression targets.

    Rows are instances, columns are features. ``targets`` (length n) is
    only needed for the regression task.
    """

    values: np.ndarray
    targets: np.ndarray | None = None

    def __post_init__(self):
        values = np.atleast_2d(np.asarray(self.values, dtype=float))
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] < 1:
            raise DataValidationError(f"dataset must be n x d with n,d >= 1, got shape {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DataValidationError("dataset contains non-finite entries")
        object.__setattr__(self, "values", values)
        if self.targets is not None:
            targets = np.asarray(self.targets, dtype=float).ravel()
            if targets.shape[0] != values.shape[0]:
                raise DataValidationError(
                    f"targets length {targets.shape[0]} does not match row count {values.shape[0]}"
                )
            if not np.all(np.isfinite(targets)):
                raise DataValidationError("targets contain non-finite entries")
            object.__setattr__(self, "targets", targets)

    @property
    def row_count(self) -> int:
        return self.values.shape[0]

    @property
    def feature_count(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class VariableGraph:
    """Weighted undirected graph over the per-instance variables.

    Edges are (i, j, w) with i < j and w > 0, listed in lexicographic
    order of (i, j) and free of duplicates.
    """

    vertex_count: int
    edges: tuple = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "edges", tuple((int(i), int(j), float(w)) for i, j, w in self.edges))

    @property
    def edge_count(self) -> int:
        return len(self.edges)


def pairwise_distances(values: np.ndarray) -> np.ndarray:
    """Dense matrix of Euclidean distances between rows."""
    gram = values @ values.T
    sq = np.diag(gram)
    d2 = sq[:, None] + sq[None, :] - 2.0 * gram
    np.maximum(d2, 0.0, out=d2)
    return np.sqrt(d2)


def build_knn_graph(data: Dataset, k: int, weight_cap: float = DEFAULT_WEIGHT_CAP) -> VariableGraph:
    """Build the variable graph by symmetric k-nearest-neighbour linking.

    An edge (i, j) exists iff j is among the k nearest neighbours of i or
    i is among the k nearest of j. Distance ties are broken by the smaller
    index, which makes the output deterministic. The weight is
    min(1/dist, weight_cap); coincident points hit the cap.

    Parameters
    ----------
    data : Dataset
        At least two instances.
    k : int
        Number of neighbours per vertex, 1 <= k <= n - 1.
    weight_cap : float
        Upper bound for the inverse-distance weights (> 0).

    Returns
    -------
    VariableGraph
        Edges sorted lexicographically by (i, j).
    """
    n = data.row_count
    if n < 2:
        raise ParameterError("need at least two instances to build a graph")
    k = int(k)
    if not 1 <= k <= n - 1:
        raise ParameterError(f"k must satisfy 1 <= k <= n-1 = {n - 1}, got {k}")
    if not (np.isfinite(weight_cap) and weight_cap > 0):
        raise ParameterError(f"weight_cap must be a positive finite real, got {weight_cap}")

    dist = pairwise_distances(data.values)
    if not np.all(np.isfinite(dist)):
        raise DataValidationError("data magnitudes overflow the distance computation")
    order_keys = np.arange(n)
    pairs = set()
    for i in range(n):
        # sort by (distance, index); drop self before keeping k entries
        order = np.lexsort((order_keys, dist[i]))
        picked = 0
        for j in order:
            if j == i:
                continue
            pairs.add((min(i, j), max(i, j)))
            picked += 1
            if picked == k:
                break

    edges = []
    for i, j in sorted(pairs):
        d = dist[i, j]
        w = weight_cap if d == 0.0 else min(1.0 / d, weight_cap)
        edges.append((i, j, w))
    return VariableGraph(vertex_count=n, edges=tuple(edges))


def validate_graph(graph: VariableGraph) -> list[str]:
    """Check the graph invariants; return a list of violations (empty = ok).

    Each message names the offending edge index. Diagnostic only, never
    raises.
    """
    violations = []
    n = graph.vertex_count
    if n < 1:
        violations.append("graph: vertex_count must be >= 1")
    seen = set()
    for idx, (i, j, w) in enumerate(graph.edges):
        if not (0 <= i < j < n):
            violations.append(f"edge {idx}: endpoints ({i}, {j}) violate 0 <= i < j < {n}")
        if not (np.isfinite(w) and w > 0):
            violations.append(f"edge {idx}: weight {w} is not a positive finite real")
        if (i, j) in seen:
            violations.append(f"edge {idx}: duplicate pair ({i}, {j})")
        seen.add((i, j))
    return violations
