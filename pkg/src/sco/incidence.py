"""Scaled edge-incidence operator and its structure-exploiting linear maps.

Row k of the operator carries +alpha*w_ij at column i and -alpha*w_ij at
column j for edge (i, j). The operator is kept as an edge list; the
Kronecker-lifted maps the solver needs are realised as matrix products
with the operator and its transpose, never as dense (m*d)-by-(n*d)
matrices.

Vectorisation convention: matrices are stacked column by column
(``stack_columns``), and all adjoint identities in this package are pinned
to that convention.

The operator is immutable after construction and every map here is pure,
so concurrent use is safe.
"""

from __future__ import annotations

import numpy as np

from .errors import DimensionError, ParameterError
from .graph import VariableGraph


def stack_columns(M: np.ndarray) -> np.ndarray:
    """Column-stacking vectorisation of a matrix."""
    return np.asarray(M, dtype=float).reshape(-1, order="F")


def unstack_columns(v: np.ndarray, rows: int, cols: int) -> np.ndarray:
    """Inverse of :func:`stack_columns`."""
    v = np.asarray(v, dtype=float)
    if v.size != rows * cols:
        raise DimensionError(f"cannot reshape length-{v.size} vector to {rows} x {cols}")
    return v.reshape((rows, cols), order="F")


class EdgeIncidence:
    """Edge-difference operator with entries +/- alpha * w per edge row."""

    def __init__(self, graph: VariableGraph, alpha: float):
        alpha = float(alpha)
        if not (np.isfinite(alpha) and alpha >= 0):
            raise ParameterError(f"alpha must be a nonnegative finite real, got {alpha}")
        self.alpha = alpha
        self.col_count = graph.vertex_count
        self.head = np.array([e[0] for e in graph.edges], dtype=np.intp)
        self.tail = np.array([e[1] for e in graph.edges], dtype=np.intp)
        self.coef = alpha * np.array([e[2] for e in graph.edges], dtype=float)
        self.row_count = len(graph.edges)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Map an n-by-d matrix to the m-by-d matrix of scaled row differences.

        Row k of the result is alpha * w_ij * (X_i - X_j); stacking it
        column-wise equals the Kronecker-lifted operator acting on the
        stacked input.
        """
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[0] != self.col_count:
            raise DimensionError(f"expected {self.col_count} rows, got {X.shape[0]}")
        if self.row_count == 0:
            return np.zeros((0, X.shape[1]))
        return self.coef[:, None] * (X[self.head] - X[self.tail])

    def apply_t(self, lam: np.ndarray) -> np.ndarray:
        """Transpose map: m-by-d dual rows back to an n-by-d matrix.

        Accumulation runs per column with a fixed summation order, so the
        result does not depend on any execution schedule.
        """
        lam = np.atleast_2d(np.asarray(lam, dtype=float))
        if lam.shape[0] != self.row_count:
            raise DimensionError(f"expected {self.row_count} rows, got {lam.shape[0]}")
        d = lam.shape[1]
        out = np.zeros((self.col_count, d))
        if self.row_count == 0:
            return out
        for c in range(d):
            scaled = self.coef * lam[:, c]
            out[:, c] = np.bincount(self.head, weights=scaled, minlength=self.col_count)
            out[:, c] -= np.bincount(self.tail, weights=scaled, minlength=self.col_count)
        return out

    def apply_t_stacked(self, lam: np.ndarray) -> np.ndarray:
        """Column-stacked transpose map, as a length n*d vector."""
        return stack_columns(self.apply_t(lam))


def operator_norm_estimate(Q: EdgeIncidence, iterations: int = 50, safety: float = 1.01,
                           rng: np.random.Generator | None = None) -> float:
    """Upper estimate of the largest singular value via power iteration.

    Runs ``iterations`` rounds on the normal operator and inflates the
    final Rayleigh estimate by ``safety``; the inflation keeps the result
    usable as a Lipschitz constant. Deterministic for a fixed generator
    (a fixed default seed is used when none is supplied).
    """
    if Q.row_count < 1:
        raise ParameterError("operator norm estimate needs at least one edge")
    if rng is None:
        rng = np.random.default_rng(0)
    v = rng.standard_normal(Q.col_count)
    nv = np.linalg.norm(v)
    if nv == 0.0:
        v = np.ones(Q.col_count)
        nv = np.linalg.norm(v)
    v /= nv
    sigma = 0.0
    for _ in range(int(iterations)):
        w = Q.coef * (v[Q.head] - v[Q.tail])
        z = np.zeros(Q.col_count)
        np.add.at(z, Q.head, Q.coef * w)
        np.add.at(z, Q.tail, -Q.coef * w)
        nz = np.linalg.norm(z)
        if nz == 0.0:
            return 0.0
        sigma = np.sqrt(nz)  # ||Q^T Q v|| ~ sigma^2 for normalized v
        v = z / nz
    w = Q.coef * (v[Q.head] - v[Q.tail])
    sigma = float(np.linalg.norm(w))
    return sigma * float(safety)
