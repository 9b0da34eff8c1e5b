"""Independent oracles used by the test suite.

Each oracle reaches the quantity under test by a different route than the
library: dense Kronecker products instead of edge lists, exact quadratic
reconstruction from function values instead of conjugate formulas, long
plain (sub)gradient runs instead of the accelerated solver, and 1-d
golden-section searches instead of closed-form proximal maps.
"""

from __future__ import annotations

import numpy as np


def dense_incidence(graph, alpha: float) -> np.ndarray:
    """Materialise the scaled incidence matrix row by row."""
    Q = np.zeros((graph.edge_count, graph.vertex_count))
    for k, (i, j, w) in enumerate(graph.edges):
        Q[k, i] = alpha * w
        Q[k, j] = -alpha * w
    return Q


def kron_lift(Qd: np.ndarray, d: int) -> np.ndarray:
    """Dense I_d (x) Q."""
    return np.kron(np.eye(d), Qd)


def golden_section(fn, lo: float, hi: float, iters: int = 160) -> float:
    """Minimise a unimodal scalar function on [lo, hi]."""
    inv_phi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = float(lo), float(hi)
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


def prox_argmin_oracle(omega: np.ndarray, t: float, s) -> np.ndarray:
    """Numeric argmin of t*||v||_s + 0.5*||v - omega||^2.

    s = 1: independent per-coordinate golden-section searches.
    s = 2: golden-section over the radius; for a fixed radius the closest
           point on the sphere lies along omega.
    s = inf: golden-section over the max-magnitude bound tau; for fixed
           tau the inner minimisation clips each coordinate to [-tau, tau].
    """
    omega = np.asarray(omega, dtype=float)
    t = float(t)
    if s == 1:
        out = np.empty_like(omega)
        for k, w in enumerate(omega):
            span = abs(w) + t + 1.0
            out[k] = golden_section(lambda v: t * abs(v) + 0.5 * (v - w) ** 2, -span, span)
        return out
    if s == 2:
        nrm = np.linalg.norm(omega)
        if nrm == 0.0:
            return np.zeros_like(omega)
        r = golden_section(lambda r: t * r + 0.5 * (nrm - r) ** 2, 0.0, nrm)
        return (r / nrm) * omega
    # s = inf
    mx = np.abs(omega).max()
    if mx == 0.0:
        return np.zeros_like(omega)

    def clipped_cost(tau):
        excess = np.maximum(np.abs(omega) - tau, 0.0)
        return t * tau + 0.5 * float(excess @ excess)

    tau = golden_section(clipped_cost, 0.0, mx)
    return np.clip(omega, -tau, tau)


def quadratic_from_values(fn, dim: int):
    """Exact (H, b, c0) with fn(x) = 0.5 x'Hx + b'x + c0, recovered from
    function values only; exact for any quadratic because second
    differences of quadratics carry no truncation error."""
    e = np.eye(dim)
    c0 = fn(np.zeros(dim))
    fp = np.array([fn(e[i]) for i in range(dim)])
    fm = np.array([fn(-e[i]) for i in range(dim)])
    b = 0.5 * (fp - fm)
    H = np.zeros((dim, dim))
    for i in range(dim):
        H[i, i] = fp[i] + fm[i] - 2.0 * c0
    for i in range(dim):
        for j in range(i + 1, dim):
            H[i, j] = H[j, i] = fn(e[i] + e[j]) - fp[i] - fp[j] + c0
    return H, b, c0


def conjugate_sup_oracle(fn, dim: int, v: np.ndarray) -> float:
    """sup_x <v, x> - fn(x) for a strictly convex quadratic fn, via exact
    quadratic reconstruction and a dense solve."""
    H, b, c0 = quadratic_from_values(fn, dim)
    x = np.linalg.solve(H, v - b)
    return float(v @ x - (0.5 * x @ H @ x + b @ x + c0))


def clustering_subgradient_oracle(values: np.ndarray, graph, alpha: float, p: float,
                                  iters: int) -> np.ndarray:
    """Long-run subgradient descent on the full clustering objective.

    The loss is 2-strongly convex, so steps 1/(k+1) with iterate averaging
    weighted by k give the standard O(1/T) suboptimality decay.
    """
    n, d = values.shape
    head = np.array([e[0] for e in graph.edges], dtype=np.intp)
    tail = np.array([e[1] for e in graph.edges], dtype=np.intp)
    coef = alpha * np.array([e[2] for e in graph.edges], dtype=float)
    X = values.copy()
    average = np.zeros_like(X)
    weight_sum = 0.0
    for k in range(1, int(iters) + 1):
        diff = X[head] - X[tail]
        if p == 2:
            nrm = np.sqrt((diff * diff).sum(axis=1))
            scale = np.where(nrm > 0, 1.0 / np.maximum(nrm, 1e-300), 0.0)
            sub = diff * scale[:, None]
        elif p == 1:
            sub = np.sign(diff)
        else:  # p = inf: route the sign through the first max-magnitude entry
            sub = np.zeros_like(diff)
            if diff.size:
                arg = np.abs(diff).argmax(axis=1)
                rows = np.arange(diff.shape[0])
                sub[rows, arg] = np.sign(diff[rows, arg])
        grad = 2.0 * (X - values)
        scaled = coef[:, None] * sub
        for c in range(d):
            grad[:, c] += np.bincount(head, weights=scaled[:, c], minlength=n)
            grad[:, c] -= np.bincount(tail, weights=scaled[:, c], minlength=n)
        X = X - (1.0 / (k + 1.0)) * grad
        weight_sum += k
        average += (k / weight_sum) * (X - average)
    return average


def clustering_objective(values: np.ndarray, graph, alpha: float, p: float,
                         X: np.ndarray) -> float:
    total = float(((X - values) ** 2).sum())
    for i, j, w in graph.edges:
        diff = X[i] - X[j]
        if p == 2:
            total += alpha * w * float(np.linalg.norm(diff))
        elif p == 1:
            total += alpha * w * float(np.abs(diff).sum())
        else:
            total += alpha * w * float(np.abs(diff).max())
    return total
