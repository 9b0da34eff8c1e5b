"""Closed-form norm proximal maps and unit-ball projections.

Everything here is stateless and elementwise-deterministic.
"""

from __future__ import annotations

import numpy as np

from .errors import ParameterError
from .norms import as_norm


def project_l1_ball(v: np.ndarray, radius: float = 1.0) -> np.ndarray:
    """Euclidean projection onto the l1 ball of the given radius.

    Exact sort-based algorithm, O(d log d); ties are handled by the stable
    sort, so the result is deterministic.
    """
    if radius <= 0:
        raise ParameterError(f"radius must be positive, got {radius}")
    v = np.asarray(v, dtype=float)
    a = np.abs(v)
    if a.sum() <= radius:
        return v.copy()
    u = np.sort(a)[::-1]
    css = np.cumsum(u)
    ks = np.arange(1, v.size + 1)
    mask = u > (css - radius) / ks
    rho = np.nonzero(mask)[0][-1]
    theta = (css[rho] - radius) / (rho + 1.0)
    return np.sign(v) * np.maximum(a - theta, 0.0)


def project_ball(v: np.ndarray, q) -> np.ndarray:
    """Euclidean projection of v onto the unit q-norm ball, q in {1, 2, inf}."""
    q = as_norm(q)
    v = np.asarray(v, dtype=float)
    if q == np.inf:
        return np.clip(v, -1.0, 1.0)
    if q == 2.0:
        nrm = np.linalg.norm(v)
        return v.copy() if nrm <= 1.0 else v / nrm
    return project_l1_ball(v, 1.0)


def project_rows(lam: np.ndarray, q) -> np.ndarray:
    """Project every row of an m-by-d matrix onto the unit q-norm ball."""
    q = as_norm(q)
    lam = np.atleast_2d(np.asarray(lam, dtype=float))
    if lam.shape[0] == 0:
        return lam.copy()
    if q == np.inf:
        return np.clip(lam, -1.0, 1.0)
    if q == 2.0:
        nrm = np.sqrt((lam * lam).sum(axis=1))
        scale = np.where(nrm > 1.0, 1.0 / np.maximum(nrm, 1e-300), 1.0)
        return lam * scale[:, None]
    out = lam.copy()
    over = np.abs(lam).sum(axis=1) > 1.0
    for k in np.nonzero(over)[0]:
        out[k] = project_l1_ball(lam[k], 1.0)
    return out


def prox_norm(omega: np.ndarray, t: float, s) -> np.ndarray:
    """Proximal map of t * ||.||_s at omega: argmin_v t*||v||_s + 0.5*||v - omega||^2.

    s = 1 soft-thresholds each entry at t; s = 2 shrinks the whole vector
    by max(0, 1 - t/||omega||); s = inf subtracts the projection onto the
    l1 ball of radius t (Moreau decomposition against the dual norm).
    """
    s = as_norm(s)
    t = float(t)
    if not (np.isfinite(t) and t > 0):
        raise ParameterError(f"prox threshold must be positive, got {t}")
    omega = np.asarray(omega, dtype=float)
    if s == 1.0:
        return np.sign(omega) * np.maximum(np.abs(omega) - t, 0.0)
    if s == 2.0:
        nrm = np.linalg.norm(omega)
        if nrm <= t:
            return np.zeros_like(omega)
        return (1.0 - t / nrm) * omega
    if np.abs(omega).sum() <= t:
        return np.zeros_like(omega)
    return omega - t * project_l1_ball(omega / t, 1.0)
