"""Computable accuracy bounds relating a kept model to the true model on
perturbed data, plus the norm bounds on the regularised dual image that
feed them.

Clustering task:

* dual-image bound: the s-norm of the stacked transposed-incidence image
  of the perturbed-data dual optimum is at most ||vec(A + D)||^2 / beta;
* model bound: the data-weighted inner product of the model difference is
  at most <vec(A), vec(D)> + c/2 + ||vec(D)|| * ||vec(A + D)||^2 / (2 beta).
  The left side is an inner product, not a norm, and may be negative.

Regression task (diagonal quadratic loss):

* dual-image bound: the s-norm is at most the omega-inverse quadratic
  form of the target image divided by 4 beta. The target image can be
  taken from the original or the perturbed data; both variants are
  computed and the larger is reported as the operative right-hand side.
* model bound: the difference of omega-weighted model energies is at most
  the two squared quadratic forms weighted by spectral norms of the
  sandwiched cross operator, plus 4c.

Bare operator norms are read as spectral norms and estimated by power
iteration with a small safety inflation, which preserves the inequality
direction. All functions are pure and thread-safe.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .incidence import EdgeIncidence, stack_columns
from .norms import as_norm, vec_norm
from .problems import (RidgeOperators, perturbation_cross_adjoint,
                       perturbation_cross_apply)

RELATIVE_SLACK = 1e-9


@dataclass
class BoundReport:
    """One evaluated inequality: left side, right side, verdict, inputs."""

    name: str
    lhs: float
    rhs: float
    satisfied: bool
    inputs: dict

    @staticmethod
    def build(name: str, lhs: float, rhs: float, inputs: dict) -> "BoundReport":
        ok = lhs <= rhs + RELATIVE_SLACK * abs(rhs)
        return BoundReport(name=name, lhs=float(lhs), rhs=float(rhs),
                           satisfied=bool(ok), inputs=inputs)

    def as_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs,
                "satisfied": self.satisfied, "inputs": self.inputs}


def _require_positive(name: str, value: float) -> float:
    value = float(value)
    if not (np.isfinite(value) and value > 0):
        raise ParameterError(f"{name} must be positive, got {value}")
    return value


def dual_image_norm(Q: EdgeIncidence, lam: np.ndarray, s) -> float:
    """s-norm of the stacked transposed-incidence image of the dual rows."""
    return vec_norm(Q.apply_t_stacked(lam), as_norm(s))


def clustering_dual_image_bound(new_values: np.ndarray, beta: float) -> float:
    """Clustering dual-image bound: squared stacked norm of the evolved
    data over beta."""
    beta = _require_positive("beta", beta)
    v = stack_columns(np.asarray(new_values, dtype=float))
    return float(v @ v) / beta


def clustering_dual_image_check(Q: EdgeIncidence, lam_tilde: np.ndarray,
                                new_values: np.ndarray, beta: float, s) -> BoundReport:
    """Dual-image norm bound for the clustering task."""
    lhs = dual_image_norm(Q, lam_tilde, s)
    rhs = clustering_dual_image_bound(new_values, beta)
    inputs = {"beta": float(beta), "s": _norm_tag(s),
              "new_values_fro": float(np.linalg.norm(new_values))}
    return BoundReport.build("clustering-dual-image", lhs, rhs, inputs)


def clustering_model_check(values: np.ndarray, delta: np.ndarray, beta: float, c: float,
                           x_star: np.ndarray, x_tilde_star: np.ndarray) -> BoundReport:
    """Model-difference bound for the clustering task.

    lhs = <vec(A), vec(X~) - vec(X)>;
    rhs = <vec(A), vec(D)> + c/2 + ||vec(D)||_2 * ||vec(A+D)||_2^2 / (2 beta).
    """
    beta = _require_positive("beta", beta)
    a = stack_columns(np.asarray(values, dtype=float))
    dv = stack_columns(np.asarray(delta, dtype=float))
    x = stack_columns(np.asarray(x_star, dtype=float))
    xt = stack_columns(np.asarray(x_tilde_star, dtype=float))
    if not (a.shape == dv.shape == x.shape == xt.shape):
        raise ParameterError("all matrices must share one shape")
    lhs = float(a @ (xt - x))
    evolved = a + dv
    rhs = float(a @ dv) + 0.5 * float(c) \
        + float(np.linalg.norm(dv)) * float(evolved @ evolved) / (2.0 * beta)
    inputs = {"beta": beta, "c": float(c),
              "values_fro": float(np.linalg.norm(a)),
              "delta_fro": float(np.linalg.norm(dv))}
    return BoundReport.build("clustering-model-difference", lhs, rhs, inputs)


def _norm_tag(s) -> str:
    s = as_norm(s)
    return "inf" if s == np.inf else str(int(s))


def _target_quadratic_form(ops: RidgeOperators, image_ops: RidgeOperators,
                           y: np.ndarray) -> float:
    """Quadratic form (adjoint target image)' omega^{-1} (adjoint target
    image), with the adjoint taken from ``image_ops`` and the diagonal from
    ``ops``."""
    b = image_ops.adjoint(y)
    return float(b @ (b / ops.omega))


def _sandwich_spectral_norm(values: np.ndarray, delta: np.ndarray, omega: np.ndarray,
                            iterations: int = 100, safety: float = 1.01,
                            rng: np.random.Generator | None = None) -> float:
    """Spectral norm of omega^{-1} * cross * omega^{-1} by power iteration
    on the normal operator (the cross operator is not symmetric)."""
    if rng is None:
        rng = np.random.default_rng(0)
    nd = omega.size
    z = rng.standard_normal(nd)
    nz = np.linalg.norm(z)
    if nz == 0.0:
        z = np.ones(nd)
        nz = np.linalg.norm(z)
    z /= nz

    def forward(v):
        return perturbation_cross_apply(values, delta, v / omega) / omega

    def backward(v):
        return perturbation_cross_adjoint(values, delta, v / omega) / omega

    estimate = 0.0
    for _ in range(int(iterations)):
        w = backward(forward(z))
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        estimate = np.sqrt(nw)
        z = w / nw
    estimate = float(np.linalg.norm(forward(z)))
    return estimate * float(safety)


def regression_dual_image_check(Q: EdgeIncidence, lam_tilde: np.ndarray,
                                values: np.ndarray, delta: np.ndarray, y: np.ndarray,
                                gamma: float, beta: float, s) -> BoundReport:
    """Dual-image norm bound for the regression task.

    The right side is the perturbed-omega-inverse quadratic form of the
    target image over 4 beta. The target image built from the original
    data and the one built from the perturbed data are both evaluated;
    the larger is the operative bound and both appear in the report
    inputs.
    """
    beta = _require_positive("beta", beta)
    values = np.asarray(values, dtype=float)
    delta = np.asarray(delta, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    ops = RidgeOperators(values, gamma)
    ops_tilde = RidgeOperators(values + delta, gamma)
    rhs_plain = _target_quadratic_form(ops_tilde, ops, y) / (4.0 * beta)
    rhs_tilde = _target_quadratic_form(ops_tilde, ops_tilde, y) / (4.0 * beta)
    lhs = dual_image_norm(Q, lam_tilde, s)
    inputs = {"beta": beta, "gamma": float(gamma), "s": _norm_tag(s),
              "rhs_plain": float(rhs_plain), "rhs_perturbed": float(rhs_tilde),
              "targets_norm": float(np.linalg.norm(y))}
    return BoundReport.build("regression-dual-image", lhs, max(rhs_plain, rhs_tilde), inputs)


def regression_model_check(values: np.ndarray, delta: np.ndarray, y: np.ndarray,
                           gamma: float, beta: float, c: float,
                           x_star: np.ndarray, x_tilde_star: np.ndarray,
                           rng: np.random.Generator | None = None) -> BoundReport:
    """Model-energy bound for the regression task.

    lhs is the omega-weighted energy difference of the two models; rhs
    combines the squared target quadratic forms (perturbed and original),
    each weighted by the spectral norm of the correspondingly sandwiched
    cross operator, plus 4c.
    """
    beta = _require_positive("beta", beta)
    values = np.asarray(values, dtype=float)
    delta = np.asarray(delta, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    ops = RidgeOperators(values, gamma)
    ops_tilde = RidgeOperators(values + delta, gamma)

    x = stack_columns(np.asarray(x_star, dtype=float))
    xt = stack_columns(np.asarray(x_tilde_star, dtype=float))
    lhs = float(xt @ (ops.omega * xt)) - float(x @ (ops.omega * x))

    form_tilde = _target_quadratic_form(ops_tilde, ops_tilde, y)
    form_plain = _target_quadratic_form(ops, ops, y)
    norm_tilde = _sandwich_spectral_norm(values, delta, ops_tilde.omega, rng=rng)
    norm_plain = _sandwich_spectral_norm(values, delta, ops.omega, rng=rng)
    scale = 1.0 / (16.0 * beta * beta)
    rhs = scale * form_tilde ** 2 * norm_tilde + scale * form_plain ** 2 * norm_plain \
        + 4.0 * float(c)
    inputs = {"beta": beta, "c": float(c), "gamma": float(gamma),
              "values_fro": float(np.linalg.norm(values)),
              "delta_fro": float(np.linalg.norm(delta)),
              "targets_norm": float(np.linalg.norm(y))}
    return BoundReport.build("regression-model-energy", lhs, rhs, inputs)
