"""Task definitions: primal losses, their conjugates along the transposed
incidence directions, and primal recovery.

A task supplies two ingredients: the linear term of the conjugate (an
n-by-d matrix) and the curvature action (a positive self-adjoint map on
n-by-d matrices). With V denoting the transposed incidence map applied to
the dual rows, everything else follows:

* conjugate value   <linear, V> + 0.5 * <V, curvature(V)>
* conjugate gradient   incidence(linear + curvature(V))
* primal recovery      X = -(linear + curvature(V))

The recovery line is the stationarity condition: the loss gradient at the
optimum cancels the transposed incidence image of the dual variables.

Constant terms that do not depend on the dual variables are dropped from
the conjugate value; ``conjugate_constant`` returns the dropped,
data-dependent part so that full conjugate values (needed by the refresh
metric and duality checks) can be reassembled exactly.

Problem objects are immutable; all methods are pure and thread-safe.
"""

from __future__ import annotations

from abc import ABC, abstractmethod

import numpy as np

from .errors import DataValidationError, DimensionError, ParameterError
from .graph import Dataset
from .incidence import EdgeIncidence, stack_columns, unstack_columns
from .norms import sum_norms


class Problem(ABC):
    """Contract shared by the concrete tasks."""

    dataset: Dataset

    @property
    def values(self) -> np.ndarray:
        return self.dataset.values

    # --- task-specific ingredients -------------------------------------

    @abstractmethod
    def primal_value(self, X: np.ndarray) -> float:
        """Loss f(X) for the task (regulariser excluded)."""

    @abstractmethod
    def conjugate_linear_term(self) -> np.ndarray:
        """n-by-d linear coefficient of the conjugate in V."""

    @abstractmethod
    def conjugate_curvature(self, V: np.ndarray) -> np.ndarray:
        """Curvature action of the conjugate applied to an n-by-d matrix."""

    @abstractmethod
    def curvature_bound(self) -> float:
        """Largest eigenvalue of the curvature action (for step sizes)."""

    @abstractmethod
    def conjugate_constant(self) -> float:
        """Data-dependent constant dropped from ``conjugate_value``."""

    @abstractmethod
    def with_values(self, values: np.ndarray, targets: np.ndarray | None = None) -> "Problem":
        """Same task rebuilt on new data of identical shape."""

    @abstractmethod
    def column_problem(self, c: int) -> "Problem":
        """Restriction of the task to feature column c (used by the
        block-separable dual update)."""

    # --- shared derived operations -------------------------------------

    def _check_shape(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape != self.values.shape:
            raise DimensionError(f"expected shape {self.values.shape}, got {X.shape}")
        return X

    def conjugate_value(self, Q: EdgeIncidence, lam: np.ndarray) -> float:
        """Conjugate of the loss evaluated along the negated transposed
        incidence image of the dual rows (constant terms dropped)."""
        V = Q.apply_t(lam)
        return float((self.conjugate_linear_term() * V).sum()
                     + 0.5 * (V * self.conjugate_curvature(V)).sum())

    def conjugate_value_full(self, Q: EdgeIncidence, lam: np.ndarray) -> float:
        """Conjugate value with the dropped data-dependent constant restored."""
        return self.conjugate_value(Q, lam) + self.conjugate_constant()

    def conjugate_gradient(self, Q: EdgeIncidence, lam: np.ndarray) -> np.ndarray:
        """Gradient of ``conjugate_value`` with respect to the dual rows."""
        V = Q.apply_t(lam)
        return Q.apply(self.conjugate_linear_term() + self.conjugate_curvature(V))

    def recover_primal(self, Q: EdgeIncidence, lam: np.ndarray) -> np.ndarray:
        """Primal optimum implied by a dual point via stationarity."""
        V = Q.apply_t(lam)
        return -(self.conjugate_linear_term() + self.conjugate_curvature(V))

    def primal_objective(self, Q: EdgeIncidence, X: np.ndarray, p) -> float:
        """Loss plus the sum-of-norms regularisation term."""
        return self.primal_value(X) + sum_norms(Q.apply(X), p)


class ConvexClusteringProblem(Problem):
    """Squared Frobenius distance to the data matrix."""

    def __init__(self, dataset: Dataset):
        self.dataset = dataset

    def primal_value(self, X: np.ndarray) -> float:
        X = self._check_shape(X)
        diff = X - self.values
        return float((diff * diff).sum())

    def conjugate_linear_term(self) -> np.ndarray:
        return -self.values

    def conjugate_curvature(self, V: np.ndarray) -> np.ndarray:
        return 0.5 * V

    def curvature_bound(self) -> float:
        return 0.5

    def conjugate_constant(self) -> float:
        return 0.0

    def with_values(self, values, targets=None) -> "ConvexClusteringProblem":
        return ConvexClusteringProblem(Dataset(values))

    def column_problem(self, c: int) -> "ConvexClusteringProblem":
        return ConvexClusteringProblem(Dataset(self.values[:, c:c + 1]))


class RidgeOperators:
    """Diagonal and block-summing linear maps for the regression loss.

    ``omega`` is the diagonal of the quadratic form (stacked data squared
    plus gamma), kept as a vector; its inverse is an elementwise
    reciprocal. The target map sends a stacked n*d vector to the length-n
    vector of per-instance feature sums weighted by the data, and
    ``adjoint`` is its transpose.
    """

    def __init__(self, values: np.ndarray, gamma: float):
        gamma = float(gamma)
        if not (np.isfinite(gamma) and gamma > 0):
            raise ParameterError(f"gamma must be positive, got {gamma}")
        self.gamma = gamma
        self.n, self.d = values.shape
        self.stacked_values = stack_columns(values)
        self.omega = self.stacked_values ** 2 + gamma

    def apply(self, z: np.ndarray) -> np.ndarray:
        """Length-n image: per-instance sum of data-weighted coordinates."""
        return (self.stacked_values * z).reshape(self.d, self.n).sum(axis=0)

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        """Stacked n*d adjoint image of a length-n vector."""
        return self.stacked_values * np.tile(np.asarray(y, dtype=float), self.d)


def perturbation_cross_apply(values: np.ndarray, delta: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Action of the data/perturbation cross operator on a stacked vector.

    Maps z to 2 * delta-diagonal applied after block-summing the
    data-diagonal image: the difference between the perturbed and the
    original quadratic forms of the regression loss.
    """
    n, d = values.shape
    va = stack_columns(values)
    vd = stack_columns(delta)
    summed = (va * z).reshape(d, n).sum(axis=0)
    return 2.0 * vd * np.tile(summed, d)


def perturbation_cross_adjoint(values: np.ndarray, delta: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Adjoint of :func:`perturbation_cross_apply`."""
    n, d = values.shape
    va = stack_columns(values)
    vd = stack_columns(delta)
    summed = (vd * z).reshape(d, n).sum(axis=0)
    return 2.0 * va * np.tile(summed, d)


class RidgeProblem(Problem):
    """Separable quadratic regression loss with l2 shrinkage.

    The loss is the quadratic form with diagonal ``omega`` minus twice the
    target term; the target-only constant is dropped throughout and
    restored by ``conjugate_constant`` where exact conjugate values are
    needed.
    """

    def __init__(self, dataset: Dataset, gamma: float):
        if dataset.targets is None:
            raise DataValidationError("regression task needs targets")
        self.dataset = dataset
        self.gamma = float(gamma)
        self.operators = RidgeOperators(dataset.values, gamma)
        self._omega = self.operators.omega
        self._b = self.operators.adjoint(dataset.targets)

    @property
    def omega_diagonal(self) -> np.ndarray:
        return self._omega

    @property
    def target_adjoint(self) -> np.ndarray:
        """Stacked adjoint image of the targets (the conjugate shift)."""
        return self._b

    def primal_value(self, X: np.ndarray) -> float:
        X = self._check_shape(X)
        x = stack_columns(X)
        return float(x @ (self._omega * x) - 2.0 * self._b @ x)

    def conjugate_linear_term(self) -> np.ndarray:
        n, d = self.values.shape
        return -unstack_columns(self._b / self._omega, n, d)

    def conjugate_curvature(self, V: np.ndarray) -> np.ndarray:
        n, d = self.values.shape
        return unstack_columns(0.5 * stack_columns(V) / self._omega, n, d)

    def curvature_bound(self) -> float:
        return float(0.5 / self._omega.min())

    def conjugate_constant(self) -> float:
        return float(self._b @ (self._b / self._omega))

    def with_values(self, values, targets=None) -> "RidgeProblem":
        if targets is None:
            targets = self.dataset.targets
        return RidgeProblem(Dataset(values, targets), self.gamma)

    def column_problem(self, c: int) -> "RidgeProblem":
        return RidgeProblem(Dataset(self.values[:, c:c + 1], self.dataset.targets), self.gamma)


TASKS = ("cc", "ridge")


def make_problem(task: str, dataset: Dataset, gamma: float = 5.0) -> Problem:
    """Build a problem instance by task name ("cc" or "ridge")."""
    if task == "cc":
        return ConvexClusteringProblem(dataset)
    if task == "ridge":
        return RidgeProblem(dataset, gamma)
    raise ParameterError(f"unknown task {task!r}; expected one of {TASKS}")
