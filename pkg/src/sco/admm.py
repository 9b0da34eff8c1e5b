"""Splitting solver for the constrained, regularised dual problem.

The dual objective is the loss conjugate along the negated transposed
incidence directions plus ``beta`` times the s-norm of that image, with
every dual row constrained to the unit q-norm ball. Splitting the norm
term over a consensus vector u with multiplier mu gives three updates per
sweep:

1. the dual rows solve a smooth constrained subproblem (accelerated
   projected gradient with a power-iteration Lipschitz step),
2. u has a closed-form norm proximal update with threshold beta/rho,
3. mu takes the usual scaled residual step.

Convergence is tracked through the primal/dual residual pair and the
weighted step norm that decays like 1/T for this family of methods
(blocks: zero weight on the dual rows, rho on u, 1/rho on mu).

A solve owns its state exclusively; parallelism only occurs inside the
block-separable dual update (box constraints only) and is
schedule-independent.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NumericFailure, ParameterError
from .incidence import EdgeIncidence, operator_norm_estimate, unstack_columns
from .norms import as_norm, dual_norm, vec_norm
from .problems import Problem
from .prox import project_rows, prox_norm

THREAD_ENV_VAR = "SCO_THREADS"


@dataclass
class SolverConfig:
    """Solver hyperparameters and tolerances.

    ``p`` selects the regulariser row norm; its dual ``q`` (the row
    constraint geometry) is derived, never set directly. ``s`` selects the
    norm of the dual-image regulariser weighted by ``beta``. ``parallel``
    enables the block-separable dual update and needs q = inf.
    """

    alpha: float = 1.0
    beta: float = 5.0
    rho: float = 1.0
    p: float = 2.0
    s: float = 1.0
    outer_max_iters: int = 500
    inner_max_iters: int = 200
    eps_abs: float = 1e-6
    eps_rel: float = 1e-4
    inner_tol: float = 1e-8
    parallel: bool = False
    max_workers: int | None = None

    def __post_init__(self):
        self.p = as_norm(self.p)
        self.s = as_norm(self.s)
        if not (np.isfinite(self.alpha) and self.alpha >= 0):
            raise ParameterError(f"alpha must be nonnegative, got {self.alpha}")
        if not (np.isfinite(self.beta) and self.beta >= 0):
            raise ParameterError(f"beta must be nonnegative, got {self.beta}")
        if not (np.isfinite(self.rho) and self.rho > 0):
            raise ParameterError(f"rho must be positive, got {self.rho}")
        for name in ("eps_abs", "eps_rel", "inner_tol"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ParameterError(f"{name} must be positive, got {value}")
        if self.outer_max_iters < 1 or self.inner_max_iters < 1:
            raise ParameterError("iteration caps must be at least 1")
        if self.parallel and self.q != np.inf:
            raise ParameterError("parallel dual updates need box constraints (p = 1, q = inf)")

    @property
    def q(self) -> float:
        return dual_norm(self.p)


@dataclass
class DualState:
    """Dual rows, consensus vector and multiplier, plus a sweep counter."""

    lam: np.ndarray
    u: np.ndarray
    mu: np.ndarray
    t: int = 0

    def copy(self) -> "DualState":
        return DualState(self.lam.copy(), self.u.copy(), self.mu.copy(), self.t)


def zero_state(m: int, n: int, d: int) -> DualState:
    """All-zero state: always feasible for every constraint geometry."""
    return DualState(np.zeros((m, d)), np.zeros(n * d), np.zeros(n * d))


@dataclass
class ConvergenceTrace:
    """Per-sweep primal residual, dual residual and weighted step norm."""

    primal_res: list = field(default_factory=list)
    dual_res: list = field(default_factory=list)
    h_step: list = field(default_factory=list)

    def append(self, primal: float, dual: float, h: float) -> None:
        self.primal_res.append(float(primal))
        self.dual_res.append(float(dual))
        self.h_step.append(float(h))

    def __len__(self) -> int:
        return len(self.primal_res)

    def rows(self):
        """(iter, primal_res, dual_res, h_step) tuples, 1-based iterations."""
        return [(k + 1, p, d, h) for k, (p, d, h) in
                enumerate(zip(self.primal_res, self.dual_res, self.h_step))]


@dataclass
class SolveResult:
    """Outcome of one dual solve."""

    state: DualState
    x_star: np.ndarray
    trace: ConvergenceTrace
    converged: bool
    stop_reason: str
    iterations: int
    dual_objective: float
    primal_objective: float


def h_norm_step(u_prev: np.ndarray, u_next: np.ndarray,
                mu_prev: np.ndarray, mu_next: np.ndarray, rho: float) -> float:
    """Squared weighted norm of one step: rho*||du||^2 + (1/rho)*||dmu||^2.

    The dual-row block carries zero weight, so only u and mu enter.
    """
    du = np.asarray(u_next) - np.asarray(u_prev)
    dmu = np.asarray(mu_next) - np.asarray(mu_prev)
    return float(rho * (du @ du) + (dmu @ dmu) / rho)


def _dual_quadratic_gradient(problem: Problem, Q: EdgeIncidence, lam: np.ndarray,
                             fixed_term: np.ndarray, rho: float) -> np.ndarray:
    # One transpose map, one forward map per evaluation.
    V = Q.apply_t(lam)
    return Q.apply(fixed_term + problem.conjugate_curvature(V) + rho * V)


def lambda_step(problem: Problem, Q: EdgeIncidence, state: DualState, config: SolverConfig,
                lipschitz: float | None = None,
                rng: np.random.Generator | None = None) -> np.ndarray:
    """One dual-row update: accelerated projected gradient on the smooth
    subproblem (conjugate + multiplier coupling + quadratic penalty) over
    the per-row q-ball constraints.

    Stops when the gradient-mapping norm falls below ``inner_tol`` or
    after ``inner_max_iters`` iterations; the returned rows are feasible.
    """
    if lipschitz is None:
        sigma = operator_norm_estimate(Q, rng=rng)
        lipschitz = sigma ** 2 * (problem.curvature_bound() + config.rho)
    if lipschitz <= 0:
        return project_rows(state.lam, config.q)
    n, d = problem.values.shape
    U = unstack_columns(state.u, n, d)
    M_mu = unstack_columns(state.mu, n, d)
    fixed = problem.conjugate_linear_term() + M_mu - config.rho * U
    step = 1.0 / lipschitz

    lam = project_rows(state.lam, config.q)
    y = lam
    t_k = 1.0
    for _ in range(config.inner_max_iters):
        grad = _dual_quadratic_gradient(problem, Q, y, fixed, config.rho)
        lam_next = project_rows(y - step * grad, config.q)
        gap = lipschitz * float(np.linalg.norm(y - lam_next))
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_k * t_k))
        y = lam_next + ((t_k - 1.0) / t_next) * (lam_next - lam)
        lam, t_k = lam_next, t_next
        if gap <= config.inner_tol:
            break
    return lam


def _worker_count(d: int, config: SolverConfig) -> int:
    cap = os.environ.get(THREAD_ENV_VAR)
    workers = d
    if config.max_workers is not None:
        workers = min(workers, int(config.max_workers))
    if cap:
        workers = min(workers, max(1, int(cap)))
    return max(1, min(workers, os.cpu_count() or 1))


def parallel_lambda_step(problem: Problem, Q: EdgeIncidence, state: DualState,
                         config: SolverConfig, lipschitz: float | None = None,
                         rng: np.random.Generator | None = None) -> np.ndarray:
    """Feature-separated dual-row update for box constraints.

    With q = inf the constraint set splits per entry and the subproblem
    splits into one independent block per feature column, each of which
    runs the serial update on its own column slice. Every block uses the
    same step size and its own stopping test, so the result matches the
    serial update up to the inner tolerance and is identical for any
    worker count (workers only change which thread touches which column).
    """
    if config.q != np.inf:
        raise ParameterError("the block-separable dual update needs q = inf")
    if lipschitz is None:
        sigma = operator_norm_estimate(Q, rng=rng)
        lipschitz = sigma ** 2 * (problem.curvature_bound() + config.rho)
    n, d = problem.values.shape
    if d == 1:
        return lambda_step(problem, Q, state, config, lipschitz=lipschitz)

    out = np.empty_like(state.lam)

    def solve_block(c: int) -> None:
        sub = problem.column_problem(c)
        block = DualState(
            lam=state.lam[:, c:c + 1].copy(),
            u=state.u[c * n:(c + 1) * n].copy(),
            mu=state.mu[c * n:(c + 1) * n].copy(),
            t=state.t,
        )
        out[:, c:c + 1] = lambda_step(sub, Q, block, config, lipschitz=lipschitz)

    workers = _worker_count(d, config)
    if workers == 1:
        for c in range(d):
            solve_block(c)
        return out

    def solve_chunk(chunk) -> None:
        for c in chunk:
            solve_block(c)

    chunks = [range(w, d, workers) for w in range(workers)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(solve_chunk, chunks))
    return out


def u_step(state: DualState, Q: EdgeIncidence, config: SolverConfig,
           stacked: np.ndarray | None = None) -> np.ndarray:
    """Closed-form consensus update: norm prox at threshold beta/rho of
    mu/rho plus the stacked transposed-incidence image of the fresh dual
    rows. With beta = 0 the prox is the identity."""
    if stacked is None:
        stacked = Q.apply_t_stacked(state.lam)
    omega = state.mu / config.rho + stacked
    if config.beta == 0.0:
        return omega
    return prox_norm(omega, config.beta / config.rho, config.s)


def mu_step(state: DualState, Q: EdgeIncidence, config: SolverConfig,
            stacked: np.ndarray | None = None) -> np.ndarray:
    """Multiplier update: mu plus rho times the consensus residual."""
    if stacked is None:
        stacked = Q.apply_t_stacked(state.lam)
    return state.mu + config.rho * (stacked - state.u)


def solve_dual(problem: Problem, Q: EdgeIncidence, config: SolverConfig,
               warm_start: DualState | None = None,
               rng: np.random.Generator | None = None) -> SolveResult:
    """Run the splitting method on the regularised dual and recover the
    primal optimum.

    Terminates when the primal and dual residuals both drop under
    eps_abs * sqrt(n*d) + eps_rel * scale, or at ``outer_max_iters`` (the
    result is then flagged ``"max-iterations"`` rather than raising).

    Parameters
    ----------
    problem : Problem
        Task instance; shapes must match the incidence operator.
    Q : EdgeIncidence
        Scaled incidence operator over the variable graph.
    config : SolverConfig
    warm_start : DualState, optional
        Copied before use; shape-checked against the current sizes.
    rng : numpy.random.Generator, optional
        Source for the power-iteration start vector. Defaults to a fixed
        seed, keeping repeated solves bit-identical.

    Returns
    -------
    SolveResult
    """
    n, d = problem.values.shape
    if Q.col_count != n:
        raise DimensionError(f"operator columns {Q.col_count} != instance count {n}")
    m = Q.row_count

    # No coupling: the regulariser vanishes and the loss minimiser is exact.
    if m == 0 or Q.alpha == 0.0 or (m > 0 and float(np.abs(Q.coef).max()) == 0.0):
        state = zero_state(m, n, d)
        x_star = problem.recover_primal(Q, state.lam)
        return SolveResult(
            state=state, x_star=x_star, trace=ConvergenceTrace(), converged=True,
            stop_reason="converged", iterations=0,
            dual_objective=problem.conjugate_value(Q, state.lam),
            primal_objective=problem.primal_objective(Q, x_star, config.p),
        )

    if warm_start is not None:
        if warm_start.lam.shape != (m, d) or warm_start.u.shape != (n * d,) \
                or warm_start.mu.shape != (n * d,):
            raise DimensionError("warm start shapes do not match the problem")
        state = warm_start.copy()
        state.lam = project_rows(state.lam, config.q)
    else:
        state = zero_state(m, n, d)

    sigma = operator_norm_estimate(Q, rng=rng)
    lipschitz = sigma ** 2 * (problem.curvature_bound() + config.rho)
    trace = ConvergenceTrace()
    sqrt_nd = np.sqrt(n * d)
    converged = False
    performed = 0

    for _ in range(config.outer_max_iters):
        if config.parallel and config.q == np.inf:
            state.lam = parallel_lambda_step(problem, Q, state, config, lipschitz=lipschitz)
        else:
            state.lam = lambda_step(problem, Q, state, config, lipschitz=lipschitz)
        stacked = Q.apply_t_stacked(state.lam)
        u_prev, mu_prev = state.u, state.mu
        state.u = u_step(state, Q, config, stacked=stacked)
        state.mu = mu_step(state, Q, config, stacked=stacked)
        state.t += 1
        performed += 1

        primal_res = float(np.linalg.norm(stacked - state.u))
        dual_res = config.rho * float(
            np.linalg.norm(Q.apply(unstack_columns(state.u - u_prev, n, d))))
        trace.append(primal_res, dual_res,
                     h_norm_step(u_prev, state.u, mu_prev, state.mu, config.rho))
        if not (np.isfinite(primal_res) and np.isfinite(dual_res)):
            raise NumericFailure(f"non-finite residuals at iteration {state.t}")

        eps_pri = config.eps_abs * sqrt_nd + config.eps_rel * max(
            float(np.linalg.norm(stacked)), float(np.linalg.norm(state.u)))
        eps_dua = config.eps_abs * sqrt_nd + config.eps_rel * float(
            np.linalg.norm(Q.apply(unstack_columns(state.mu, n, d))))
        if primal_res <= eps_pri and dual_res <= eps_dua:
            converged = True
            break

    x_star = problem.recover_primal(Q, state.lam)
    if not np.all(np.isfinite(x_star)):
        raise NumericFailure("recovered primal solution is not finite")
    dual_objective = problem.conjugate_value(Q, state.lam) \
        + config.beta * vec_norm(Q.apply_t_stacked(state.lam), config.s)
    return SolveResult(
        state=state, x_star=x_star, trace=trace, converged=converged,
        stop_reason="converged" if converged else "max-iterations",
        iterations=performed,
        dual_objective=dual_objective,
        primal_objective=problem.primal_objective(Q, x_star, config.p),
    )


def dual_subproblem_objective(problem: Problem, Q: EdgeIncidence, lam: np.ndarray,
                              u: np.ndarray, mu: np.ndarray, rho: float) -> float:
    """Value of the smooth dual-row subproblem (used by tests and the
    block-separability identity): conjugate + multiplier coupling +
    quadratic penalty."""
    n, d = problem.values.shape
    stacked = Q.apply_t_stacked(lam)
    coupling = float((lam * Q.apply(unstack_columns(mu, n, d))).sum())
    penalty = 0.5 * rho * float(np.sum((stacked - u) ** 2))
    return problem.conjugate_value(Q, lam) + coupling + penalty
