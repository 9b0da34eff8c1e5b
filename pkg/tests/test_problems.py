import numpy as np
import pytest

from sco import (ConvexClusteringProblem, DataValidationError, Dataset,
                 DimensionError, EdgeIncidence, ParameterError, RidgeProblem,
                 VariableGraph, make_problem, stack_columns, unstack_columns)

from oracles import conjugate_sup_oracle


def two_point_instance():
    data = Dataset([[0.0], [2.0]])
    graph = VariableGraph(2, ((0, 1, 1.0),))
    return ConvexClusteringProblem(data), EdgeIncidence(graph, 1.0)


def random_setup(rng, n, d, task="cc"):
    edges = tuple((i, i + 1, float(rng.uniform(0.3, 1.5))) for i in range(n - 1))
    graph = VariableGraph(n, edges)
    values = rng.standard_normal((n, d))
    if task == "cc":
        problem = ConvexClusteringProblem(Dataset(values))
    else:
        problem = RidgeProblem(Dataset(values, targets=rng.standard_normal(n)),
                               gamma=float(rng.uniform(1.0, 5.0)))
    return problem, EdgeIncidence(graph, float(rng.uniform(0.3, 1.5))), graph


def test_clustering_primal_examples():
    problem, Q = two_point_instance()
    assert problem.primal_value(problem.values) == 0.0
    assert problem.primal_value(np.array([[0.5], [1.5]])) == 0.5


def test_ridge_primal_at_zero():
    problem = RidgeProblem(Dataset([[1.0, 2.0], [3.0, 4.0]], targets=[1.0, -1.0]), gamma=2.0)
    assert problem.primal_value(np.zeros((2, 2))) == 0.0


def test_ridge_needs_targets_and_positive_gamma():
    with pytest.raises(DataValidationError):
        RidgeProblem(Dataset([[1.0], [2.0]]), gamma=1.0)
    with pytest.raises(ParameterError):
        RidgeProblem(Dataset([[1.0], [2.0]], targets=[0.0, 1.0]), gamma=0.0)


def test_conjugate_hand_value():
    problem, Q = two_point_instance()
    assert problem.conjugate_value(Q, np.array([[1.0]])) == 2.5
    assert problem.conjugate_value(Q, np.zeros((1, 1))) == 0.0


def test_conjugate_matches_sup_oracle():
    rng = np.random.default_rng(0)
    for task in ("cc", "ridge"):
        for _ in range(8):
            n, d = int(rng.integers(2, 5)), int(rng.integers(1, 3))
            problem, Q, _ = random_setup(rng, n, d, task)
            lam = rng.standard_normal((Q.row_count, d))
            v = -stack_columns(Q.apply_t(lam))

            def primal_flat(x):
                return problem.primal_value(unstack_columns(x, n, d))

            expected = conjugate_sup_oracle(primal_flat, n * d, v)
            assert abs(problem.conjugate_value_full(Q, lam) - expected) <= 1e-8 * (1 + abs(expected))


def test_conjugate_gradient_zero_dual():
    rng = np.random.default_rng(1)
    problem, Q, _ = random_setup(rng, 4, 2, "cc")
    lam0 = np.zeros((Q.row_count, 2))
    np.testing.assert_allclose(problem.conjugate_gradient(Q, lam0),
                               -Q.apply(problem.values), atol=1e-14)


def test_conjugate_gradient_zero_dataset():
    graph = VariableGraph(3, ((0, 1, 1.0), (1, 2, 1.0)))
    Q = EdgeIncidence(graph, 1.0)
    problem = ConvexClusteringProblem(Dataset(np.zeros((3, 2))))
    lam = np.random.default_rng(2).standard_normal((2, 2))
    np.testing.assert_allclose(problem.conjugate_gradient(Q, lam),
                               0.5 * Q.apply(Q.apply_t(lam)), atol=1e-14)


def test_conjugate_gradient_finite_differences():
    rng = np.random.default_rng(3)
    h = 1e-5
    for task in ("cc", "ridge"):
        for _ in range(10):
            n, d = int(rng.integers(2, 5)), int(rng.integers(1, 3))
            problem, Q, _ = random_setup(rng, n, d, task)
            lam = rng.standard_normal((Q.row_count, d))
            grad = problem.conjugate_gradient(Q, lam)
            numeric = np.zeros_like(grad)
            for a in range(lam.shape[0]):
                for b in range(lam.shape[1]):
                    bump = np.zeros_like(lam)
                    bump[a, b] = h
                    numeric[a, b] = (problem.conjugate_value(Q, lam + bump)
                                     - problem.conjugate_value(Q, lam - bump)) / (2 * h)
            scale = max(1.0, float(np.abs(numeric).max()))
            assert np.abs(grad - numeric).max() <= 1e-5 * scale


def test_recover_primal_examples():
    problem, Q = two_point_instance()
    np.testing.assert_allclose(problem.recover_primal(Q, np.zeros((1, 1))), problem.values)
    np.testing.assert_allclose(problem.recover_primal(Q, np.array([[1.0]])),
                               [[-0.5], [2.5]])


def test_ridge_recovery_zero_dual_is_diagonal_solve():
    rng = np.random.default_rng(4)
    problem, Q, _ = random_setup(rng, 5, 2, "ridge")
    x = problem.recover_primal(Q, np.zeros((Q.row_count, 2)))
    b = problem.target_adjoint
    np.testing.assert_allclose(stack_columns(x), b / problem.omega_diagonal, atol=1e-12)


def test_fenchel_equality_at_recovered_point():
    # f(x) + <dual image, x> = -conjugate_full at the stationarity point
    rng = np.random.default_rng(5)
    for task in ("cc", "ridge"):
        for _ in range(10):
            n, d = int(rng.integers(2, 6)), int(rng.integers(1, 3))
            problem, Q, _ = random_setup(rng, n, d, task)
            lam = rng.standard_normal((Q.row_count, d))
            x = problem.recover_primal(Q, lam)
            lhs = problem.primal_value(x) + float((Q.apply_t(lam) * x).sum())
            rhs = -problem.conjugate_value_full(Q, lam)
            assert abs(lhs - rhs) <= 1e-8 * (1 + abs(rhs))


def test_omega_diagonal_bounded_below_by_gamma():
    rng = np.random.default_rng(6)
    problem, _, _ = random_setup(rng, 5, 3, "ridge")
    assert problem.omega_diagonal.min() >= problem.gamma


def test_ridge_operators_match_dense_definitions():
    rng = np.random.default_rng(7)
    n, d = 4, 3
    problem, _, _ = random_setup(rng, n, d, "ridge")
    ops = problem.operators
    z = rng.standard_normal(n * d)
    y = rng.standard_normal(n)
    block = np.kron(np.ones((1, d)), np.eye(n))
    dense_lam = block @ np.diag(stack_columns(problem.values))
    np.testing.assert_allclose(ops.apply(z), dense_lam @ z, atol=1e-12)
    np.testing.assert_allclose(ops.adjoint(y), dense_lam.T @ y, atol=1e-12)


def test_perturbation_cross_map_matches_dense():
    from sco import perturbation_cross_adjoint, perturbation_cross_apply

    rng = np.random.default_rng(8)
    n, d = 3, 2
    values = rng.standard_normal((n, d))
    delta = rng.standard_normal((n, d))
    dense = (2.0 * np.diag(stack_columns(delta))
             @ np.kron(np.ones((d, d)), np.eye(n))
             @ np.diag(stack_columns(values)))
    z = rng.standard_normal(n * d)
    np.testing.assert_allclose(perturbation_cross_apply(values, delta, z), dense @ z,
                               atol=1e-12)
    np.testing.assert_allclose(perturbation_cross_adjoint(values, delta, z), dense.T @ z,
                               atol=1e-12)


def test_make_problem_dispatch():
    data = Dataset([[0.0], [1.0]], targets=[0.5, 1.5])
    assert isinstance(make_problem("cc", data), ConvexClusteringProblem)
    assert isinstance(make_problem("ridge", data, gamma=1.0), RidgeProblem)
    with pytest.raises(ParameterError):
        make_problem("other", data)


def test_primal_value_shape_check():
    problem, Q = two_point_instance()
    with pytest.raises(DimensionError):
        problem.primal_value(np.zeros((3, 1)))
