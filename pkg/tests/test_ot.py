import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lingw.errors import DimensionMismatch, InfeasibleError, MarginalError, ValidationError, ZeroRowError
from lingw.measure import ThreePlan, TransportPlan, validate_plan
from lingw.ot import (
    BarycentricMap,
    conditional_glue,
    euclidean_barycentric_projection,
    glot,
    pushforward,
    solve_ot,
    sq_euclidean,
    w_sigma_lp,
    wasserstein,
)

from conftest import random_weights
from oracles import ot_by_enumeration, transport_vertices, w_sigma_dense_lp


def deterministic_plan(sigma, targets, m):
    P = np.zeros((len(sigma), m))
    P[np.arange(len(sigma)), targets] = sigma
    return P


class TestSolveOt:
    def test_singleton(self):
        res = solve_ot([[4.0]], [1.0], [1.0])
        np.testing.assert_array_equal(res.plan.matrix, [[1.0]])
        assert res.cost == 4.0
        assert res.distance == 2.0

    def test_two_point_measures(self):
        mu, nu = [0.25, 0.75], [0.75, 0.25]
        C = sq_euclidean([0.0, 1.0], [0.0, 1.0])
        assert ot_by_enumeration(C, np.array(mu), np.array(nu)) == pytest.approx(0.5, abs=1e-15)
        res = solve_ot(C, mu, nu)
        assert res.cost == pytest.approx(0.5, abs=1e-12)
        np.testing.assert_allclose(res.plan.matrix, [[0.25, 0.0], [0.5, 0.25]], atol=1e-15)

    def test_shifted_uniform_monotone(self):
        u = np.full(3, 1 / 3)
        C = sq_euclidean([0.0, 1.0, 2.0], [1.0, 2.0, 3.0])
        assert ot_by_enumeration(C, u, u) == pytest.approx(1.0, abs=1e-12)
        res = solve_ot(C, u, u)
        assert res.cost == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(res.plan.matrix, np.eye(3) / 3, atol=1e-15)

    @pytest.mark.parametrize("n, m", [(n, m) for n in range(1, 5) for m in range(1, 5)])
    def test_matches_vertex_enumeration(self, n, m):
        rng = np.random.default_rng(100 * n + m)
        for _ in range(3):
            a, b = random_weights(rng, n), random_weights(rng, m)
            C = rng.random((n, m))
            res = solve_ot(C, a, b)
            assert abs(res.cost - ot_by_enumeration(C, a, b)) < 1e-10
            validate_plan(res.plan)
            assert np.count_nonzero(res.plan.matrix) <= n + m - 1

    def test_plan_is_a_vertex(self):
        rng = np.random.default_rng(5)
        a, b = random_weights(rng, 3), random_weights(rng, 4)
        P = solve_ot(rng.random((3, 4)), a, b).plan.matrix
        assert any(np.allclose(P, V, atol=1e-12) for V in transport_vertices(a, b))

    def test_degenerate_ties_deterministic(self):
        u = np.full(4, 0.25)
        first = solve_ot(np.zeros((4, 4)), u, u).plan.matrix
        for _ in range(3):
            np.testing.assert_array_equal(solve_ot(np.zeros((4, 4)), u, u).plan.matrix, first)

    def test_infeasible_sums(self):
        with pytest.raises(InfeasibleError):
            solve_ot(np.zeros((2, 2)), [0.5, 0.5], [0.5, 0.6])

    def test_small_mismatch_rescaled(self):
        res = solve_ot(np.ones((2, 2)), [0.5, 0.5], [0.5, 0.5 + 5e-10])
        assert res.plan.matrix.sum() == pytest.approx(1.0, abs=1e-15)

    def test_negative_cost_rejected(self):
        with pytest.raises(ValidationError):
            solve_ot([[-1.0]], [1.0], [1.0])

    def test_distance_squared_is_cost(self):
        rng = np.random.default_rng(8)
        res = wasserstein(rng.random((5, 2)), random_weights(rng, 5), rng.random((4, 2)), random_weights(rng, 4))
        assert res.distance ** 2 == pytest.approx(res.cost, abs=1e-9)


class TestBarycentricProjection:
    def test_deterministic_plan_recovers_map(self):
        sigma = np.array([0.2, 0.3, 0.5])
        Y = np.array([[0.0, 1.0], [2.0, 3.0], [4.0, 5.0], [6.0, 7.0]])
        T = [3, 0, 2]
        out = euclidean_barycentric_projection(deterministic_plan(sigma, T, 4), Y)
        np.testing.assert_array_equal(out.targets, Y[T])

    def test_product_plan_gives_mean(self):
        rng = np.random.default_rng(0)
        sigma, nu = random_weights(rng, 3), random_weights(rng, 5)
        Y = rng.random((5, 2))
        out = euclidean_barycentric_projection(np.outer(sigma, nu), Y)
        np.testing.assert_allclose(out.targets, np.tile(nu @ Y, (3, 1)), atol=1e-14)

    def test_uniform_two_by_two(self):
        out = euclidean_barycentric_projection(np.full((2, 2), 0.25), [0.0, 1.0])
        np.testing.assert_array_equal(out.targets[:, 0], [0.5, 0.5])

    def test_zero_row(self):
        with pytest.raises(ZeroRowError):
            euclidean_barycentric_projection([[0.5, 0.5], [0.0, 0.0]], [0.0, 1.0])


class TestGlot:
    def test_identical_maps(self):
        m = BarycentricMap("euclidean", [[0.0, 1.0], [2.0, 3.0]])
        assert glot([0.5, 0.5], m, m) == 0.0

    def test_symmetric(self):
        rng = np.random.default_rng(1)
        a = BarycentricMap("euclidean", rng.random((4, 3)))
        b = BarycentricMap("euclidean", rng.random((4, 3)))
        w = random_weights(rng, 4)
        assert glot(w, a, b) == glot(w, b, a)

    def test_two_point_value(self):
        a = BarycentricMap("euclidean", [[0.0, 0.0], [1.0, 0.0]])
        b = BarycentricMap("euclidean", [[0.0, 0.0], [0.0, 0.0]])
        assert glot([0.5, 0.5], a, b) == pytest.approx(np.sqrt(0.5), abs=1e-15)

    def test_dimension_mismatch(self):
        a = BarycentricMap("euclidean", [[0.0, 0.0], [1.0, 0.0]])
        b = BarycentricMap("euclidean", [[0.0], [0.0]])
        with pytest.raises(DimensionMismatch):
            glot([0.5, 0.5], a, b)


class TestWSigma:
    def test_same_plan_same_targets(self):
        rng = np.random.default_rng(2)
        sigma, mu = random_weights(rng, 4), random_weights(rng, 3)
        A = solve_ot(rng.random((4, 3)), sigma, mu).plan
        X = rng.random((3, 2))
        three, value = w_sigma_lp(A, A, X, X)
        assert value == pytest.approx(0.0, abs=1e-12)
        three.validate()

    def test_deterministic_plans_equal_glot(self):
        rng = np.random.default_rng(3)
        sigma = random_weights(rng, 4)
        X, Y = rng.random((3, 2)), rng.random((5, 2))
        A = deterministic_plan(sigma, [0, 2, 1, 2], 3)
        B = deterministic_plan(sigma, [4, 4, 0, 1], 5)
        _, value = w_sigma_lp(A, B, X, Y)
        ta = euclidean_barycentric_projection(A, X)
        tb = euclidean_barycentric_projection(B, Y)
        assert value == pytest.approx(glot(sigma, ta, tb), abs=1e-12)

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_dense_lp(self, seed):
        rng = np.random.default_rng(seed)
        sigma, mu, nu = random_weights(rng, 4), random_weights(rng, 3), random_weights(rng, 3)
        A = solve_ot(rng.random((4, 3)), sigma, mu).plan.matrix
        B = solve_ot(rng.random((4, 3)), sigma, nu).plan.matrix
        X, Y = rng.random((3, 2)), rng.random((3, 2))
        three, value = w_sigma_lp(A, B, X, Y)
        three.validate()
        assert abs(value ** 2 - w_sigma_dense_lp(A, B, X, Y)) < 1e-8

    def test_dense_plans_match_lp(self):
        rng = np.random.default_rng(99)
        sigma, mu, nu = random_weights(rng, 3), random_weights(rng, 4), random_weights(rng, 3)
        A, B = np.outer(sigma, mu), np.outer(sigma, nu)
        X, Y = rng.random((4, 2)), rng.random((3, 2))
        _, value = w_sigma_lp(A, B, X, Y)
        assert abs(value ** 2 - w_sigma_dense_lp(A, B, X, Y)) < 1e-8

    def test_reference_mismatch(self):
        with pytest.raises(MarginalError):
            w_sigma_lp(np.full((2, 2), 0.25), [[0.25, 0.0], [0.5, 0.25]], [0.0, 1.0], [0.0, 1.0])


def _random_problem(seed, max_n=6):
    rng = np.random.default_rng(seed)
    n, m = rng.integers(1, max_n + 1, 2)
    return rng, random_weights(rng, n), rng.random((n, 2)), random_weights(rng, m), rng.random((m, 2))


class TestTransportProperties:
    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_barycentric_map_is_optimal(self, seed):
        _, sigma, S, mu, X = _random_problem(seed)
        plan = wasserstein(S, sigma, X, mu).plan
        T = euclidean_barycentric_projection(plan, X)
        atoms, weights = pushforward(sigma, T)
        ot = wasserstein(S, sigma, atoms, weights).cost
        direct = float(np.sum(sigma * np.sum((S - T.targets) ** 2, axis=1)))
        assert abs(ot - direct) < 1e-7

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_jensen_and_wasserstein_bounds(self, seed):
        rng, sigma, _, mu, X = _random_problem(seed)
        nu = random_weights(rng, 4)
        Y = rng.random((4, 2))
        A = solve_ot(rng.random((len(sigma), len(mu))), sigma, mu).plan.matrix
        B = solve_ot(rng.random((len(sigma), 4)), sigma, nu).plan.matrix
        cost = sq_euclidean(X, Y)
        glue = ThreePlan(conditional_glue(A, B), A, B)
        glue.validate()
        objective = float(np.einsum("ijk,jk->", glue.tensor, cost))
        ta = euclidean_barycentric_projection(glue.p12(), X)
        tb = euclidean_barycentric_projection(glue.p13(), Y)
        assert glot(sigma, ta, tb) ** 2 <= objective + 1e-9
        three, w_sigma = w_sigma_lp(A, B, X, Y)
        assert glot(sigma, euclidean_barycentric_projection(A, X),
                    euclidean_barycentric_projection(B, Y)) <= w_sigma + 1e-9
        assert wasserstein(X, mu, Y, nu).distance <= w_sigma + 1e-7
        validate_plan(TransportPlan(three.p23(), mu, nu), tol=1e-9)
