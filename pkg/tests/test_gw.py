import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lingw.errors import MarginalError, NoPointsError, ValidationError
from lingw.gw import (
    GwConfig,
    expand_inits,
    frank_wolfe,
    gw_objective,
    gw_quadratic,
    gw_quadratic_decomposed,
    identity_plan,
    random_vertex_plan,
    solve_gw,
    wasserstein_init,
)
from lingw.measure import MmSpace, TransportPlan, save_plan_csv, validate_plan
from lingw.synthetic import rigid_motion_2d

from conftest import LINE_X, LINE_Y, line_space, random_cloud, random_weights
from oracles import gw_naive, permutation_plans


class TestObjective:
    def test_identity_plan_on_same_space(self):
        X = line_space(LINE_X, "X")
        assert gw_objective(X, X, np.eye(5) / 5) == 0.0

    def test_two_points_vs_one(self):
        X = MmSpace(id="x", weights=[0.5, 0.5], metric=[[0, 1], [1, 0]])
        Y = MmSpace(id="y", weights=[1.0], metric=[[0.0]])
        P = np.array([[0.5], [0.5]])
        assert gw_naive(X.metric, Y.metric, P) == pytest.approx(0.5, abs=1e-15)
        assert gw_objective(X, Y, P) == pytest.approx(0.5, abs=1e-15)

    @pytest.mark.parametrize("seed", range(10))
    def test_decomposition_matches_naive(self, seed):
        rng = np.random.default_rng(seed)
        X, Y = random_cloud(rng, 4), random_cloud(rng, 5)
        P = np.outer(X.weights, Y.weights) * (0.5 + rng.random((4, 5)))
        naive = gw_naive(X.metric, Y.metric, P)
        assert abs(gw_quadratic_decomposed(X.metric, Y.metric, P) - naive) < 1e-10
        assert abs(gw_quadratic(X.metric, Y.metric, P) - naive) < 1e-10

    def test_dense_plan_uses_decomposition(self):
        rng = np.random.default_rng(0)
        X, Y = random_cloud(rng, 50), random_cloud(rng, 40)
        P = np.outer(X.weights, Y.weights)
        assert gw_quadratic(X.metric, Y.metric, P) == pytest.approx(gw_quadratic_decomposed(X.metric, Y.metric, P),
                                                                    rel=1e-12)

    def test_rejects_infeasible_plan(self):
        X = line_space(LINE_X, "X")
        with pytest.raises(MarginalError):
            gw_objective(X, X, np.eye(5) / 4)


class TestInits:
    def test_wasserstein_singletons(self):
        s = MmSpace.from_points([[1.0, 2.0]])
        np.testing.assert_array_equal(wasserstein_init(s, s).matrix, [[1.0]])

    def test_wasserstein_identical_clouds(self):
        rng = np.random.default_rng(0)
        X = random_cloud(rng, 6, uniform=True)
        P = wasserstein_init(X, X).matrix
        np.testing.assert_array_equal(P, np.eye(6) / 6)

    def test_wasserstein_disjoint_lines(self):
        X = MmSpace.from_points([0.0, 1.0])
        Y = MmSpace.from_points([10.0, 11.0])
        np.testing.assert_array_equal(wasserstein_init(X, Y).matrix, np.eye(2) / 2)

    def test_wasserstein_needs_points(self):
        X = MmSpace(id="x", weights=[1.0], metric=[[0.0]])
        with pytest.raises(NoPointsError):
            wasserstein_init(X, X)

    def test_random_vertex_is_feasible_and_seeded(self):
        rng = np.random.default_rng(1)
        mu, nu = random_weights(rng, 5), random_weights(rng, 7)
        P = random_vertex_plan(mu, nu, 3)
        validate_plan(TransportPlan(P, mu, nu))
        np.testing.assert_array_equal(P, random_vertex_plan(mu, nu, 3))
        assert np.count_nonzero(P) <= 11

    def test_identity_needs_equal_weights(self):
        with pytest.raises(ValidationError):
            identity_plan([0.5, 0.5], [0.3, 0.7])

    def test_expand_tags(self, tmp_path):
        X, Y = line_space(LINE_X, "X"), line_space(LINE_Y, "Y")
        save_plan_csv(np.eye(5) / 5, tmp_path / "p.csv")
        cfg = GwConfig(inits=["product", "identity", "random", "random(42)", f"plan({tmp_path / 'p.csv'})"],
                       restarts=2, seed=7)
        tags = [t for t, _ in expand_inits(X, Y, cfg)]
        assert tags == ["product", "identity", "random(7)", "random(8)", "random(42)", f"plan({tmp_path / 'p.csv'})"]

    def test_unknown_init(self):
        X = line_space(LINE_X, "X")
        with pytest.raises(ValidationError):
            expand_inits(X, X, GwConfig(inits=["sinkhorn"]))

    def test_bad_config(self):
        with pytest.raises(ValidationError):
            GwConfig(max_iter=0)
        with pytest.raises(ValidationError):
            GwConfig(rel_tol=0.0)


class TestSolveGw:
    def test_same_space_with_identity(self):
        rng = np.random.default_rng(2)
        X = random_cloud(rng, 8)
        res = solve_gw(X, X, GwConfig(inits=["product", "identity"]))
        assert res.distance == 0.0
        assert res.converged

    def test_line_instance(self):
        X, Y = line_space(LINE_X, "X"), line_space(LINE_Y, "Y")
        res = solve_gw(X, Y, GwConfig(inits=["product", "identity", "random"], restarts=10))
        # identity coupling of the two sorted supports has cost 12/25
        assert res.cost == pytest.approx(0.48, abs=1e-12)
        assert res.distance == pytest.approx(0.69, abs=0.02)
        best_perm = min(gw_naive(X.metric, Y.metric, P) for _, P in permutation_plans(5))
        assert res.cost == pytest.approx(best_perm, abs=1e-12)

    def test_rigid_motion(self):
        rng = np.random.default_rng(4)
        pts = rng.random((15, 2))
        X = MmSpace.from_points(pts, id="x")
        Y = MmSpace.from_points(rigid_motion_2d(pts, 1.1, [3.0, -2.0]), id="y")
        res = solve_gw(X, Y, GwConfig(inits=["product", "identity"]))
        assert res.distance <= 1e-6

    def test_result_invariants(self):
        rng = np.random.default_rng(5)
        X, Y = random_cloud(rng, 6), random_cloud(rng, 5)
        res = solve_gw(X, Y)
        validate_plan(res.plan)
        np.testing.assert_allclose(res.plan.matrix.sum(axis=1), X.weights, atol=1e-9)
        assert res.distance ** 2 == pytest.approx(res.cost, abs=1e-9)
        assert res.cost == pytest.approx(gw_objective(X, Y, res.plan), abs=1e-12)
        assert set(res.to_dict()) == {"distance", "cost", "iterations", "converged", "init_used"}

    def test_history_non_increasing(self):
        rng = np.random.default_rng(6)
        X, Y = random_cloud(rng, 12), random_cloud(rng, 10)
        for seed in range(5):
            P0 = random_vertex_plan(X.weights, Y.weights, seed)
            *_, hist = frank_wolfe(X.metric, Y.metric, X.weights, Y.weights, P0)
            assert np.all(np.diff(hist) <= 0)

    def test_max_iter_reports_non_convergence(self):
        rng = np.random.default_rng(7)
        X, Y = random_cloud(rng, 12), random_cloud(rng, 10)
        res = solve_gw(X, Y, GwConfig(inits=["product"], max_iter=1))
        assert res.iterations == 1

    def test_deterministic_tie_break(self):
        X = line_space(LINE_X, "X")
        res = solve_gw(X, X, GwConfig(inits=["product", "identity", ("aaa", np.eye(5) / 5)]))
        assert res.init_used == "aaa"

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_upper_bound_of_supplied_plan(self, seed):
        rng = np.random.default_rng(seed)
        X, Y = random_cloud(rng, int(rng.integers(2, 7))), random_cloud(rng, int(rng.integers(2, 7)))
        P = random_vertex_plan(X.weights, Y.weights, seed)
        res = solve_gw(X, Y, GwConfig(inits=[("given", P)]))
        assert res.cost <= gw_objective(X, Y, P) + 1e-12

    @pytest.mark.parametrize("seed", range(5))
    def test_symmetry_with_transposed_inits(self, seed):
        rng = np.random.default_rng(seed)
        X, Y = random_cloud(rng, 6), random_cloud(rng, 7)
        inits = [random_vertex_plan(X.weights, Y.weights, s) for s in range(4)] + [np.outer(X.weights, Y.weights)]
        xy = solve_gw(X, Y, GwConfig(inits=[(f"p{k}", P) for k, P in enumerate(inits)]))
        yx = solve_gw(Y, X, GwConfig(inits=[(f"p{k}", P.T) for k, P in enumerate(inits)]))
        assert abs(xy.distance - yx.distance) < 1e-6

    def test_relabeled_space_with_permutation_init(self):
        rng = np.random.default_rng(8)
        X = random_cloud(rng, 7)
        perm = rng.permutation(7)
        Y = MmSpace(id="y", weights=X.weights[perm], metric=X.metric[np.ix_(perm, perm)])
        P = np.zeros((7, 7))
        P[perm, np.arange(7)] = X.weights[perm]
        res = solve_gw(X, Y, GwConfig(inits=["product", ("truth", P)]))
        assert res.distance <= 1e-6

