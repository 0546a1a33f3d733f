import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lingw.errors import LinGWIOError, MarginalError, ParseError, ValidationError
from lingw.measure import (
    DistanceMatrix,
    MmSpace,
    ThreePlan,
    TransportPlan,
    dumps_space,
    load_distance_csv,
    load_labels_csv,
    load_mm_space,
    load_plan_csv,
    load_spaces_dir,
    product_plan,
    save_distance_csv,
    save_labels_csv,
    save_mm_space,
    save_plan_csv,
    validate_plan,
)

from conftest import LINE_S, line_space


def write_json(path, obj):
    path.write_text(json.dumps(obj))
    return path


class TestMmSpaceValidation:
    def test_singleton(self, tmp_path):
        p = write_json(tmp_path / "s.json", {"id": "one", "label": None, "n": 1, "weights": [1.0],
                                             "metric_kind": "explicit", "metric": [[0.0]], "points": None})
        s = load_mm_space(p)
        assert s.n == 1
        np.testing.assert_array_equal(s.metric, [[0.0]])

    def test_weights_not_normalized(self, tmp_path):
        p = write_json(tmp_path / "s.json", {"id": "a", "n": 2, "weights": [0.5, 0.4],
                                             "metric": [[0, 1], [1, 0]]})
        with pytest.raises(ValidationError, match="normalization"):
            load_mm_space(p)

    def test_line_instance_loads(self, tmp_path):
        p = tmp_path / "s.json"
        save_mm_space(line_space(LINE_S, "S"), p)
        s = load_mm_space(p)
        assert s.metric[0, 4] == 6.0
        np.testing.assert_allclose(s.weights, 0.2)

    @pytest.mark.parametrize("metric, invariant", [
        ([[0, 1], [2, 0]], "symmetry"),
        ([[1, 1], [1, 0]], "zero diagonal"),
        ([[0, -1], [-1, 0]], "nonnegative"),
    ])
    def test_metric_invariants_named(self, metric, invariant):
        with pytest.raises(ValidationError, match=invariant):
            MmSpace(id="a", weights=[0.5, 0.5], metric=metric)

    def test_zero_weight_rejected(self):
        with pytest.raises(ValidationError, match="positive"):
            MmSpace(id="a", weights=[1.0, 0.0], metric=[[0, 1], [1, 0]])

    def test_drop_zero(self, tmp_path):
        p = write_json(tmp_path / "s.json", {"id": "a", "n": 3, "weights": [0.5, 0.0, 0.5],
                                             "metric": [[0, 1, 2], [1, 0, 1], [2, 1, 0]]})
        s = load_mm_space(p, drop_zero=True)
        assert s.n == 2
        np.testing.assert_array_equal(s.metric, [[0, 2], [2, 0]])

    def test_euclidean_consistency(self):
        with pytest.raises(ValidationError, match="euclidean"):
            MmSpace(id="a", weights=[0.5, 0.5], metric=[[0, 2], [2, 0]],
                    metric_kind="euclidean", points=[[0.0], [1.0]])

    def test_malformed_json(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        with pytest.raises(ParseError):
            load_mm_space(p)

    def test_missing_field(self, tmp_path):
        p = write_json(tmp_path / "s.json", {"id": "a", "weights": [1.0]})
        with pytest.raises(ParseError):
            load_mm_space(p)

    def test_arrays_read_only(self):
        s = line_space(LINE_S, "S")
        with pytest.raises(ValueError):
            s.metric[0, 1] = 3.0

    def test_triangle_violation(self):
        s = MmSpace(id="g", weights=[1 / 3] * 3, metric=[[0, 1, 5], [1, 0, 1], [5, 1, 0]])
        assert s.triangle_violation() == pytest.approx(3.0)
        assert line_space(LINE_S, "S").triangle_violation() == 0.0


class TestSpaceSerialization:
    def test_singleton_round_trip(self, tmp_path):
        s = MmSpace(id="one", weights=[1.0], metric=[[0.0]])
        save_mm_space(s, tmp_path / "a.json")
        t = load_mm_space(tmp_path / "a.json")
        assert (t.id, t.n, t.metric_kind) == ("one", 1, "explicit")

    def test_line_instance_exact(self, tmp_path):
        s = line_space(LINE_S, "S")
        save_mm_space(s, tmp_path / "a.json")
        t = load_mm_space(tmp_path / "a.json")
        np.testing.assert_array_equal(t.metric, s.metric)
        np.testing.assert_array_equal(t.points, s.points)

    def test_unwritable_path(self, tmp_path):
        s = MmSpace(id="one", weights=[1.0], metric=[[0.0]])
        with pytest.raises(LinGWIOError):
            save_mm_space(s, tmp_path / "missing" / "a.json")

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 8), st.integers(0, 2**31 - 1))
    def test_byte_identical_resave(self, n, seed):
        rng = np.random.default_rng(seed)
        w = rng.random(n) + 0.1
        s = MmSpace.from_points(rng.standard_normal((n, 3)), w / w.sum(), id=f"s{seed}")
        first = dumps_space(s)
        again = dumps_space(MmSpace(**{k: v for k, v in _reload(first).items()}))
        assert first == again

    def test_load_dir_sorted_by_id(self, tmp_path):
        for name, ident in [("z.json", "a"), ("a.json", "b")]:
            save_mm_space(MmSpace(id=ident, weights=[1.0], metric=[[0.0]]), tmp_path / name)
        assert [s.id for s in load_spaces_dir(tmp_path)] == ["a", "b"]


def _reload(text):
    obj = json.loads(text)
    obj.pop("n")
    return obj


class TestValidatePlan:
    def test_product_plan_passes(self):
        validate_plan(product_plan([0.2, 0.8], [0.5, 0.25, 0.25]))

    def test_scaled_identity_wrong_marginals(self):
        plan = TransportPlan(np.eye(3) / 3, [1 / 3] * 3, [0.5, 0.25, 0.25])
        with pytest.raises(MarginalError) as info:
            validate_plan(plan)
        assert info.value.violation == pytest.approx(0.5 - 1 / 3)

    def test_row_sums_to_reference_weights(self):
        sigma = np.array([0.25, 0.75])
        plan = np.array([[0.125, 0.125, 0.0], [0.0, 0.375, 0.375]])
        validate_plan(TransportPlan(plan, sigma, plan.sum(axis=0)))

    def test_negative_entry(self):
        plan = TransportPlan([[0.6, -0.1], [-0.1, 0.6]], [0.5, 0.5], [0.5, 0.5])
        with pytest.raises(MarginalError, match="negative"):
            validate_plan(plan)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(0.01, 1.0), min_size=1, max_size=7),
           st.lists(st.floats(0.01, 1.0), min_size=1, max_size=7))
    def test_product_always_feasible(self, a, b):
        a = np.array(a) / sum(a)
        b = np.array(b) / sum(b)
        validate_plan(product_plan(a, b))


class TestThreePlan:
    def test_marginals(self):
        rng = np.random.default_rng(3)
        t = rng.random((2, 3, 4))
        tp = ThreePlan(t, t.sum(axis=2), t.sum(axis=1))
        tp.validate()
        np.testing.assert_allclose(tp.p23(), t.sum(axis=0))

    def test_violation(self):
        t = np.ones((2, 2, 2)) / 8
        with pytest.raises(MarginalError):
            ThreePlan(t, np.eye(2) / 2, np.full((2, 2), 0.25)).validate()


class TestCsvFormats:
    def test_plan_round_trip(self, tmp_path):
        P = np.array([[0.5, 0.0], [0.1, 0.4]])
        save_plan_csv(P, tmp_path / "p.csv")
        assert (tmp_path / "p.csv").read_text().splitlines()[0] == "i,j,mass"
        np.testing.assert_array_equal(load_plan_csv(tmp_path / "p.csv", (2, 2)), P)

    def test_distance_round_trip(self, tmp_path):
        D = np.array([[0.0, 1.5, 2.0], [1.5, 0.0, 0.1], [2.0, 0.1, 0.0]])
        dm = DistanceMatrix(("a", "b", "c"), D)
        save_distance_csv(dm, tmp_path / "d.csv")
        save_labels_csv(dm.ids, ["x", "y", "x"], tmp_path / "l.csv")
        text = (tmp_path / "d.csv").read_text()
        assert text.splitlines()[0] == "id,a,b,c"
        back = load_distance_csv(tmp_path / "d.csv", tmp_path / "l.csv")
        np.testing.assert_array_equal(back.values, D)
        assert back.labels == ("x", "y", "x")
        assert load_labels_csv(tmp_path / "l.csv") == {"a": "x", "b": "y", "c": "x"}

    def test_distance_matrix_invariants(self):
        with pytest.raises(ValidationError, match="symmetry"):
            DistanceMatrix(("a", "b"), [[0, 1], [2, 0]])
        with pytest.raises(ValidationError, match="diagonal"):
            DistanceMatrix(("a", "b"), [[1, 1], [1, 0]])

    def test_bad_header(self, tmp_path):
        (tmp_path / "d.csv").write_text("name,a\na,0\n")
        with pytest.raises(ParseError):
            load_distance_csv(tmp_path / "d.csv")
