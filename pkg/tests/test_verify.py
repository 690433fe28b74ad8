import numpy as np
import pytest

from monoattr.core import FeatureSpace, ModelHandle, MonotoneSpec, evaluate
from monoattr.errors import ConfigurationError
from monoattr.verify import (
    NO_VIOLATION,
    VIOLATED,
    ProbeConfig,
    check_all,
    check_individual,
    check_strong_pairwise,
    check_weak_pairwise,
)
from monoattr.zoo import get_example


def _model(fn, lo=0.0, hi=5.0, m=2):
    return ModelHandle("probe", FeatureSpace([lo] * m, [hi] * m), fn)


FAST = ProbeConfig(samples=2000, seed=1)


class TestProbeConfig:
    def test_deltas_positive(self):
        with pytest.raises(ConfigurationError):
            ProbeConfig(deltas=(0.1, 0.0))

    def test_fractions_scale_with_range(self):
        np.testing.assert_allclose(ProbeConfig().deltas_for(4.0), [0.2, 1.0, 2.0])

    def test_absolute_delta_too_large(self):
        m = _model(lambda X: X.sum(1), hi=0.05)
        with pytest.raises(ConfigurationError, match="smaller than the smallest delta"):
            check_individual(m, MonotoneSpec(individual=(0,)), ProbeConfig(deltas=(0.1,)))


class TestIndividual:
    def test_log_clean(self):
        ex = get_example("log_diminishing")
        r = check_individual(ex.model, ex.spec, FAST)
        assert r.verdict == NO_VIOLATION
        assert r.checked == FAST.samples

    def test_decreasing_feature(self):
        m = _model(lambda X: X[:, 0] - X[:, 1])
        r = check_individual(m, MonotoneSpec(individual=(1,)), FAST)
        assert r.verdict == VIOLATED
        w = r.witnesses[0]
        assert w.margin > 0
        assert w.feature == 1
        # the two points differ only in the probed coordinate, by the recorded delta
        diff = w.x_star.coords - w.x.coords
        assert diff[0] == 0
        assert diff[1] == pytest.approx(w.delta)
        assert w.f_x == evaluate(m, w.x)

    def test_witness_inside_box(self):
        m = _model(lambda X: -X[:, 0])
        r = check_individual(m, MonotoneSpec(individual=(0,)), FAST)
        for w in r.witnesses:
            assert np.all(w.x_star.coords <= m.space.upper)

    def test_empty_spec(self):
        with pytest.raises(ConfigurationError):
            check_individual(_model(lambda X: X[:, 0]), MonotoneSpec(), FAST)

    def test_grid_finds_local_dip(self):
        # a narrow dip the lattice hits at its center
        m = _model(lambda X: X[:, 0] - 3.0 * np.exp(-((X[:, 0] - 2.5) ** 2) / 0.01), m=1)
        r = check_individual(m, MonotoneSpec(individual=(0,)), ProbeConfig(samples=0, grid_resolution=11, seed=0))
        assert r.violated

    def test_multi_coordinate(self):
        ex = get_example("log_diminishing")
        r = check_individual(ex.model, ex.spec, ProbeConfig(samples=2000, multi_coordinate=True))
        assert not r.violated

    def test_deterministic(self):
        m = _model(lambda X: np.sin(3 * X[:, 0]) + X[:, 1])
        a = check_individual(m, MonotoneSpec(individual=(0, 1)), FAST)
        b = check_individual(m, MonotoneSpec(individual=(0, 1)), FAST)
        assert a.to_dict() == b.to_dict()


class TestWeakPairwise:
    def test_quadratic_clean(self):
        ex = get_example("quadratic_separable")
        assert check_weak_pairwise(ex.model, ex.spec, FAST).verdict == NO_VIOLATION

    def test_wrong_priority(self):
        m = _model(lambda X: 4 * X[:, 0] + 4.5 * X[:, 1])
        spec = MonotoneSpec(individual=(0, 1), weak_pairs=((0, 1),))
        r = check_weak_pairwise(m, spec, FAST)
        assert r.violated
        w = r.witnesses[0]
        # base point sits on the diagonal
        assert w.x.coords[0] + w.delta == pytest.approx(w.x.coords[1])
        assert w.x_star.coords[0] == pytest.approx(w.x.coords[1])

    def test_log_clean(self):
        ex = get_example("log_diminishing")
        spec = MonotoneSpec(individual=(0, 1), weak_pairs=((0, 1),))
        assert not check_weak_pairwise(ex.model, spec, FAST).violated

    def test_disjoint_ranges(self):
        m = ModelHandle("d", FeatureSpace([0, 2], [1, 3]), lambda X: X.sum(1))
        with pytest.raises(ConfigurationError):
            check_weak_pairwise(m, MonotoneSpec(individual=(0, 1), weak_pairs=((0, 1),)), FAST)


class TestStrongPairwise:
    @pytest.mark.parametrize("eid", ["log_diminishing", "capped_linear"])
    def test_clean(self, eid):
        ex = get_example(eid)
        assert not check_strong_pairwise(ex.model, ex.spec, FAST).violated

    def test_quadratic_not_strong(self):
        ex = get_example("quadratic_separable")
        spec = MonotoneSpec(individual=(0, 1), strong_pairs=((0, 1),))
        assert check_strong_pairwise(ex.model, spec, FAST).violated


class TestCheckAll:
    def test_runs_declared_checks(self):
        ex = get_example("capped_linear")
        kinds = [r.property for r in check_all(ex.model, ex.spec, FAST)]
        assert kinds == ["individual", "strong-pairwise"]

    def test_report_dict(self):
        m = _model(lambda X: -X[:, 0])
        d = check_individual(m, MonotoneSpec(individual=(0,)), FAST).to_dict(limit=3)
        assert d["verdict"] == VIOLATED
        assert len(d["witnesses"]) == 3
        assert d["witness_count"] > 3
