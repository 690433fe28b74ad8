import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monoattr.attribution import (
    IGConfig,
    attribute,
    baseline_shapley,
    baseline_shapley_batch,
    canonical_method,
    completeness_gap,
    integrated_gradients,
    normalize,
    quadrature,
)
from monoattr.core import FeatureSpace, ModelHandle, Point
from monoattr.errors import CapacityError, ParameterError, PreconditionError
from monoattr.zoo import get_example


def _linear(coefs, lo=0.0, hi=5.0):
    coefs = np.asarray(coefs, dtype=float)
    m = len(coefs)
    space = FeatureSpace([lo] * m, [hi] * m)
    return ModelHandle("linear", space, lambda X: X @ coefs, lambda X: np.broadcast_to(coefs, X.shape).copy())


def _pts(example, x, b):
    ex = get_example(example)
    return ex.model, ex.point(x), ex.point(b)


class TestIGConfig:
    @pytest.mark.parametrize("steps", [19, 100_001, 2.5])
    def test_steps_range(self, steps):
        with pytest.raises(ParameterError):
            IGConfig(steps=steps)

    def test_unknown_rule(self):
        with pytest.raises(ParameterError):
            IGConfig(rule="simpson")

    @pytest.mark.parametrize("rule", ["gauss-legendre", "midpoint", "trapezoid", "riemann"])
    @pytest.mark.parametrize("n", [20, 300, 5000])
    def test_weights_sum_to_one(self, rule, n):
        t, w = quadrature(rule, n)
        assert t.size == n
        assert np.all((t >= 0) & (t <= 1))
        assert np.all(w > 0)
        assert w.sum() == pytest.approx(1.0, abs=1e-12)

    def test_midpoint_nodes(self):
        t, _ = quadrature("midpoint", 20)
        np.testing.assert_allclose(t, (np.arange(1, 21) - 0.5) / 20)


class TestIntegratedGradients:
    def test_quadratic_zero_baseline(self):
        r = integrated_gradients(*_pts("quadratic_separable", [2, 2], [0, 0]), IGConfig(300, "midpoint"))
        np.testing.assert_allclose(r.values, [5.0, 4.0], atol=1e-9)

    def test_quadratic_shifted_baseline(self):
        r = integrated_gradients(*_pts("quadratic_separable", [2, 2], [1, 0]), IGConfig(300, "midpoint"))
        np.testing.assert_allclose(r.values, [1.5, 4.0], atol=1e-9)

    def test_log_example(self):
        r = integrated_gradients(*_pts("log_diminishing", [4, 1], [0, 0]))
        np.testing.assert_allclose(r.values, [40 / 49 * math.log(50), 9 / 49 * math.log(50)], atol=1e-9)

    def test_degenerate_segment_is_exact_zero(self):
        m, x, _ = _pts("log_diminishing", [2, 3], [0, 0])
        r = integrated_gradients(m, x, x)
        np.testing.assert_array_equal(r.values, [0.0, 0.0])
        assert r.completeness_gap == 0.0

    def test_gap_recorded_not_corrected(self):
        m, x, b = _pts("log_diminishing", [4, 1], [0, 0])
        r = integrated_gradients(m, x, b, IGConfig(20, "riemann"))
        assert abs(r.completeness_gap) > 1e-3
        assert r.completeness_gap == pytest.approx(completeness_gap(r, m), abs=1e-15)

    def test_gap_shrinks_with_steps(self):
        m, x, b = _pts("log_diminishing", [4, 1], [0, 0])
        for rule in ("midpoint", "gauss-legendre"):
            coarse = abs(integrated_gradients(m, x, b, IGConfig(50, rule)).completeness_gap)
            fine = abs(integrated_gradients(m, x, b, IGConfig(2000, rule)).completeness_gap)
            assert fine < coarse or fine < 1e-13

    def test_rules_agree(self):
        m, x, b = _pts("log_diminishing", [3, 2], [0.5, 0.5])
        ref = integrated_gradients(m, x, b, IGConfig(2000)).values
        for rule in ("midpoint", "trapezoid", "riemann"):
            v = integrated_gradients(m, x, b, IGConfig(20_000, rule)).values
            np.testing.assert_allclose(v, ref, atol=1e-3)

    def test_composite_gauss_legendre(self):
        m, x, b = _pts("log_diminishing", [4, 1], [0, 0])
        r = integrated_gradients(m, x, b, IGConfig(5000))
        assert abs(r.completeness_gap) < 1e-11


class TestBaselineShapley:
    def test_harmonic_ones(self):
        r = baseline_shapley(*_pts("harmonic_product", [1, 1], [0, 0]))
        np.testing.assert_allclose(r.values, [0.25, 0.25], atol=1e-15)

    def test_log_example(self):
        r = baseline_shapley(*_pts("log_diminishing", [4, 1], [0, 0]))
        expected = [
            0.5 * math.log(41) + 0.5 * math.log(5),
            0.5 * math.log(10) + 0.5 * math.log(50 / 41),
        ]
        np.testing.assert_allclose(r.values, expected, atol=1e-12)

    def test_linear(self):
        m = _linear([2.0, 3.0])
        r = baseline_shapley(m, Point([1, 1], m.space), Point([0, 0], m.space))
        np.testing.assert_allclose(r.values, [2.0, 3.0], atol=1e-15)

    def test_capped_linear(self):
        r = baseline_shapley(*_pts("capped_linear", [3, 1], [0, 0]))
        np.testing.assert_allclose(r.values, [0.25, 0.05], atol=1e-15)

    def test_each_coalition_evaluated_once(self):
        seen = []
        space = FeatureSpace([0] * 4, [1] * 4)

        def fn(X):
            seen.append(len(X))
            return np.prod(X + 1, axis=1)

        m = ModelHandle("count", space, fn)
        baseline_shapley_batch(m, np.full((1, 4), 0.7), np.zeros(4))
        assert sum(seen) == 2**4

    def test_capacity(self):
        m = _linear(np.ones(21))
        with pytest.raises(CapacityError, match="Reduce"):
            baseline_shapley(m, Point(np.ones(21), m.space), Point(np.zeros(21), m.space))

    def test_matches_permutation_definition(self):
        # average marginal contribution over all orderings
        import itertools

        rng = np.random.default_rng(5)
        W = rng.normal(size=(4, 4))
        space = FeatureSpace([0] * 4, [1] * 4)
        m = ModelHandle("quad", space, lambda X: np.einsum("ni,ij,nj->n", X, W, X) + np.sin(X).sum(1))
        x, b = rng.random(4), rng.random(4) * 0.2
        phi = np.zeros(4)
        perms = list(itertools.permutations(range(4)))
        for perm in perms:
            cur = b.copy()
            prev = m(cur[None])[0]
            for i in perm:
                cur[i] = x[i]
                val = m(cur[None])[0]
                phi[i] += val - prev
                prev = val
        np.testing.assert_allclose(baseline_shapley_batch(m, x[None], b)[0], phi / len(perms), atol=1e-12)


class TestAxiomaticProperties:
    def _random_model(self, seed):
        rng = np.random.default_rng(seed)
        W = rng.normal(size=(3, 3))
        c = rng.normal(size=3)
        space = FeatureSpace([0] * 4, [2] * 4)
        # feature 3 is a dummy
        fn = lambda X: np.tanh(X[:, :3] @ W).sum(1) + X[:, :3] @ c  # noqa: E731

        def grad(X):
            T = 1 - np.tanh(X[:, :3] @ W) ** 2
            G = np.zeros_like(X)
            G[:, :3] = T @ W.T + c
            return G

        return ModelHandle("rand", space, fn, grad)

    @pytest.mark.parametrize("method", ["IG", "BShap"])
    def test_zero_at_baseline(self, method):
        m = self._random_model(0)
        p = Point([0.3, 1.2, 0.4, 1.9], m.space)
        np.testing.assert_array_equal(attribute(method, m, p, p).values, np.zeros(4))

    @pytest.mark.parametrize("method", ["IG", "BShap"])
    def test_dummy_feature(self, method):
        m = self._random_model(1)
        r = attribute(method, m, Point([1.5, 0.2, 1.1, 1.7], m.space), Point([0, 0, 0, 0.1], m.space))
        assert abs(r.values[3]) <= 1e-12

    def test_bshap_completeness(self):
        m = self._random_model(2)
        rng = np.random.default_rng(2)
        for _ in range(20):
            r = baseline_shapley(m, Point(2 * rng.random(4), m.space), Point(2 * rng.random(4), m.space))
            assert abs(r.completeness_gap) <= 1e-12

    def test_bshap_symmetry(self):
        space = FeatureSpace([0] * 3, [1] * 3)
        m = ModelHandle("sym", space, lambda X: X[:, 0] * X[:, 1] + np.exp(X[:, 0] + X[:, 1]) * X[:, 2])
        r = baseline_shapley(m, Point([0.6, 0.6, 0.9], space), Point([0.1, 0.1, 0.0], space))
        assert r.values[0] == r.values[1]

    @pytest.mark.parametrize("method", ["IG", "BShap"])
    def test_linearity(self, method):
        f, g = self._random_model(3), self._random_model(4)
        h = ModelHandle(
            "sum", f.space, lambda X: f(X) + g(X), lambda X: f.gradient_batch(X) + g.gradient_batch(X)
        )
        x, b = Point([1.0, 0.5, 1.5, 0.2], f.space), Point([0.1, 0.2, 0.0, 0.0], f.space)
        total = attribute(method, h, x, b).values
        parts = attribute(method, f, x, b).values + attribute(method, g, x, b).values
        np.testing.assert_allclose(total, parts, atol=1e-9)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(0.0, 2.0), min_size=4, max_size=4), st.lists(st.floats(0.0, 2.0), min_size=4, max_size=4))
    def test_ig_completeness_smooth(self, x, b):
        m = self._random_model(5)
        r = integrated_gradients(m, Point(x, m.space), Point(b, m.space))
        assert abs(r.completeness_gap) < 1e-8


class TestNormalize:
    def test_componentwise(self):
        m, x, b = _pts("quadratic_separable", [2, 2], [0, 0])
        r = integrated_gradients(m, x, b)
        np.testing.assert_allclose(normalize(r), [2.5, 2.0], atol=1e-12)

    def test_log_bshap(self):
        r = baseline_shapley(*_pts("log_diminishing", [4, 1], [0, 0]))
        np.testing.assert_allclose(normalize(r), [0.66538, 1.25052], atol=1e-4)

    def test_log_ig(self):
        r = integrated_gradients(*_pts("log_diminishing", [4, 1], [0, 0]))
        np.testing.assert_allclose(normalize(r), [0.79837, 0.71853], atol=1e-4)

    def test_undefined_flagged(self):
        r = baseline_shapley(*_pts("log_diminishing", [4, 0], [0, 0]))
        n = normalize(r)
        assert np.isnan(n[1]) and not np.isnan(n[0])
        with pytest.raises(PreconditionError):
            normalize(r, features=[1])


class TestMethodNames:
    @pytest.mark.parametrize("name,expected", [("ig", "IG"), ("IG", "IG"), ("bshap", "BShap"), ("BShap", "BShap")])
    def test_aliases(self, name, expected):
        assert canonical_method(name) == expected

    def test_unknown(self):
        with pytest.raises(ParameterError):
            canonical_method("lime")
