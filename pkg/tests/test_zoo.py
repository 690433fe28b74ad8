import numpy as np
import pytest

from monoattr.attribution import BSHAP, IG, IGConfig, attribute_batch
from monoattr.errors import BoundsError, OracleUnavailableError, SchemaError
from monoattr.zoo import example_ids, get_example, oracle_attribution


class TestCatalogue:
    def test_ids(self):
        assert set(example_ids()) == {"harmonic_product", "capped_linear", "quadratic_separable", "log_diminishing"}

    def test_prefix_accepted(self):
        assert get_example("zoo:capped_linear").id == "capped_linear"

    def test_unknown(self):
        with pytest.raises(SchemaError):
            get_example("zoo:nope")

    def test_models_registered_under_prefix(self):
        for eid in example_ids():
            assert get_example(eid).model.id == f"zoo:{eid}"


class TestOracles:
    def test_capped_linear_bshap(self):
        np.testing.assert_allclose(oracle_attribution("capped_linear", "bshap", [3, 1], [0, 0]), [0.25, 0.05])

    def test_capped_linear_ig_past_kink(self):
        # the cap binds at t = 3/7 on the segment to (3, 1)
        np.testing.assert_allclose(oracle_attribution("capped_linear", "ig", [3, 1], [0, 0]), [0.6 * 3 / 7, 0.1 * 3 / 7])

    def test_quadratic_any_baseline(self):
        np.testing.assert_allclose(oracle_attribution("quadratic_separable", "IG", [2, 2], [1, 0]), [1.5, 4.0])

    def test_zero_baseline_only(self):
        with pytest.raises(OracleUnavailableError):
            oracle_attribution("harmonic_product", "IG", [2, 2], [1, 0])
        with pytest.raises(OracleUnavailableError):
            oracle_attribution("log_diminishing", "BShap", [2, 2], [1, 0])

    def test_domain_checked(self):
        with pytest.raises(BoundsError):
            oracle_attribution("quadratic_separable", "IG", [3, 1], [0, 0])

    @pytest.mark.parametrize("eid", ["harmonic_product", "capped_linear", "quadratic_separable", "log_diminishing"])
    def test_oracles_complete(self, eid):
        ex = get_example(eid)
        rng = np.random.default_rng(3)
        base = np.zeros(2)
        for _ in range(50):
            x = ex.domain.lower + rng.random(2) * ex.domain.width
            f = ex.model(np.vstack([x, base]))
            for method in (IG, BSHAP):
                v = oracle_attribution(eid, method, x, base)
                assert v.sum() == pytest.approx(f[0] - f[1], abs=1e-12)

    @pytest.mark.parametrize("eid", ["harmonic_product", "quadratic_separable", "log_diminishing"])
    def test_engines_agree_smooth(self, eid):
        ex = get_example(eid)
        rng = np.random.default_rng(4)
        X = ex.domain.lower + rng.random((100, 2)) * ex.domain.width
        base = np.zeros(2)
        for method, tol in ((IG, 1e-8), (BSHAP, 1e-12)):
            A = attribute_batch(method, ex.model, X, base, IGConfig(2000))
            O = np.array([oracle_attribution(eid, method, x, base) for x in X])
            np.testing.assert_allclose(A, O, atol=tol)

    def test_capped_general_baseline(self):
        ex = get_example("capped_linear")
        rng = np.random.default_rng(8)
        for _ in range(30):
            x, b = rng.random(2) * 4, rng.random(2) * 4
            A = attribute_batch(BSHAP, ex.model, x[None], b)[0]
            np.testing.assert_allclose(A, oracle_attribution("capped_linear", BSHAP, x, b), atol=1e-12)
