"""Worked two-feature examples with hand-derived attribution oracles.

The oracles are written out from the closed forms, not computed through the
engines, so they can serve as ground truth for engine tests.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .attribution import BSHAP, IG, canonical_method
from .core import FeatureSpace, ModelHandle, MonotoneSpec, Point, register
from .errors import OracleUnavailableError, SchemaError

Oracle = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class NamedExample:
    id: str
    model: ModelHandle
    domain: FeatureSpace
    spec: MonotoneSpec
    ig_oracle: Optional[Oracle] = None
    bshap_oracle: Optional[Oracle] = None
    description: str = ""

    @property
    def oracles(self) -> dict:
        return {IG: self.ig_oracle, BSHAP: self.bshap_oracle}

    def point(self, coords) -> Point:
        return Point(coords, self.domain)


def _zero_baseline_only(name: str, baseline: np.ndarray) -> None:
    if np.any(baseline != 0):
        raise OracleUnavailableError(f"{name} oracle is only available for the zero baseline")


# harmonic product  x1*x2 / (x1 + x2), extended by 0 at the origin

def _harmonic(X):
    s = X[:, 0] + X[:, 1]
    safe = np.where(s > 0, s, 1.0)
    return np.where(s > 0, X[:, 0] * X[:, 1] / safe, 0.0)


def _harmonic_grad(X):
    s = X[:, 0] + X[:, 1]
    safe = np.where(s > 0, s, 1.0) ** 2
    g = np.stack([X[:, 1] ** 2 / safe, X[:, 0] ** 2 / safe], axis=1)
    return np.where((s > 0)[:, None], g, 0.0)


def _harmonic_ig(x, base):
    _zero_baseline_only("harmonic_product IG", base)
    x1, x2 = x
    s = x1 + x2
    if s == 0:
        return np.zeros(2)
    return np.array([x1 * x2**2 / s**2, x1**2 * x2 / s**2])


def _harmonic_bshap(x, base):
    _zero_baseline_only("harmonic_product BShap", base)
    x1, x2 = x
    s = x1 + x2
    if s == 0:
        return np.zeros(2)
    half = x1 * x2 / (2 * s)
    return np.array([half, half])


# capped linear  min(0.2 x1 + 0.1 x2, 0.3)

_CAP_W = np.array([0.2, 0.1])
_CAP = 0.3


def _capped(X):
    return np.minimum(X @ _CAP_W, _CAP)


def _capped_grad(X):
    z = X @ _CAP_W
    # the kink itself takes the average of the one-sided slopes
    active = np.where(z < _CAP, 1.0, np.where(z > _CAP, 0.0, 0.5))
    return active[:, None] * _CAP_W


def _capped_ig(x, base):
    d = x - base
    z0, z1 = base @ _CAP_W, x @ _CAP_W
    if z1 == z0:
        frac = 1.0 if z0 < _CAP else (0.0 if z0 > _CAP else 0.5)
    else:
        t_star = min(max((_CAP - z0) / (z1 - z0), 0.0), 1.0)
        frac = t_star if z1 > z0 else 1.0 - t_star
    return d * _CAP_W * frac


def _capped_bshap(x, base):
    f = lambda a, b: min(0.2 * a + 0.1 * b, _CAP)
    (x1, x2), (b1, b2) = x, base
    s1 = 0.5 * (f(x1, b2) - f(b1, b2)) + 0.5 * (f(x1, x2) - f(b1, x2))
    s2 = 0.5 * (f(b1, x2) - f(b1, b2)) + 0.5 * (f(x1, x2) - f(x1, b2))
    return np.array([s1, s2])


# quadratic separable  4.5 x1 - x1^2 + 4 x2 - x2^2

def _quad_parts(v):
    v = np.asarray(v, dtype=float)
    return np.array([4.5 * v[..., 0] - v[..., 0] ** 2, 4.0 * v[..., 1] - v[..., 1] ** 2]).T


def _quadratic(X):
    return 4.5 * X[:, 0] - X[:, 0] ** 2 + 4.0 * X[:, 1] - X[:, 1] ** 2


def _quadratic_grad(X):
    return np.stack([4.5 - 2 * X[:, 0], 4.0 - 2 * X[:, 1]], axis=1)


def _quadratic_oracle(x, base):
    # additively separable: both methods give g_i(x_i) - g_i(x'_i)
    return _quad_parts(x) - _quad_parts(base)


# log diminishing  log(1 + 10 x1 + 9 x2)

_LOG_W = np.array([10.0, 9.0])


def _log(X):
    return np.log1p(X @ _LOG_W)


def _log_grad(X):
    return _LOG_W[None, :] / (1.0 + X @ _LOG_W)[:, None]


def _log_ig(x, base):
    d = x - base
    wd = _LOG_W @ d
    if wd == 0:
        return d * _LOG_W / (1.0 + _LOG_W @ base)
    # integral of w_i / (1 + w.x' + t w.d) over [0, 1]
    return d * _LOG_W / wd * (np.log1p(_LOG_W @ x) - np.log1p(_LOG_W @ base))


def _log_bshap(x, base):
    _zero_baseline_only("log_diminishing BShap", base)
    x1, x2 = x
    a, b, ab = np.log1p(10 * x1), np.log1p(9 * x2), np.log1p(10 * x1 + 9 * x2)
    return np.array([0.5 * a + 0.5 * (ab - b), 0.5 * b + 0.5 * (ab - a)])


def _build():
    def space(hi):
        return FeatureSpace([0.0, 0.0], [hi, hi], ["x1", "x2"])

    ex = []
    s = space(5.0)
    ex.append(
        NamedExample(
            "harmonic_product",
            ModelHandle("zoo:harmonic_product", s, _harmonic, _harmonic_grad),
            s,
            MonotoneSpec(individual=(0, 1)),
            _harmonic_ig,
            _harmonic_bshap,
            "x1*x2/(x1+x2); IG breaks demand monotonicity, BShap keeps it",
        )
    )
    s = space(4.0)
    ex.append(
        NamedExample(
            "capped_linear",
            ModelHandle("zoo:capped_linear", s, _capped, _capped_grad),
            s,
            MonotoneSpec(individual=(0, 1), strong_pairs=((0, 1),)),
            _capped_ig,
            _capped_bshap,
            "min(0.2*x1 + 0.1*x2, 0.3); kinked, x1 strongly dominates x2",
        )
    )
    s = space(2.0)
    ex.append(
        NamedExample(
            "quadratic_separable",
            ModelHandle("zoo:quadratic_separable", s, _quadratic, _quadratic_grad),
            s,
            MonotoneSpec(individual=(0, 1), weak_pairs=((0, 1),)),
            _quadratic_oracle,
            _quadratic_oracle,
            "4.5*x1 - x1^2 + 4*x2 - x2^2 on [0,2]^2; weak but not strong pairwise",
        )
    )
    s = space(5.0)
    ex.append(
        NamedExample(
            "log_diminishing",
            ModelHandle("zoo:log_diminishing", s, _log, _log_grad),
            s,
            MonotoneSpec(individual=(0, 1), strong_pairs=((0, 1),)),
            _log_ig,
            _log_bshap,
            "log(1 + 10*x1 + 9*x2); BShap breaks average strong pairwise monotonicity",
        )
    )
    return {e.id: e for e in ex}


EXAMPLES = _build()
for _e in EXAMPLES.values():
    register(_e.model, replace=True)


def example_ids() -> list:
    return list(EXAMPLES)


def get_example(example_id: str) -> NamedExample:
    key = example_id[4:] if example_id.startswith("zoo:") else example_id
    try:
        return EXAMPLES[key]
    except KeyError:
        raise SchemaError(f"unknown example {example_id!r}; available: {', '.join(EXAMPLES)}") from None


def oracle_attribution(example_id: str, method: str, explicand, baseline) -> np.ndarray:
    """Closed-form attribution of ``explicand`` against ``baseline``."""
    ex = get_example(example_id)
    oracle = ex.oracles[canonical_method(method)]
    x = np.asarray(getattr(explicand, "coords", explicand), dtype=float)
    b = np.asarray(getattr(baseline, "coords", baseline), dtype=float)
    ex.domain.check(x)
    ex.domain.check(b)
    if oracle is None:
        raise OracleUnavailableError(f"no {method} oracle for {ex.id}")
    return np.asarray(oracle(x, b), dtype=float)
