"""Integrated Gradients and Baseline Shapley attribution engines."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np
from scipy.special import roots_legendre

from .core import ModelHandle, Point, evaluate
from .errors import CapacityError, ParameterError, PreconditionError

IG = "IG"
BSHAP = "BShap"
METHODS = (IG, BSHAP)

RULES = ("gauss-legendre", "midpoint", "trapezoid", "riemann")
MIN_STEPS, MAX_STEPS = 20, 100_000
MAX_SHAPLEY_FEATURES = 20

# single global Gauss-Legendre rule up to this order, composite panels beyond
_GL_GLOBAL_MAX = 2048
_GL_PANEL = 32
# rows per model call when attributing many explicands at once
_CHUNK_ROWS = 262_144


def canonical_method(method: str) -> str:
    key = str(method).strip().lower()
    if key in ("ig", "integrated_gradients", "integrated-gradients"):
        return IG
    if key in ("bshap", "bs", "baseline_shapley", "baseline-shapley", "shapley"):
        return BSHAP
    raise ParameterError(f"unknown attribution method {method!r}; use one of {METHODS}")


@dataclass(frozen=True)
class IGConfig:
    """Quadrature settings for the straight-line path integral.

    ``steps`` is the number of gradient evaluations. ``rule`` picks the node
    placement: ``gauss-legendre`` (default), ``midpoint`` (t = (k - 1/2)/n),
    ``trapezoid`` (n equispaced nodes including both ends) or ``riemann``
    (t = k/n, the plain right-endpoint sum).
    """

    steps: int = 300
    rule: str = "gauss-legendre"

    def __post_init__(self):
        if isinstance(self.steps, bool) or int(self.steps) != self.steps:
            raise ParameterError(f"steps must be an integer, got {self.steps!r}")
        object.__setattr__(self, "steps", int(self.steps))
        if not MIN_STEPS <= self.steps <= MAX_STEPS:
            raise ParameterError(f"steps={self.steps} outside [{MIN_STEPS}, {MAX_STEPS}]")
        if self.rule not in RULES:
            raise ParameterError(f"unknown quadrature rule {self.rule!r}; use one of {RULES}")


@lru_cache(maxsize=64)
def _gl_unit(n: int):
    x, w = roots_legendre(n)
    return (x + 1.0) / 2.0, w / 2.0


@lru_cache(maxsize=32)
def quadrature(rule: str, n: int):
    """Nodes in [0, 1] and weights summing to 1 for ``n`` evaluations."""
    if rule == "midpoint":
        t = (np.arange(1, n + 1) - 0.5) / n
        w = np.full(n, 1.0 / n)
    elif rule == "riemann":
        t = np.arange(1, n + 1) / n
        w = np.full(n, 1.0 / n)
    elif rule == "trapezoid":
        t = np.linspace(0.0, 1.0, n)
        w = np.full(n, 1.0 / (n - 1))
        w[[0, -1]] *= 0.5
    elif rule == "gauss-legendre":
        if n <= _GL_GLOBAL_MAX:
            t, w = _gl_unit(n)
        else:
            panels = -(-n // _GL_PANEL)
            sizes = np.full(panels, n // panels)
            sizes[: n % panels] += 1
            ts, ws = [], []
            for p, k in enumerate(sizes):
                tk, wk = _gl_unit(int(k))
                ts.append((p + tk) / panels)
                ws.append(wk / panels)
            t, w = np.concatenate(ts), np.concatenate(ws)
    else:
        raise ParameterError(f"unknown quadrature rule {rule!r}")
    t, w = np.asarray(t, dtype=float), np.asarray(w, dtype=float)
    t.setflags(write=False)
    w.setflags(write=False)
    return t, w


@dataclass(frozen=True, eq=False)
class AttributionResult:
    method: str
    explicand: Point
    baseline: Point
    values: np.ndarray
    completeness_gap: float
    model_id: str = ""
    details: dict = field(default_factory=dict)

    def __getitem__(self, i):
        return float(self.values[i])

    def to_dict(self) -> dict:
        names = self.explicand.space.names
        return {
            "method": self.method,
            "model": self.model_id,
            "explicand": self.explicand.coords.tolist(),
            "baseline": self.baseline.coords.tolist(),
            "features": list(names),
            "values": self.values.tolist(),
            "normalized": [None if np.isnan(v) else float(v) for v in normalize(self)],
            "completeness_gap": self.completeness_gap,
            **self.details,
        }


def _check_pair(model: ModelHandle, explicand: Point, baseline: Point) -> None:
    if explicand.space != baseline.space:
        raise ParameterError("explicand and baseline belong to different feature spaces")
    if explicand.space.dim != model.arity:
        raise ParameterError(f"model {model.id!r} takes {model.arity} features, points have {explicand.space.dim}")
    model.space.check(explicand.coords)
    model.space.check(baseline.coords)


def _result(method, model, explicand, baseline, values, details) -> AttributionResult:
    values = np.asarray(values, dtype=float)
    values.setflags(write=False)
    gap = float(values.sum() - (evaluate(model, explicand) - evaluate(model, baseline)))
    return AttributionResult(method, explicand, baseline, values, gap, model.id, details)


def integrated_gradients_batch(model: ModelHandle, X, baseline, config: Optional[IGConfig] = None) -> np.ndarray:
    """IG attributions for each row of ``X`` against one baseline vector."""
    config = config or IGConfig()
    X = np.atleast_2d(np.asarray(X, dtype=float))
    base = np.asarray(baseline, dtype=float)
    t, w = quadrature(config.rule, config.steps)
    k, m = X.shape
    out = np.zeros((k, m))
    per = max(1, _CHUNK_ROWS // t.size)
    for start in range(0, k, per):
        D = X[start : start + per] - base
        P = base + t[None, :, None] * D[:, None, :]
        # convexity keeps P in the box; clip away rounding at the endpoints
        np.clip(P, model.space.lower, model.space.upper, out=P)
        G = model.gradient_batch(P.reshape(-1, m)).reshape(P.shape)
        out[start : start + per] = D * np.einsum("t,ktm->km", w, G)
    return out


def integrated_gradients(
    model: ModelHandle, explicand: Point, baseline: Point, config: Optional[IGConfig] = None
) -> AttributionResult:
    config = config or IGConfig()
    _check_pair(model, explicand, baseline)
    if explicand == baseline:
        values = np.zeros(model.arity)
    else:
        values = integrated_gradients_batch(model, explicand.coords[None], baseline.coords, config)[0]
    return _result(IG, model, explicand, baseline, values, {"steps": config.steps, "rule": config.rule})


@lru_cache(maxsize=32)
def _coalitions(m: int):
    masks = np.arange(1 << m, dtype=np.int64)
    bits = ((masks[:, None] >> np.arange(m)) & 1).astype(bool)
    size = bits.sum(1)
    fact = [math.factorial(s) for s in range(m + 1)]
    weight = np.array([fact[s] * fact[m - s - 1] / fact[m] for s in range(m)])
    bits.setflags(write=False)
    return masks, bits, size, weight


def _shapley_from_values(v: np.ndarray, m: int) -> np.ndarray:
    """Shapley values from coalition values ``v[..., mask]``."""
    masks, bits, size, weight = _coalitions(m)
    out = np.empty(v.shape[:-1] + (m,))
    for i in range(m):
        without = masks[~bits[:, i]]
        gain = v[..., without | (1 << i)] - v[..., without]
        out[..., i] = gain @ weight[size[without]]
    return out


def _check_capacity(m: int) -> None:
    if m > MAX_SHAPLEY_FEATURES:
        raise CapacityError(
            f"exact Baseline Shapley enumerates 2^m coalitions; m={m} exceeds {MAX_SHAPLEY_FEATURES}. "
            "Reduce or group features."
        )


def baseline_shapley_batch(model: ModelHandle, X, baseline) -> np.ndarray:
    """Exact Baseline Shapley values for each row of ``X``.

    Each coalition value f(x_S; x'_rest) is evaluated once per explicand.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    base = np.asarray(baseline, dtype=float)
    k, m = X.shape
    _check_capacity(m)
    _, bits, _, _ = _coalitions(m)
    n_coal = bits.shape[0]
    out = np.empty((k, m))
    per = max(1, _CHUNK_ROWS // n_coal)
    for start in range(0, k, per):
        Xc = X[start : start + per]
        P = np.where(bits[None, :, :], Xc[:, None, :], base[None, None, :])
        v = model(P.reshape(-1, m)).reshape(len(Xc), n_coal)
        out[start : start + per] = _shapley_from_values(v, m)
    return out


def baseline_shapley(model: ModelHandle, explicand: Point, baseline: Point) -> AttributionResult:
    _check_pair(model, explicand, baseline)
    _check_capacity(model.arity)
    if explicand == baseline:
        values = np.zeros(model.arity)
    else:
        values = baseline_shapley_batch(model, explicand.coords[None], baseline.coords)[0]
    return _result(BSHAP, model, explicand, baseline, values, {})


def attribute(
    method: str, model: ModelHandle, explicand: Point, baseline: Point, ig_config: Optional[IGConfig] = None
) -> AttributionResult:
    method = canonical_method(method)
    if method == IG:
        return integrated_gradients(model, explicand, baseline, ig_config)
    return baseline_shapley(model, explicand, baseline)


def attribute_batch(method: str, model: ModelHandle, X, baseline, ig_config: Optional[IGConfig] = None) -> np.ndarray:
    if canonical_method(method) == IG:
        return integrated_gradients_batch(model, X, baseline, ig_config)
    return baseline_shapley_batch(model, X, baseline)


def completeness_gap(result: AttributionResult, model: ModelHandle) -> float:
    """``sum(values) - (f(explicand) - f(baseline))``, recomputed from the model."""
    delta = evaluate(model, result.explicand) - evaluate(model, result.baseline)
    return float(result.values.sum() - delta)


def normalize(result: AttributionResult, features: Optional[Sequence[int]] = None) -> np.ndarray:
    """Attribution per unit of displacement, ``A_i / (x_i - x'_i)``.

    Coordinates without a strict increase over the baseline come back as NaN.
    Naming such a coordinate in ``features`` raises :class:`PreconditionError`.
    """
    return normalize_values(result.values, result.explicand.coords, result.baseline.coords, features)


def normalize_values(values, explicand, baseline, features=None) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    d = np.asarray(explicand, dtype=float) - np.asarray(baseline, dtype=float)
    if features is not None:
        bad = [int(i) for i in features if not d[int(i)] > 0]
        if bad:
            raise PreconditionError(
                f"normalization needs explicand strictly above baseline; fails for feature(s) {bad}"
            )
    out = np.full(values.shape, np.nan)
    ok = d > 0
    out[..., ok] = values[..., ok] / d[ok]
    return out
