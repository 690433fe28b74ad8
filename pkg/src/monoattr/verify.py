"""Sampling-based falsification of individual and pairwise monotonicity.

A clean run is reported as ``no-violation-found``; sampling can refute
monotonicity but never prove it.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import FeatureSpace, ModelHandle, MonotoneSpec, Point, evaluate
from .errors import ConfigurationError

INDIVIDUAL = "individual"
WEAK = "weak-pairwise"
STRONG = "strong-pairwise"

NO_VIOLATION = "no-violation-found"
VIOLATED = "violated"

DEFAULT_DELTA_FRACTIONS = (0.05, 0.25, 0.5)
MAX_GRID_PROBES = 500_000
REPORTED_WITNESSES = 25


@dataclass(frozen=True)
class ProbeConfig:
    """Sampling plan for the monotonicity checks.

    ``deltas`` are absolute perturbation sizes shared by all features. When
    omitted, each feature (or pair) gets ``delta_fractions`` of its range.
    ``grid_resolution > 1`` adds a lattice sweep on top of random samples.
    """

    samples: int = 10_000
    deltas: Optional[tuple] = None
    delta_fractions: tuple = DEFAULT_DELTA_FRACTIONS
    seed: int = 0
    tolerance: float = 1e-9
    grid_resolution: int = 0
    multi_coordinate: bool = False

    def __post_init__(self):
        if self.samples < 0:
            raise ConfigurationError("samples must be nonnegative")
        if self.deltas is not None:
            d = tuple(float(c) for c in self.deltas)
            if not d or any(not c > 0 for c in d):
                raise ConfigurationError("perturbation deltas must be strictly positive")
            object.__setattr__(self, "deltas", d)
        fr = tuple(float(c) for c in self.delta_fractions)
        if not fr or any(not 0 < c <= 1 for c in fr):
            raise ConfigurationError("delta fractions must lie in (0, 1]")
        object.__setattr__(self, "delta_fractions", fr)
        if self.tolerance < 0:
            raise ConfigurationError("tolerance must be nonnegative")

    def deltas_for(self, width: float) -> np.ndarray:
        """Perturbations that fit in a range of the given width."""
        if self.deltas is None:
            return np.array(self.delta_fractions) * width
        fit = np.array([c for c in self.deltas if c <= width])
        if fit.size == 0:
            raise ConfigurationError(
                f"feature range {width:g} is smaller than the smallest delta {min(self.deltas):g}"
            )
        return fit


@dataclass(frozen=True, eq=False)
class ViolationWitness:
    kind: str
    feature: object  # int for individual, (beta, gamma) for pairs
    x: Point
    x_star: Point
    f_x: float
    f_x_star: float
    margin: float
    sample: int
    delta: float

    def to_dict(self) -> dict:
        names = self.x.space.names
        feat = names[self.feature] if isinstance(self.feature, int) else [names[i] for i in self.feature]
        return {
            "kind": self.kind,
            "feature": feat,
            "sample": self.sample,
            "delta": self.delta,
            "x": self.x.coords.tolist(),
            "x_star": self.x_star.coords.tolist(),
            "f_x": self.f_x,
            "f_x_star": self.f_x_star,
            "margin": self.margin,
        }


@dataclass(frozen=True)
class MonotonicityReport:
    property: str
    checked: int
    witnesses: tuple

    @property
    def verdict(self) -> str:
        return VIOLATED if self.witnesses else NO_VIOLATION

    @property
    def violated(self) -> bool:
        return bool(self.witnesses)

    def to_dict(self, limit: int = REPORTED_WITNESSES) -> dict:
        worst = max((w.margin for w in self.witnesses), default=None)
        return {
            "property": self.property,
            "verdict": self.verdict,
            "checked": self.checked,
            "witness_count": len(self.witnesses),
            "worst_margin": worst,
            "witnesses": [w.to_dict() for w in self.witnesses[:limit]],
        }


def _lattice(space: FeatureSpace, r: int) -> np.ndarray:
    axes = [np.linspace(lo, hi, r) for lo, hi in zip(space.lower, space.upper)]
    total = r ** space.dim
    if total > MAX_GRID_PROBES:
        raise ConfigurationError(f"grid of {r}^{space.dim} points exceeds {MAX_GRID_PROBES}")
    return np.array(list(itertools.product(*axes)), dtype=float).reshape(-1, space.dim)


def _pair_range(space: FeatureSpace, b: int, g: int, weak: bool):
    if weak:
        lo = max(space.lower[b], space.lower[g])
        hi = min(space.upper[b], space.upper[g])
        if not hi > lo:
            raise ConfigurationError(f"features {b} and {g} share no common value range")
        return hi - lo
    return min(space.width[b], space.width[g])


def _plan_individual(space, spec, config, rng):
    feats = np.array(spec.individual, dtype=int)
    deltas = [config.deltas_for(space.width[i]) for i in feats]
    n = config.samples
    X = space.sample(rng, n)
    which = rng.integers(len(feats), size=n)
    u_c = rng.random(n)
    Xs = X.copy()
    labels, cs = [], np.empty(n)
    if config.multi_coordinate:
        # every monotone coordinate moves up by 0 or a ladder delta, at least one moves
        steps = np.zeros((n, len(feats)))
        for k, i in enumerate(feats):
            ladder = np.concatenate([[0.0], deltas[k]])
            steps[:, k] = ladder[rng.integers(len(ladder), size=n)]
        zero = ~np.any(steps > 0, axis=1)
        steps[zero, which[zero]] = np.array([deltas[k][0] for k in which[zero]])
        for k, i in enumerate(feats):
            room = space.width[i] - steps[:, k]
            X[:, i] = space.lower[i] + rng.random(n) * room
            Xs[:, i] = X[:, i] + steps[:, k]
        cs = steps.max(axis=1)
        labels = [tuple(int(i) for i in feats[steps[j] > 0]) for j in range(n)]
        return X, Xs, labels, cs
    for j in range(n):
        k = which[j]
        i = int(feats[k])
        c = deltas[k][int(u_c[j] * len(deltas[k]))]
        X[j, i] = space.lower[i] + (X[j, i] - space.lower[i]) * (space.width[i] - c) / space.width[i]
        Xs[j] = X[j]
        Xs[j, i] = X[j, i] + c
        labels.append(i)
        cs[j] = c
    if config.grid_resolution > 1:
        G = _lattice(space, config.grid_resolution)
        gx, gs, gl, gc = [], [], [], []
        for k, i in enumerate(feats):
            for c in deltas[k]:
                base = G.copy()
                base[:, i] = np.minimum(base[:, i], space.upper[i] - c)
                up = base.copy()
                up[:, i] += c
                gx.append(base)
                gs.append(up)
                gl += [int(i)] * len(G)
                gc.append(np.full(len(G), c))
        X = np.vstack([X] + gx)
        Xs = np.vstack([Xs] + gs)
        labels += gl
        cs = np.concatenate([cs] + gc)
    return X, Xs, labels, cs


def _plan_pairwise(space, pairs, config, rng, weak: bool):
    pairs = [tuple(p) for p in pairs]
    deltas = [config.deltas_for(_pair_range(space, b, g, weak)) for b, g in pairs]
    n = config.samples
    X = space.sample(rng, n)
    which = rng.integers(len(pairs), size=n)
    u_c = rng.random(n)
    u_v = rng.random((n, 2))
    Xs = X.copy()
    labels, cs = [], np.empty(n)

    def place(row_x, row_s, b, g, c, ub, ug):
        if weak:
            lo = max(space.lower[b], space.lower[g])
            hi = min(space.upper[b], space.upper[g])
            v = lo + ub * (hi - c - lo)
            xb, xg = v, v
        else:
            xb = space.lower[b] + ub * (space.width[b] - c)
            xg = space.lower[g] + ug * (space.width[g] - c)
        # x raises the dominated feature, x_star the dominant one
        row_x[b], row_x[g] = xb, xg + c
        row_s[b], row_s[g] = xb + c, xg

    for j in range(n):
        k = which[j]
        b, g = pairs[k]
        c = deltas[k][int(u_c[j] * len(deltas[k]))]
        Xs[j] = X[j]
        place(X[j], Xs[j], b, g, c, u_v[j, 0], u_v[j, 1])
        labels.append((b, g))
        cs[j] = c
    if config.grid_resolution > 1:
        G = _lattice(space, config.grid_resolution)
        r = config.grid_resolution
        levels = np.linspace(0.0, 1.0, r)
        gx, gs, gl, gc = [], [], [], []
        for k, (b, g) in enumerate(pairs):
            for c in deltas[k]:
                for row in G:
                    for ub in levels:
                        for ug in levels if not weak else levels[:1]:
                            a, s = row.copy(), row.copy()
                            place(a, s, b, g, c, ub, ug)
                            gx.append(a)
                            gs.append(s)
                            gl.append((b, g))
                            gc.append(c)
                if len(gx) > MAX_GRID_PROBES:
                    raise ConfigurationError(f"pairwise grid sweep exceeds {MAX_GRID_PROBES} probes")
        if gx:
            X = np.vstack([X, np.array(gx)])
            Xs = np.vstack([Xs, np.array(gs)])
            labels += gl
            cs = np.concatenate([cs, np.array(gc)])
    return X, Xs, labels, cs


def _collect(kind, model, X, Xs, labels, cs, tolerance) -> MonotonicityReport:
    space = model.space
    X = np.clip(X, space.lower, space.upper)
    Xs = np.clip(Xs, space.lower, space.upper)
    fx, fs = model(X), model(Xs)
    margin = fx - fs
    witnesses = []
    for j in np.flatnonzero(margin > tolerance):
        x, xs = Point(X[j], space), Point(Xs[j], space)
        # re-evaluate through the single-point path before reporting
        a, b = evaluate(model, x), evaluate(model, xs)
        if a - b > tolerance:
            witnesses.append(ViolationWitness(kind, labels[j], x, xs, a, b, a - b, int(j), float(cs[j])))
    return MonotonicityReport(kind, len(X), tuple(witnesses))


def check_individual(model: ModelHandle, spec: MonotoneSpec, config: Optional[ProbeConfig] = None) -> MonotonicityReport:
    """Probe f(x + c e_i) >= f(x) for every monotone feature i."""
    config = config or ProbeConfig()
    if not spec.individual:
        raise ConfigurationError("no individually monotone features to check")
    rng = np.random.default_rng(config.seed)
    X, Xs, labels, cs = _plan_individual(model.space, spec, config, rng)
    return _collect(INDIVIDUAL, model, X, Xs, labels, cs, config.tolerance)


def check_weak_pairwise(model: ModelHandle, spec: MonotoneSpec, config: Optional[ProbeConfig] = None) -> MonotonicityReport:
    """Probe f(v, v + c) <= f(v + c, v) on the pair's equal-value diagonal."""
    config = config or ProbeConfig()
    if not spec.weak_pairs:
        raise ConfigurationError("no weak pairs to check")
    rng = np.random.default_rng(config.seed)
    X, Xs, labels, cs = _plan_pairwise(model.space, spec.weak_pairs, config, rng, weak=True)
    return _collect(WEAK, model, X, Xs, labels, cs, config.tolerance)


def check_strong_pairwise(model: ModelHandle, spec: MonotoneSpec, config: Optional[ProbeConfig] = None) -> MonotonicityReport:
    """Probe f(x_b, x_g + c) <= f(x_b + c, x_g) anywhere in the box."""
    config = config or ProbeConfig()
    if not spec.strong_pairs:
        raise ConfigurationError("no strong pairs to check")
    rng = np.random.default_rng(config.seed)
    X, Xs, labels, cs = _plan_pairwise(model.space, spec.strong_pairs, config, rng, weak=False)
    return _collect(STRONG, model, X, Xs, labels, cs, config.tolerance)


def check_all(model: ModelHandle, spec: MonotoneSpec, config: Optional[ProbeConfig] = None) -> list:
    """Run whichever checks the spec has content for."""
    out = []
    if spec.individual:
        out.append(check_individual(model, spec, config))
    if spec.weak_pairs:
        out.append(check_weak_pairwise(model, spec, config))
    if spec.strong_pairs:
        out.append(check_strong_pairwise(model, spec, config))
    return out
