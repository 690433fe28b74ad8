"""Feature spaces, points, model handles and monotonicity specifications.

Everything downstream works on batches: a model's evaluator maps an ``(n, m)``
array of points to an ``(n,)`` array of values. Single-point helpers
(:func:`evaluate`, :func:`gradient`) wrap the batch path.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import BoundsError, ParameterError, SchemaError

BatchFn = Callable[[np.ndarray], np.ndarray]

DEFAULT_FD_STEP = 1e-5


def _frozen(values, dtype=float) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class FeatureSpace:
    """Axis-aligned box ``[lower, upper]`` with one name per coordinate."""

    lower: np.ndarray
    upper: np.ndarray
    names: tuple

    def __init__(self, lower, upper, names=None):
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))
        if lower.ndim != 1 or lower.shape != upper.shape or lower.size == 0:
            raise ParameterError("lower and upper must be 1-d vectors of equal, nonzero length")
        if not np.all(np.isfinite(lower)) or not np.all(np.isfinite(upper)):
            raise ParameterError("bounds must be finite")
        bad = np.flatnonzero(~(lower < upper))
        if bad.size:
            i = int(bad[0])
            raise ParameterError(f"lower[{i}]={lower[i]} is not below upper[{i}]={upper[i]}")
        if names is None:
            names = [f"x{i + 1}" for i in range(lower.size)]
        names = tuple(str(n) for n in names)
        if len(names) != lower.size:
            raise ParameterError(f"expected {lower.size} names, got {len(names)}")
        if any(not n for n in names) or len(set(names)) != len(names):
            raise ParameterError("feature names must be unique and non-empty")
        object.__setattr__(self, "lower", _frozen(lower))
        object.__setattr__(self, "upper", _frozen(upper))
        object.__setattr__(self, "names", names)

    @property
    def dim(self) -> int:
        return int(self.lower.size)

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def __eq__(self, other):
        if not isinstance(other, FeatureSpace):
            return NotImplemented
        return (
            self.names == other.names
            and np.array_equal(self.lower, other.lower)
            and np.array_equal(self.upper, other.upper)
        )

    def __hash__(self):
        return hash((self.names, self.lower.tobytes(), self.upper.tobytes()))

    def __repr__(self):
        return f"FeatureSpace(dim={self.dim}, names={list(self.names)})"

    def index(self, key) -> int:
        """Resolve a feature name or a 0-based integer index."""
        if isinstance(key, (int, np.integer)) and not isinstance(key, bool):
            if not 0 <= int(key) < self.dim:
                raise SchemaError(f"feature index {key} out of range 0..{self.dim - 1}")
            return int(key)
        try:
            return self.names.index(str(key))
        except ValueError:
            raise SchemaError(f"unknown feature {key!r}; known: {', '.join(self.names)}") from None

    def check(self, coords: np.ndarray) -> None:
        """Raise :class:`BoundsError` naming the first offending coordinate."""
        coords = np.asarray(coords, dtype=float)
        if coords.shape[-1] != self.dim:
            raise BoundsError(f"expected {self.dim} coordinates, got {coords.shape[-1]}")
        bad = ~((coords >= self.lower) & (coords <= self.upper))
        if np.any(bad):
            flat = np.argwhere(bad)[0]
            i = int(flat[-1])
            value = float(coords[tuple(flat)])
            raise BoundsError(
                f"coordinate {i} ({self.names[i]}) = {value!r} outside "
                f"[{float(self.lower[i])!r}, {float(self.upper[i])!r}]",
                index=i,
                name=self.names[i],
                value=value,
            )

    def point(self, coords) -> "Point":
        return Point(coords, self)

    def zero_or_lower(self) -> "Point":
        """The origin when it lies in the box, otherwise the lower corner."""
        return Point(np.clip(np.zeros(self.dim), self.lower, self.upper), self)

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return self.lower + rng.random((n, self.dim)) * self.width

    def to_dict(self) -> dict:
        return {"names": list(self.names), "lower": self.lower.tolist(), "upper": self.upper.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSpace":
        return cls(d["lower"], d["upper"], d.get("names"))


@dataclass(frozen=True, eq=False)
class Point:
    """Coordinates validated against a :class:`FeatureSpace` at construction."""

    coords: np.ndarray
    space: FeatureSpace

    def __init__(self, coords, space: FeatureSpace):
        arr = np.atleast_1d(np.asarray(coords, dtype=float))
        if arr.ndim != 1:
            raise BoundsError("a point must be a 1-d coordinate vector")
        space.check(arr)
        object.__setattr__(self, "coords", _frozen(arr))
        object.__setattr__(self, "space", space)

    def __eq__(self, other):
        if not isinstance(other, Point):
            return NotImplemented
        return self.space == other.space and np.array_equal(self.coords, other.coords)

    def __hash__(self):
        return hash((self.space, self.coords.tobytes()))

    def __len__(self):
        return self.coords.size

    def __getitem__(self, i):
        return float(self.coords[i])

    def __repr__(self):
        return f"Point({self.coords.tolist()})"

    def replace(self, index: int, value: float) -> "Point":
        c = self.coords.copy()
        c[index] = value
        return Point(c, self.space)


@dataclass(frozen=True, eq=False)
class ModelHandle:
    """A deterministic scalar model bound to a feature space.

    ``fn`` maps an ``(n, m)`` array to ``(n,)`` values. ``grad_fn``, when
    given, maps ``(n, m)`` to ``(n, m)`` partial derivatives; otherwise
    gradients come from central differences with step
    ``fd_step * max(1, |x_i|)``.
    """

    id: str
    space: FeatureSpace
    fn: BatchFn
    grad_fn: Optional[BatchFn] = None
    fd_step: float = DEFAULT_FD_STEP
    meta: dict = field(default_factory=dict)

    @property
    def arity(self) -> int:
        return self.space.dim

    @property
    def gradient_mode(self) -> str:
        return "analytic" if self.grad_fn is not None else "central-difference"

    def __call__(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        single = X.ndim == 1
        out = np.asarray(self.fn(np.atleast_2d(X)), dtype=float).reshape(-1)
        return out[0] if single else out

    def gradient_batch(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.grad_fn is not None:
            return np.asarray(self.grad_fn(X), dtype=float).reshape(X.shape)
        return central_difference(self.fn, X, self.space, self.fd_step)

    def with_fd_gradient(self) -> "ModelHandle":
        """Same model with the analytic gradient dropped."""
        return ModelHandle(self.id, self.space, self.fn, None, self.fd_step, dict(self.meta))


def central_difference(fn: BatchFn, X: np.ndarray, space: FeatureSpace, step: float = DEFAULT_FD_STEP) -> np.ndarray:
    """Symmetric difference quotient for every coordinate of every row.

    Where the symmetric stencil would leave the box, falls back to the
    second-order one-sided stencil; if even that does not fit, the step is
    shrunk to the available room.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n, m = X.shape
    grad = np.empty((n, m))
    for i in range(m):
        x = X[:, i]
        h = step * np.maximum(1.0, np.abs(x))
        room_up = space.upper[i] - x
        room_dn = x - space.lower[i]
        sym = (room_up >= h) & (room_dn >= h)
        fwd = ~sym & (room_up >= 2 * h)
        bwd = ~sym & ~fwd & (room_dn >= 2 * h)
        # box narrower than the stencil: secant across the whole width
        shrink = ~(sym | fwd | bwd)

        g = np.zeros(n)
        if np.any(sym | shrink):
            idx = np.flatnonzero(sym | shrink)
            up = np.where(sym[idx], h[idx], room_up[idx])
            dn = np.where(sym[idx], h[idx], room_dn[idx])
            Xp, Xm = X[idx].copy(), X[idx].copy()
            Xp[:, i] += up
            Xm[:, i] -= dn
            g[idx] = (fn(Xp) - fn(Xm)) / (up + dn)
        for mask, sign in ((fwd, 1.0), (bwd, -1.0)):
            if np.any(mask):
                idx = np.flatnonzero(mask)
                hh = h[idx]
                X0 = X[idx]
                X1, X2 = X0.copy(), X0.copy()
                X1[:, i] += sign * hh
                X2[:, i] += 2 * sign * hh
                g[idx] = sign * (-3 * fn(X0) + 4 * fn(X1) - fn(X2)) / (2 * hh)
        grad[:, i] = g
    return grad


def _check_binding(model: ModelHandle, x: Point) -> None:
    if x.space.dim != model.arity:
        raise BoundsError(f"model {model.id!r} takes {model.arity} features, point has {x.space.dim}")
    model.space.check(x.coords)


def evaluate(model: ModelHandle, x: Point) -> float:
    _check_binding(model, x)
    return float(model(x.coords[None, :])[0])


def gradient(model: ModelHandle, x: Point) -> np.ndarray:
    _check_binding(model, x)
    return model.gradient_batch(x.coords[None, :])[0]


def path_point(baseline: Point, explicand: Point, t: float) -> Point:
    """``baseline + t * (explicand - baseline)``."""
    if baseline.space != explicand.space:
        raise ParameterError("baseline and explicand belong to different feature spaces")
    if not 0.0 <= t <= 1.0:
        raise ParameterError(f"path parameter t={t} outside [0, 1]")
    space = baseline.space
    c = baseline.coords + t * (explicand.coords - baseline.coords)
    return Point(np.clip(c, space.lower, space.upper), space)


def _as_pair(p) -> tuple:
    if len(p) != 2:
        raise SchemaError(f"a pair needs exactly two features, got {p!r}")
    return (p[0], p[1])


@dataclass(frozen=True)
class MonotoneSpec:
    """Monotone features and priority pairs, as 0-based indices.

    A pair ``(b, g)`` states that feature ``b`` dominates feature ``g``.
    """

    individual: tuple = ()
    weak_pairs: tuple = ()
    strong_pairs: tuple = ()

    def __post_init__(self):
        ind = tuple(int(i) for i in self.individual)
        weak = tuple((int(a), int(b)) for a, b in map(_as_pair, self.weak_pairs))
        strong = tuple((int(a), int(b)) for a, b in map(_as_pair, self.strong_pairs))
        if len(set(ind)) != len(ind):
            raise SchemaError("duplicate index in individual set")
        for kind, pairs in (("weak", weak), ("strong", strong)):
            if len(set(pairs)) != len(pairs):
                raise SchemaError(f"duplicate {kind} pair")
            for b, g in pairs:
                if b == g:
                    raise SchemaError(f"{kind} pair ({b}, {g}) pairs a feature with itself")
                missing = [i for i in (b, g) if i not in ind]
                if missing:
                    raise SchemaError(
                        f"{kind} pair ({b}, {g}): feature(s) {missing} must also be individually monotone"
                    )
        object.__setattr__(self, "individual", ind)
        object.__setattr__(self, "weak_pairs", weak)
        object.__setattr__(self, "strong_pairs", strong)

    @property
    def all_pairs(self) -> tuple:
        """Pairs to audit under the weak premise (strong implies weak)."""
        seen = list(self.weak_pairs)
        seen += [p for p in self.strong_pairs if p not in seen]
        return tuple(seen)

    def validate_for(self, space: FeatureSpace) -> None:
        for i in self.individual:
            space.index(i)

    def to_dict(self, space: Optional[FeatureSpace] = None) -> dict:
        name = (lambda i: space.names[i]) if space is not None else (lambda i: i)
        return {
            "individual": [name(i) for i in self.individual],
            "weak_pairs": [[name(a), name(b)] for a, b in self.weak_pairs],
            "strong_pairs": [[name(a), name(b)] for a, b in self.strong_pairs],
        }

    @classmethod
    def from_dict(cls, d: dict, space: FeatureSpace) -> "MonotoneSpec":
        """Accepts feature names or 0-based indices."""
        unknown = set(d) - {"individual", "weak_pairs", "strong_pairs"}
        if unknown:
            raise SchemaError(f"unknown monotone-spec keys: {sorted(unknown)}")
        ix = space.index
        return cls(
            individual=[ix(i) for i in d.get("individual", [])],
            weak_pairs=[(ix(a), ix(b)) for a, b in map(_as_pair, d.get("weak_pairs", []))],
            strong_pairs=[(ix(a), ix(b)) for a, b in map(_as_pair, d.get("strong_pairs", []))],
        )


_REGISTRY: dict = {}


def register(model: ModelHandle, replace: bool = False) -> ModelHandle:
    if model.id in _REGISTRY and not replace and _REGISTRY[model.id] is not model:
        raise SchemaError(f"model id {model.id!r} already registered")
    _REGISTRY[model.id] = model
    return model


def get_model(model_id: str) -> ModelHandle:
    try:
        return _REGISTRY[model_id]
    except KeyError:
        raise SchemaError(
            f"no registered model {model_id!r}; available: {', '.join(sorted(_REGISTRY)) or '(none)'}"
        ) from None


def registered_ids() -> list:
    return sorted(_REGISTRY)


def as_points(space: FeatureSpace, rows: Iterable[Sequence[float]]) -> list:
    return [Point(r, space) for r in rows]
