"""Additive models whose parameterization enforces monotonicity.

A group subnetwork scores its members through a weighted sum passed into a
nondecreasing link::

    s(z) = c0 * z + sum_j c_j * softplus(z - k_j),   z = sum_i w_i * u_i

The weights are suffix sums of squared raw parameters, so
``w_1 >= w_2 >= ... >= w_k >= 0`` for any raw vector, and the link
coefficients are squares. Every member is then individually monotone and each
earlier member strongly dominates each later one, since
``df/dx_b = s'(z) w_b / scale >= s'(z) w_g / scale = df/dx_g``.
Members share one input scale so the ordering survives standardization.

Remaining features go through one-hidden-layer, two-unit tanh networks that
are unconstrained unless flagged monotone.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.special import expit
from scipy.stats import rankdata

from .core import FeatureSpace, ModelHandle, MonotoneSpec, Point, register
from .errors import SchemaError, TrainingError, UndefinedMetricError

MODEL_FORMAT = "monoattr.additive-model"
MODEL_VERSION = 1

DEFAULT_ARCHITECTURE = {
    "groups": [["x1", "x2", "x3"]],
    "monotone_singles": [],
    "knots": 2,
    "hidden": 2,
}


def softplus(x):
    return np.logaddexp(0.0, x)


@dataclass
class GroupSubnet:
    members: tuple
    raw: np.ndarray
    link_raw: np.ndarray  # [c0, c_1, ..., c_K] before squaring
    knots: np.ndarray
    shift: np.ndarray
    scale: float
    weights: np.ndarray = None

    def __post_init__(self):
        self.members = tuple(int(i) for i in self.members)
        self.raw = np.asarray(self.raw, dtype=float)
        self.link_raw = np.asarray(self.link_raw, dtype=float)
        self.knots = np.asarray(self.knots, dtype=float)
        self.shift = np.asarray(self.shift, dtype=float)
        self.scale = float(self.scale)
        if self.weights is None:
            self.sync()
        else:
            self.weights = np.asarray(self.weights, dtype=float)

    def sync(self):
        """Recompute the ordered weights from the raw parameters."""
        self.weights = np.ascontiguousarray(np.cumsum((self.raw**2)[::-1])[::-1])

    @property
    def link_coef(self) -> np.ndarray:
        return self.link_raw**2

    def inputs(self, X):
        return (X[:, list(self.members)] - self.shift) / self.scale

    def pre_activation(self, X):
        return self.inputs(X) @ self.weights

    def value(self, X):
        z = self.pre_activation(X)
        c = self.link_coef
        return c[0] * z + softplus(z[:, None] - self.knots) @ c[1:]

    def slope(self, z):
        c = self.link_coef
        return c[0] + expit(z[:, None] - self.knots) @ c[1:]


@dataclass
class SingleSubnet:
    feature: int
    a: np.ndarray
    b: np.ndarray
    d: np.ndarray
    shift: float
    scale: float
    monotone: bool = False

    def __post_init__(self):
        self.feature = int(self.feature)
        self.a, self.b, self.d = (np.asarray(v, dtype=float) for v in (self.a, self.b, self.d))
        self.shift, self.scale = float(self.shift), float(self.scale)

    def effective(self):
        if self.monotone:
            return self.a**2, self.b**2
        return self.a, self.b

    def value(self, X):
        A, B = self.effective()
        u = (X[:, self.feature] - self.shift) / self.scale
        return np.tanh(u[:, None] * B + self.d) @ A


class AdditiveMonotoneModel:
    """Sum of group subnetworks, single-feature subnetworks and an intercept."""

    def __init__(self, space: FeatureSpace, groups, singles, intercept=0.0, model_id="additive"):
        self.space = space
        self.groups = list(groups)
        self.singles = list(singles)
        self.intercept = float(intercept)
        self.id = model_id
        self._check_partition()

    def _check_partition(self):
        used = [i for g in self.groups for i in g.members] + [s.feature for s in self.singles]
        if len(set(used)) != len(used):
            dup = sorted({self.space.names[i] for i in used if used.count(i) > 1})
            raise SchemaError(f"features assigned to more than one subnetwork: {dup}")
        missing = sorted(set(range(self.space.dim)) - set(used))
        if missing:
            raise SchemaError(f"features not covered by any subnetwork: {[self.space.names[i] for i in missing]}")

    # evaluation

    def decision_function(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.full(len(X), self.intercept)
        for g in self.groups:
            out += g.value(X)
        for s in self.singles:
            out += s.value(X)
        return out

    def gradient(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        G = np.zeros_like(X)
        for g in self.groups:
            slope = g.slope(g.pre_activation(X))
            G[:, list(g.members)] += slope[:, None] * g.weights / g.scale
        for s in self.singles:
            A, B = s.effective()
            u = (X[:, s.feature] - s.shift) / s.scale
            sech2 = 1.0 - np.tanh(u[:, None] * B + s.d) ** 2
            G[:, s.feature] += sech2 @ (A * B) / s.scale
        return G

    def predict_proba(self, X) -> np.ndarray:
        return expit(self.decision_function(X))

    def handle(self, register_it: bool = True) -> ModelHandle:
        h = ModelHandle(self.id, self.space, self.decision_function, self.gradient, meta={"kind": "additive"})
        return register(h, replace=True) if register_it else h

    def monotone_spec(self) -> MonotoneSpec:
        individual = [i for g in self.groups for i in g.members]
        individual += [s.feature for s in self.singles if s.monotone]
        strong = [(g.members[i], g.members[j]) for g in self.groups for i in range(len(g.members)) for j in range(i + 1, len(g.members))]
        return MonotoneSpec(individual=individual, strong_pairs=strong)

    # parameters, flattened in a fixed order

    def _blocks(self):
        for g in self.groups:
            yield g, "raw"
            yield g, "link_raw"
        for s in self.singles:
            yield s, "a"
            yield s, "b"
            yield s, "d"

    def get_params(self) -> np.ndarray:
        parts = [getattr(o, k) for o, k in self._blocks()]
        return np.concatenate(parts + [np.array([self.intercept])])

    def set_params(self, theta: np.ndarray) -> None:
        pos = 0
        for o, k in self._blocks():
            n = getattr(o, k).size
            setattr(o, k, np.array(theta[pos : pos + n], dtype=float))
            pos += n
        self.intercept = float(theta[pos])
        for g in self.groups:
            g.sync()

    def param_gradient(self, X, upstream) -> np.ndarray:
        """Gradient of ``sum(upstream * f(X))`` with respect to the raw parameters."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        parts = []
        for g in self.groups:
            U = g.inputs(X)
            z = U @ g.weights
            sp = softplus(z[:, None] - g.knots)
            slope = g.slope(z)
            d_w = (upstream * slope) @ U
            # w_i sums raw_j^2 over j >= i, so raw_j reaches every w_i with i <= j
            parts.append(2.0 * g.raw * np.cumsum(d_w))
            d_c = np.concatenate([[upstream @ z], upstream @ sp])
            parts.append(2.0 * g.link_raw * d_c)
        for s in self.singles:
            A, B = s.effective()
            u = (X[:, s.feature] - s.shift) / s.scale
            th = np.tanh(u[:, None] * B + s.d)
            sech2 = 1.0 - th**2
            dA = upstream @ th
            dB = (upstream * u) @ (sech2 * A)
            dd = upstream @ (sech2 * A)
            if s.monotone:
                dA, dB = 2.0 * s.a * dA, 2.0 * s.b * dB
            parts += [dA, dB, dd]
        parts.append(np.array([upstream.sum()]))
        return np.concatenate(parts)

    def copy(self) -> "AdditiveMonotoneModel":
        return copy.deepcopy(self)

    # serialization

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "version": MODEL_VERSION,
            "id": self.id,
            "space": self.space.to_dict(),
            "intercept": self.intercept,
            "groups": [
                {
                    "members": [self.space.names[i] for i in g.members],
                    "raw": g.raw.tolist(),
                    "weights": g.weights.tolist(),
                    "link_raw": g.link_raw.tolist(),
                    "knots": g.knots.tolist(),
                    "shift": g.shift.tolist(),
                    "scale": g.scale,
                }
                for g in self.groups
            ],
            "singles": [
                {
                    "feature": self.space.names[s.feature],
                    "a": s.a.tolist(),
                    "b": s.b.tolist(),
                    "d": s.d.tolist(),
                    "shift": s.shift,
                    "scale": s.scale,
                    "monotone": s.monotone,
                }
                for s in self.singles
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AdditiveMonotoneModel":
        if d.get("format") != MODEL_FORMAT:
            raise SchemaError(f"not a {MODEL_FORMAT} document")
        if d.get("version") != MODEL_VERSION:
            raise SchemaError(f"unsupported model document version {d.get('version')!r}")
        space = FeatureSpace.from_dict(d["space"])
        groups = [
            GroupSubnet(
                [space.index(m) for m in g["members"]],
                g["raw"],
                g["link_raw"],
                g["knots"],
                g["shift"],
                g["scale"],
                g.get("weights"),
            )
            for g in d["groups"]
        ]
        singles = [
            SingleSubnet(space.index(s["feature"]), s["a"], s["b"], s["d"], s["shift"], s["scale"], s.get("monotone", False))
            for s in d["singles"]
        ]
        return cls(space, groups, singles, d["intercept"], d.get("id", "additive"))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path) -> "AdditiveMonotoneModel":
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as e:
            raise SchemaError(f"{path}: not valid JSON ({e})") from None
        return cls.from_dict(doc)


def _knots_from(z: np.ndarray, k: int) -> np.ndarray:
    if k == 0:
        return np.zeros(0)
    return np.quantile(z, np.arange(1, k + 1) / (k + 1))


def build_model(architecture: Optional[dict], space: FeatureSpace, seed: int = 0, model_id: str = "additive") -> AdditiveMonotoneModel:
    """Instantiate an architecture description with seeded random parameters.

    ``architecture`` keys: ``groups`` (lists of features, highest priority
    first), ``singles`` (defaults to every feature not in a group),
    ``monotone_singles``, ``knots`` (link hinge count) and ``hidden`` (units
    per single-feature network).
    """
    arch = dict(DEFAULT_ARCHITECTURE if architecture is None else architecture)
    unknown = set(arch) - {"groups", "singles", "monotone_singles", "knots", "hidden"}
    if unknown:
        raise SchemaError(f"unknown architecture keys: {sorted(unknown)}")
    rng = np.random.default_rng(seed)
    groups_idx = [[space.index(f) for f in grp] for grp in arch.get("groups", [])]
    if any(len(g) == 0 for g in groups_idx):
        raise SchemaError("empty group in architecture")
    grouped = [i for g in groups_idx for i in g]
    if "singles" in arch:
        singles_idx = [space.index(f) for f in arch["singles"]]
    else:
        singles_idx = [i for i in range(space.dim) if i not in grouped]
    mono = {space.index(f) for f in arch.get("monotone_singles", [])}
    if not mono <= set(singles_idx):
        raise SchemaError("monotone_singles must name single-feature subnetworks")
    n_knots = int(arch.get("knots", 2))
    hidden = int(arch.get("hidden", 2))

    probe = space.sample(np.random.default_rng([seed, 1]), 1024)
    groups = []
    for members in groups_idx:
        raw = 0.7 + 0.2 * rng.standard_normal(len(members))
        link_raw = 0.8 + 0.2 * rng.standard_normal(n_knots + 1)
        shift = space.lower[members]
        scale = float(np.max(space.width[members]))
        g = GroupSubnet(members, raw, link_raw, np.zeros(n_knots), shift, scale)
        g.knots = _knots_from(g.pre_activation(probe), n_knots)
        groups.append(g)
    singles = []
    for i in singles_idx:
        singles.append(
            SingleSubnet(
                i,
                0.3 * rng.standard_normal(hidden) + (0.5 if i in mono else 0.0),
                rng.standard_normal(hidden) + (0.5 if i in mono else 0.0),
                0.5 * rng.standard_normal(hidden),
                float(space.lower[i] + space.width[i] / 2),
                float(space.width[i] / 2),
                i in mono,
            )
        )
    return AdditiveMonotoneModel(space, groups, singles, 0.0, model_id)


def random_model(seed: int, dim: Optional[int] = None, model_id: Optional[str] = None) -> AdditiveMonotoneModel:
    """A randomly shaped constructively monotone model on a box around 0.

    Used to exercise the axiom preservation results on many different functions.
    """
    rng = np.random.default_rng([seed, 7])
    m = int(dim or rng.integers(2, 6))
    lower = -rng.uniform(0.0, 1.0, m)
    upper = lower + rng.uniform(1.0, 3.0, m)
    space = FeatureSpace(lower, upper)
    order = rng.permutation(m)
    k = int(rng.integers(2, m + 1))
    groups = [order[:k].tolist()]
    rest = order[k:].tolist()
    if len(rest) >= 2 and rng.random() < 0.5:
        groups.append(rest[:2])
        rest = rest[2:]
    mono = [i for i in rest if rng.random() < 0.5]
    arch = {
        "groups": groups,
        "singles": rest,
        "monotone_singles": mono,
        "knots": int(rng.integers(0, 4)),
        "hidden": 2,
    }
    model = build_model(arch, space, seed=seed, model_id=model_id or f"random-{seed}")
    # spread parameters so the link and the singles are visibly nonlinear
    theta = model.get_params()
    model.set_params(theta * rng.uniform(0.5, 2.5, theta.size) * rng.choice([-1.0, 1.0], theta.size))
    for g in model.groups:
        g.knots = g.knots + rng.normal(0.0, 0.5, g.knots.size)
    return model


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 40
    batch_size: int = 256
    learning_rate: float = 0.3
    seed: int = 0
    refit: bool = True

    def __post_init__(self):
        if self.epochs < 0 or self.batch_size <= 0 or not self.learning_rate > 0:
            raise TrainingError("epochs must be >= 0, batch_size and learning_rate positive")


def log_loss(f: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean(np.logaddexp(0.0, f) - y * f))


def _refit(model: AdditiveMonotoneModel, X: np.ndarray) -> None:
    # initial pass: standardize single inputs and place hinges at data quantiles
    for s in model.singles:
        col = X[:, s.feature]
        sd = float(col.std())
        s.shift = float(col.mean())
        s.scale = sd if sd > 0 else float(model.space.width[s.feature] / 2)
    for g in model.groups:
        g.knots = _knots_from(g.pre_activation(X), g.knots.size)


def train(model: AdditiveMonotoneModel, X, y, config: Optional[TrainConfig] = None):
    """Mini-batch gradient descent on log-loss; returns ``(model, history)``.

    The input model is not modified. ``history[0]`` is the loss before the
    first update and each later entry the full-data loss after an epoch.
    """
    config = config or TrainConfig()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.space.dim or len(X) != len(y):
        raise SchemaError(f"training data shape {X.shape} does not match a {model.space.dim}-feature model")
    model = model.copy()
    if config.epochs and config.refit:
        _refit(model, X)
        model.intercept = float(np.log(max(y.mean(), 1e-6) / max(1 - y.mean(), 1e-6))) if 0 < y.mean() < 1 else 0.0
    rng = np.random.default_rng(config.seed)
    history = [log_loss(model.decision_function(X), y)]
    theta = model.get_params()
    for epoch in range(config.epochs):
        order = rng.permutation(len(X))
        for start in range(0, len(X), config.batch_size):
            idx = order[start : start + config.batch_size]
            Xb, yb = X[idx], y[idx]
            resid = (expit(model.decision_function(Xb)) - yb) / len(idx)
            theta = theta - config.learning_rate * model.param_gradient(Xb, resid)
            model.set_params(theta)
        loss = log_loss(model.decision_function(X), y)
        if not math.isfinite(loss):
            raise TrainingError(f"loss diverged at epoch {epoch + 1}; lower the learning rate")
        history.append(loss)
    return model, history


def predict(model: AdditiveMonotoneModel, x: Point) -> float:
    model.space.check(x.coords)
    return float(model.predict_proba(x.coords[None])[0])


def auc(scores, labels) -> float:
    """Area under the ROC curve via midranks; ties count one half."""
    s = np.asarray(scores, dtype=float).ravel()
    y = np.asarray(labels).ravel()
    if s.shape != y.shape:
        raise ValueError("scores and labels differ in length")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0/1")
    pos = y == 1
    n1, n0 = int(pos.sum()), int((~pos).sum())
    if n1 == 0 or n0 == 0:
        raise UndefinedMetricError("AUC needs both classes present")
    ranks = rankdata(s)
    return float((ranks[pos].sum() - n1 * (n1 + 1) / 2) / (n1 * n0))


@dataclass(frozen=True)
class ConstraintReport:
    certified: bool
    issues: tuple
    monotone_features: tuple
    strong_pairs: tuple

    def to_dict(self, space: Optional[FeatureSpace] = None) -> dict:
        nm = (lambda i: space.names[i]) if space is not None else (lambda i: i)
        return {
            "certified": self.certified,
            "issues": list(self.issues),
            "monotone_features": [nm(i) for i in self.monotone_features],
            "strong_pairs": [[nm(a), nm(b)] for a, b in self.strong_pairs],
        }


def certify_constraints(model: AdditiveMonotoneModel) -> ConstraintReport:
    """Check the structural conditions behind the monotonicity guarantees.

    When every check passes, each group member is individually monotone and
    ``df/dx_b >= df/dx_g`` for every ordered pair inside a group.
    """
    issues = []
    names = model.space.names
    for gi, g in enumerate(model.groups):
        label = f"group {gi} ({', '.join(names[i] for i in g.members)})"
        w = g.weights
        if not np.all(np.isfinite(w)):
            issues.append(f"{label}: non-finite weights")
        if np.any(w < 0):
            issues.append(f"{label}: negative weight")
        bad = np.flatnonzero(np.diff(w) > 0)
        for k in bad:
            issues.append(
                f"{label}: weight of {names[g.members[k + 1]]} ({w[k + 1]:.6g}) exceeds "
                f"weight of {names[g.members[k]]} ({w[k]:.6g})"
            )
        if np.any(g.link_coef < 0) or not np.all(np.isfinite(g.link_coef)):
            issues.append(f"{label}: link coefficient not nonnegative")
        if not g.scale > 0:
            issues.append(f"{label}: input scale must be positive")
    for s in model.singles:
        if s.monotone:
            A, B = s.effective()
            if np.any(A < 0) or np.any(B < 0) or not s.scale > 0:
                issues.append(f"single {names[s.feature]}: monotone flag with negative slope parameters")
    spec = model.monotone_spec()
    return ConstraintReport(not issues, tuple(issues), spec.individual, spec.strong_pairs)
