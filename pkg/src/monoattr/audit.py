"""Audit whether an attribution method preserves the monotonicity axioms.

Four axioms are checked for a model, a fixed baseline and a monotone spec:

* ``DIM``  raising a monotone feature never lowers its own attribution;
* ``AIM``  a monotone feature's attribution is nonnegative whenever the
  explicand dominates the baseline;
* ``AWPM`` with the pair at equal values, the dominant feature's attribution
  per unit of displacement is at least the dominated one's;
* ``ASPM`` the same comparison at arbitrary values of the pair.

Each check returns an :class:`AxiomVerdict`. Violations carry
:class:`Certificate` objects holding enough to recompute the failing
inequality from scratch.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .attribution import IG, METHODS, IGConfig, attribute_batch, canonical_method, normalize_values
from .core import ModelHandle, MonotoneSpec, Point
from .errors import ConfigurationError, PreconditionError
from .verify import DEFAULT_DELTA_FRACTIONS, NO_VIOLATION, VIOLATED, ProbeConfig, check_all

DIM, AIM, AWPM, ASPM = "DIM", "AIM", "AWPM", "ASPM"
AXIOMS = (DIM, AIM, AWPM, ASPM)
NOT_APPLICABLE = "not-applicable"


@dataclass(frozen=True)
class AxiomCheckConfig:
    samples: int = 5000
    deltas: Optional[tuple] = None
    delta_fractions: tuple = DEFAULT_DELTA_FRACTIONS
    seed: int = 0
    tolerance: float = 1e-7
    ig_config: IGConfig = field(default_factory=IGConfig)

    def __post_init__(self):
        if self.samples < 0:
            raise ConfigurationError("samples must be nonnegative")
        if self.tolerance < 0:
            raise ConfigurationError("tolerance must be nonnegative")
        # validates deltas the same way the monotonicity probes do
        self.probe_config()

    def probe_config(self, samples: Optional[int] = None) -> ProbeConfig:
        return ProbeConfig(
            samples=self.samples if samples is None else samples,
            deltas=self.deltas,
            delta_fractions=self.delta_fractions,
            seed=self.seed,
        )


@dataclass(frozen=True, eq=False)
class Certificate:
    """A concrete failure of an axiom inequality.

    ``margin`` is positive and measures by how much the inequality fails:
    for DIM ``A_a(x) - A_a(x*)``, for AIM ``-A_a(x)``, for the pairwise
    axioms ``N_g(x) - N_b(x)`` with N the displacement-normalized values.
    """

    axiom: str
    method: str
    feature: object
    x: Point
    attributions: tuple
    margin: float
    sample: int
    x_star: Optional[Point] = None
    attributions_star: Optional[tuple] = None
    normalized: Optional[tuple] = None

    def to_dict(self) -> dict:
        names = self.x.space.names
        feat = names[self.feature] if isinstance(self.feature, int) else [names[i] for i in self.feature]
        d = {
            "axiom": self.axiom,
            "method": self.method,
            "feature": feat,
            "sample": self.sample,
            "x": self.x.coords.tolist(),
            "attributions": list(self.attributions),
            "margin": self.margin,
        }
        if self.x_star is not None:
            d["x_star"] = self.x_star.coords.tolist()
            d["attributions_star"] = list(self.attributions_star)
        if self.normalized is not None:
            d["normalized"] = list(self.normalized)
        return d

    def recheck(self, model: ModelHandle, baseline: Point, ig_config: Optional[IGConfig] = None) -> float:
        """Recompute the margin from the stored points alone."""
        base = baseline.coords
        A = attribute_batch(self.method, model, self.x.coords[None], base, ig_config)[0]
        if self.axiom == DIM:
            As = attribute_batch(self.method, model, self.x_star.coords[None], base, ig_config)[0]
            return float(A[self.feature] - As[self.feature])
        if self.axiom == AIM:
            return float(-A[self.feature])
        b, g = self.feature
        N = normalize_values(A, self.x.coords, base, features=(b, g))
        return float(N[g] - N[b])


@dataclass(frozen=True)
class AxiomVerdict:
    axiom: str
    method: str
    model_id: str
    baseline: Point
    checked: int
    certificates: tuple
    skipped: int = 0
    max_completeness_gap: Optional[float] = None

    @property
    def verdict(self) -> str:
        return VIOLATED if self.certificates else NO_VIOLATION

    @property
    def violated(self) -> bool:
        return bool(self.certificates)

    def worst(self) -> Optional[Certificate]:
        return max(self.certificates, key=lambda c: c.margin, default=None)

    def to_dict(self, limit: int = 25) -> dict:
        worst = self.worst()
        return {
            "axiom": self.axiom,
            "method": self.method,
            "model": self.model_id,
            "baseline": self.baseline.coords.tolist(),
            "verdict": self.verdict,
            "checked": self.checked,
            "skipped": self.skipped,
            "certificate_count": len(self.certificates),
            "worst_margin": None if worst is None else worst.margin,
            "max_completeness_gap": self.max_completeness_gap,
            "certificates": [c.to_dict() for c in self.certificates[:limit]],
        }


def _gap(method, model, X, A, baseline) -> Optional[float]:
    if method != IG or len(X) == 0:
        return None
    delta = model(X) - model(baseline.coords[None])[0]
    return float(np.max(np.abs(A.sum(axis=1) - delta)))


def _rng(config: AxiomCheckConfig, salt: str) -> np.random.Generator:
    # each axiom draws an independent stream from the same seed
    return np.random.default_rng([config.seed, AXIOMS.index(salt)])


def _individual_features(spec: MonotoneSpec) -> np.ndarray:
    if not spec.individual:
        raise ConfigurationError("monotone spec lists no individually monotone features")
    return np.array(spec.individual, dtype=int)


def check_dim(
    method: str,
    model: ModelHandle,
    baseline: Point,
    spec: MonotoneSpec,
    config: Optional[AxiomCheckConfig] = None,
    probes: Optional[Iterable] = None,
) -> AxiomVerdict:
    """Demand individual monotonicity: ``A_a(x + c e_a) >= A_a(x)``.

    ``probes`` replaces random sampling with explicit ``(x, feature, c)``
    triples. The caller is responsible for the model being monotone in the
    probed features.
    """
    method = canonical_method(method)
    config = config or AxiomCheckConfig()
    space = model.space
    pc = config.probe_config()
    if probes is not None:
        rows = [(np.asarray(getattr(x, "coords", x), dtype=float), space.index(i), float(c)) for x, i, c in probes]
        X = np.array([r[0] for r in rows]).reshape(-1, space.dim)
        feats = np.array([r[1] for r in rows], dtype=int)
        cs = np.array([r[2] for r in rows])
        if np.any(cs <= 0):
            raise ConfigurationError("DIM probes need a strictly positive increase")
        space.check(X)
    else:
        alpha = _individual_features(spec)
        rng = _rng(config, DIM)
        n = config.samples
        X = space.sample(rng, n)
        feats = alpha[rng.integers(len(alpha), size=n)]
        ladders = {int(i): pc.deltas_for(space.width[i]) for i in alpha}
        pick = rng.random(n)
        cs = np.array([ladders[int(i)][int(u * len(ladders[int(i)]))] for i, u in zip(feats, pick)])
        lo, w = space.lower[feats], space.width[feats]
        rows = np.arange(n)
        # x_a uniform on [a, b - c] so that x_a + c stays in range
        X[rows, feats] = lo + (X[rows, feats] - lo) * (w - cs) / w
    Xs = X.copy()
    rows = np.arange(len(X))
    Xs[rows, feats] = X[rows, feats] + cs
    space.check(Xs)

    A = attribute_batch(method, model, X, baseline.coords, config.ig_config)
    As = attribute_batch(method, model, Xs, baseline.coords, config.ig_config)
    margin = A[rows, feats] - As[rows, feats]
    certs = tuple(
        Certificate(
            DIM,
            method,
            int(feats[j]),
            Point(X[j], space),
            tuple(A[j].tolist()),
            float(margin[j]),
            int(j),
            Point(Xs[j], space),
            tuple(As[j].tolist()),
        )
        for j in np.flatnonzero(margin > config.tolerance)
    )
    gap = _gap(method, model, np.vstack([X, Xs]), np.vstack([A, As]), baseline)
    return AxiomVerdict(DIM, method, model.id, baseline, len(X), certs, 0, gap)


def check_aim(
    method: str,
    model: ModelHandle,
    baseline: Point,
    spec: MonotoneSpec,
    config: Optional[AxiomCheckConfig] = None,
    explicands: Optional[Sequence] = None,
) -> AxiomVerdict:
    """Average individual monotonicity: ``A_a(x) >= 0`` whenever ``x >= x'``."""
    method = canonical_method(method)
    config = config or AxiomCheckConfig()
    space = model.space
    alpha = _individual_features(spec)
    base = baseline.coords
    if explicands is not None:
        X = np.array([getattr(x, "coords", x) for x in explicands], dtype=float).reshape(-1, space.dim)
        space.check(X)
        keep = np.all(X >= base, axis=1)
        skipped = int((~keep).sum())
        X = X[keep]
    else:
        if np.all(base[alpha] >= space.upper[alpha]):
            raise ConfigurationError("baseline sits at the upper corner of every monotone feature; dominance box is empty")
        rng = _rng(config, AIM)
        X = base + rng.random((config.samples, space.dim)) * (space.upper - base)
        skipped = 0
    A = attribute_batch(method, model, X, base, config.ig_config) if len(X) else np.zeros((0, space.dim))
    certs = []
    for j in range(len(X)):
        for i in alpha:
            if -A[j, i] > config.tolerance:
                certs.append(
                    Certificate(AIM, method, int(i), Point(X[j], space), tuple(A[j].tolist()), float(-A[j, i]), j)
                )
    gap = _gap(method, model, X, A, baseline)
    return AxiomVerdict(AIM, method, model.id, baseline, len(X) * len(alpha), tuple(certs), skipped, gap)


def _pairwise(axiom, method, model, baseline, pairs, config, explicands):
    method = canonical_method(method)
    config = config or AxiomCheckConfig()
    space = model.space
    base = baseline.coords
    pairs = [tuple(int(i) for i in p) for p in pairs]
    if not pairs:
        raise ConfigurationError(f"{axiom} needs at least one feature pair")
    weak = axiom == AWPM
    if explicands is not None:
        X = np.array([getattr(x, "coords", x) for x in explicands], dtype=float).reshape(-1, space.dim)
        space.check(X)
        jobs = [(j, p) for j in range(len(X)) for p in pairs]
    else:
        rng = _rng(config, axiom)
        n = config.samples
        X = space.sample(rng, n)
        which = rng.integers(len(pairs), size=n)
        if weak:
            u = rng.random(n)
            for j in range(n):
                b, g = pairs[which[j]]
                lo = max(space.lower[b], space.lower[g])
                hi = min(space.upper[b], space.upper[g])
                if not hi > lo:
                    raise ConfigurationError(f"features {b} and {g} share no common value range")
                X[j, b] = X[j, g] = lo + u[j] * (hi - lo)
        jobs = [(j, pairs[which[j]]) for j in range(n)]

    valid = []
    skipped = 0
    for j, (b, g) in jobs:
        x = X[j]
        if not (x[b] > base[b] and x[g] > base[g]) or (weak and x[b] != x[g]):
            skipped += 1
            continue
        valid.append((j, b, g))
    rows = sorted({j for j, _, _ in valid})
    A = np.zeros((len(X), space.dim))
    if rows:
        A[rows] = attribute_batch(method, model, X[rows], base, config.ig_config)
    N = normalize_values(A, X, base)
    certs = []
    for j, b, g in valid:
        margin = N[j, g] - N[j, b]
        if margin > config.tolerance:
            certs.append(
                Certificate(
                    axiom,
                    method,
                    (b, g),
                    Point(X[j], space),
                    tuple(A[j].tolist()),
                    float(margin),
                    int(j),
                    normalized=(float(N[j, b]), float(N[j, g])),
                )
            )
    gap = _gap(method, model, X[rows], A[rows], baseline) if rows else None
    return AxiomVerdict(axiom, method, model.id, baseline, len(valid), tuple(certs), skipped, gap)


def check_awpm(method, model, baseline, spec, config=None, explicands=None) -> AxiomVerdict:
    """Average weak pairwise monotonicity on the pair's equal-value diagonal.

    Covers weak pairs and strong pairs (strong implies weak). Samples where a
    pair coordinate does not strictly exceed the baseline are skipped and
    counted; so are explicit explicands whose pair values differ.
    """
    return _pairwise(AWPM, method, model, baseline, spec.all_pairs, config, explicands)


def check_aspm(method, model, baseline, spec, config=None, explicands=None) -> AxiomVerdict:
    """Average strong pairwise monotonicity at arbitrary pair values."""
    return _pairwise(ASPM, method, model, baseline, spec.strong_pairs, config, explicands)


CHECKS = {DIM: check_dim, AIM: check_aim, AWPM: check_awpm, ASPM: check_aspm}


def dim_certificate_from_aim(
    cert: Certificate, model: ModelHandle, baseline: Point, ig_config: Optional[IGConfig] = None, rungs: int = 16
) -> Optional[Certificate]:
    """Turn an AIM failure into a DIM failure along the offending feature.

    Walks the feature from its baseline value up to the witness value in
    ``rungs`` equal steps and returns the first step at which the feature's
    own attribution drops. With the feature at its baseline value, both IG
    and BShap give it zero attribution, so a negative end value forces such a
    step to exist.
    """
    if cert.axiom != AIM:
        raise PreconditionError("expected an AIM certificate")
    i = cert.feature
    space = model.space
    lo, hi = baseline.coords[i], cert.x.coords[i]
    ladder = np.repeat(cert.x.coords[None], rungs + 1, axis=0)
    ladder[:, i] = np.linspace(lo, hi, rungs + 1)
    A = attribute_batch(cert.method, model, ladder, baseline.coords, ig_config)
    for k in range(rungs):
        drop = A[k, i] - A[k + 1, i]
        if drop > 0:
            return Certificate(
                DIM,
                cert.method,
                i,
                Point(ladder[k], space),
                tuple(A[k].tolist()),
                float(drop),
                cert.sample,
                Point(ladder[k + 1], space),
                tuple(A[k + 1].tolist()),
            )
    return None


@dataclass(frozen=True)
class AuditReport:
    model_id: str
    baseline: Point
    verdicts: dict  # (axiom, method) -> AxiomVerdict or None when not applicable
    monotonicity: tuple
    config: AxiomCheckConfig

    @property
    def violated(self) -> bool:
        return any(v is not None and v.violated for v in self.verdicts.values())

    @property
    def model_monotone(self) -> bool:
        return not any(r.violated for r in self.monotonicity)

    def cell(self, axiom: str, method: str) -> str:
        v = self.verdicts.get((axiom, canonical_method(method)))
        return NOT_APPLICABLE if v is None else v.verdict

    def matrix(self) -> dict:
        methods = sorted({m for _, m in self.verdicts}, key=METHODS.index)
        return {a: {m: self.cell(a, m) for m in methods} for a in AXIOMS}

    def notes(self) -> list:
        out = []
        if not self.model_monotone:
            out.append(
                "the model itself violates its declared monotonicity; axiom verdicts assume a monotone model"
            )
        ig_aspm = self.verdicts.get((ASPM, IG))
        if ig_aspm is not None and ig_aspm.violated:
            out.append("IG violates ASPM, which IG preserves on strongly pairwise monotone models: the model breaks strong pairwise monotonicity")
        return out

    def to_dict(self, limit: int = 25) -> dict:
        space = self.baseline.space
        return {
            "model": self.model_id,
            "features": list(space.names),
            "baseline": self.baseline.coords.tolist(),
            "config": {
                "samples": self.config.samples,
                "seed": self.config.seed,
                "tolerance": self.config.tolerance,
                "ig_steps": self.config.ig_config.steps,
                "ig_rule": self.config.ig_config.rule,
            },
            "matrix": self.matrix(),
            "violated": self.violated,
            "model_monotonicity": [r.to_dict(limit) for r in self.monotonicity],
            "model_monotone": self.model_monotone,
            "notes": self.notes(),
            "verdicts": [
                v.to_dict(limit)
                for (a, m), v in sorted(self.verdicts.items(), key=lambda kv: (AXIOMS.index(kv[0][0]), kv[0][1]))
                if v is not None
            ],
        }


def audit_matrix(
    model: ModelHandle,
    baseline: Point,
    spec: MonotoneSpec,
    config: Optional[AxiomCheckConfig] = None,
    methods: Sequence[str] = METHODS,
    probe_samples: Optional[int] = None,
) -> AuditReport:
    """Every axiom against every method, after probing the model itself."""
    config = config or AxiomCheckConfig()
    if not (spec.individual or spec.weak_pairs or spec.strong_pairs):
        raise ConfigurationError("monotone spec is empty")
    mono = tuple(check_all(model, spec, config.probe_config(probe_samples)))
    verdicts = {}
    for axiom, method in itertools.product(AXIOMS, [canonical_method(m) for m in methods]):
        applicable = {
            DIM: bool(spec.individual),
            AIM: bool(spec.individual) and np.any(baseline.coords[list(spec.individual)] < model.space.upper[list(spec.individual)]),
            AWPM: bool(spec.all_pairs),
            ASPM: bool(spec.strong_pairs),
        }[axiom]
        verdicts[(axiom, method)] = CHECKS[axiom](method, model, baseline, spec, config) if applicable else None
    return AuditReport(model.id, baseline, verdicts, mono, config)


@dataclass(frozen=True)
class GridAudit:
    """Attributions on a lattice of explicands plus pairwise-axiom checks."""

    features: tuple
    points: np.ndarray
    attributions: dict  # method -> (n, m) array
    violations: tuple  # Certificates
    baseline: Point

    def rows(self) -> list:
        names = self.baseline.space.names
        out = []
        for method, A in self.attributions.items():
            N = normalize_values(A, self.points, self.baseline.coords)
            for j, x in enumerate(self.points):
                for i in self.features:
                    out.append(
                        {
                            "method": method,
                            "point": [float(x[k]) for k in self.features],
                            "feature": names[i],
                            "attribution": float(A[j, i]),
                            "normalized": None if np.isnan(N[j, i]) else float(N[j, i]),
                        }
                    )
        return out

    def violated_points(self, method: str, axiom: str = ASPM) -> list:
        return sorted(
            {tuple(float(c.x.coords[k]) for k in self.features) for c in self.violations if c.method == method and c.axiom == axiom}
        )


def grid_audit(
    model: ModelHandle,
    baseline: Point,
    spec: MonotoneSpec,
    features: Sequence,
    values: Sequence[float],
    methods: Sequence[str] = METHODS,
    ig_config: Optional[IGConfig] = None,
    tolerance: float = 1e-7,
    fill: Optional[Point] = None,
) -> GridAudit:
    """Audit every lattice point of ``values`` over ``features``.

    Features outside the lattice are held at ``fill`` (the baseline by
    default). At each point, every strong pair with both coordinates above
    the baseline is checked for ASPM and every pair at equal values for AWPM.
    """
    space = model.space
    feats = tuple(space.index(f) for f in features)
    fill = fill or baseline
    grid = np.array(list(itertools.product(*[values] * len(feats))), dtype=float)
    X = np.repeat(fill.coords[None], len(grid), axis=0)
    X[:, list(feats)] = grid
    space.check(X)
    base = baseline.coords
    inside = set(feats)
    strong = [p for p in spec.strong_pairs if set(p) <= inside]
    weak = [p for p in spec.all_pairs if set(p) <= inside]
    attributions, certs = {}, []
    for method in (canonical_method(m) for m in methods):
        A = attribute_batch(method, model, X, base, ig_config)
        attributions[method] = A
        N = normalize_values(A, X, base)
        for j in range(len(X)):
            x = X[j]
            checks = [(ASPM, p) for p in strong]
            checks += [(AWPM, p) for p in weak if x[p[0]] == x[p[1]]]
            for axiom, (b, g) in checks:
                if not (x[b] > base[b] and x[g] > base[g]):
                    continue
                margin = N[j, g] - N[j, b]
                if margin > tolerance:
                    certs.append(
                        Certificate(
                            axiom, method, (b, g), Point(x, space), tuple(A[j].tolist()), float(margin), j,
                            normalized=(float(N[j, b]), float(N[j, g])),
                        )
                    )
    return GridAudit(feats, X, attributions, tuple(certs), baseline)
