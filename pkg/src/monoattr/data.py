"""Credit-record ingestion, train/test splitting and a synthetic generator.

The schema has nine features and a binary delinquency label::

    x1  times 90+ days past due          x6  monthly income
    x2  times 60-89 days past due        x7  open credit lines and loans
    x3  times 30-59 days past due        x8  real-estate loans or lines
    x4  revolving utilization            x9  number of dependents
    x5  debt ratio                       y   serious delinquency (0/1)

Past-due counts above 4 are capped at 4.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.special import expit, ndtri

from .core import FeatureSpace
from .errors import IngestionError, ParameterError

log = logging.getLogger(__name__)

FEATURES = ("x1", "x2", "x3", "x4", "x5", "x6", "x7", "x8", "x9")
LABEL = "y"
PAST_DUE = ("x1", "x2", "x3")
PAST_DUE_CAP = 4.0

# schema bounds used by the synthetic generator; ingestion widens them to fit the data
DEFAULT_LOWER = np.zeros(9)
DEFAULT_UPPER = np.array([4.0, 4.0, 4.0, 1.0, 1.0, 50_000.0, 30.0, 10.0, 6.0])

KAGGLE_COLUMNS = {
    "NumberOfTimes90DaysLate": "x1",
    "NumberOfTime60-89DaysPastDueNotWorse": "x2",
    "NumberOfTime30-59DaysPastDueNotWorse": "x3",
    "RevolvingUtilizationOfUnsecuredLines": "x4",
    "DebtRatio": "x5",
    "MonthlyIncome": "x6",
    "NumberOfOpenCreditLinesAndLoans": "x7",
    "NumberRealEstateLoansOrLines": "x8",
    "NumberOfDependents": "x9",
    "SeriousDlqin2yrs": "y",
}
MISSING = {"", "na", "nan", "null", "none"}


def default_space() -> FeatureSpace:
    return FeatureSpace(DEFAULT_LOWER, DEFAULT_UPPER, FEATURES)


@dataclass
class Dataset:
    features: np.ndarray
    labels: np.ndarray
    space: FeatureSpace
    dropped: int = 0
    warnings: list = field(default_factory=list)

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=float)
        self.labels = np.asarray(self.labels, dtype=float)
        if self.features.ndim != 2 or self.features.shape[1] != self.space.dim:
            raise IngestionError(f"feature matrix shape {self.features.shape} does not match {self.space.dim} features")
        if len(self.labels) != len(self.features):
            raise IngestionError("features and labels differ in length")
        if not np.all((self.labels == 0) | (self.labels == 1)):
            raise IngestionError("labels must be 0 or 1")

    def __len__(self):
        return len(self.labels)

    @property
    def prevalence(self) -> float:
        return float(self.labels.mean())

    def subset(self, idx) -> "Dataset":
        return Dataset(self.features[idx], self.labels[idx], self.space)

    def to_csv(self, path) -> None:
        """Write with full float precision so re-ingestion reproduces the values."""
        path = Path(path)
        try:
            with path.open("w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(list(self.space.names) + [LABEL])
                for row, y in zip(self.features, self.labels):
                    w.writerow([repr(float(v)) for v in row] + [str(int(y))])
        except OSError as e:
            raise IngestionError(f"cannot write {path}: {e.strerror}") from None


@dataclass(frozen=True)
class IngestConfig:
    """``column_map`` maps file headers to schema names; ``None`` auto-detects
    either the schema names or the Kaggle export headers. ``on_error`` is
    ``"fail"`` or ``"skip"`` for malformed numeric cells."""

    column_map: Optional[dict] = None
    on_error: str = "fail"
    cap: float = PAST_DUE_CAP

    def __post_init__(self):
        if self.on_error not in ("fail", "skip"):
            raise ParameterError("on_error must be 'fail' or 'skip'")


def _resolve_columns(header: list, mapping: Optional[dict]) -> dict:
    if mapping is None:
        if set(FEATURES) | {LABEL} <= set(header):
            mapping = {c: c for c in FEATURES + (LABEL,)}
        else:
            mapping = KAGGLE_COLUMNS
    where = {}
    for col, target in mapping.items():
        if col in header:
            where[target] = header.index(col)
    missing = [t for t in FEATURES + (LABEL,) if t not in where]
    if missing:
        raise IngestionError(f"header lacks columns for {missing}; supply a column mapping")
    return where


def ingest_csv(path, config: Optional[IngestConfig] = None) -> Dataset:
    """Read a credit CSV into a :class:`Dataset`.

    Rows with any missing schema field are dropped and counted. An ``age``
    column is ignored with a warning.
    """
    config = config or IngestConfig()
    path = Path(path)
    warnings = []
    try:
        fh = path.open(newline="")
    except OSError as e:
        raise IngestionError(f"cannot read {path}: {e.strerror}") from None
    rows, labels, dropped, skipped = [], [], 0, 0
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise IngestionError(f"{path} is empty") from None
        where = _resolve_columns(header, config.column_map)
        if "age" in header:
            warnings.append("column 'age' present and excluded from the feature set")
            log.warning("%s: column 'age' excluded", path)
        order = [where[c] for c in FEATURES]
        caps = [i for i, c in enumerate(FEATURES) if c in PAST_DUE]
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            cells = [row[j].strip() if j < len(row) else "" for j in order + [where[LABEL]]]
            if any(c.lower() in MISSING for c in cells):
                dropped += 1
                continue
            try:
                vals = [float(c) for c in cells]
                if not all(math.isfinite(v) for v in vals):
                    raise ValueError("non-finite value")
                if vals[-1] not in (0.0, 1.0):
                    raise ValueError(f"label {cells[-1]!r} is not 0 or 1")
                if any(v < 0 for v in vals[:-1]):
                    raise ValueError("negative feature value")
            except ValueError as e:
                if config.on_error == "fail":
                    raise IngestionError(f"{path}:{line}: malformed row ({e})", line=line) from None
                skipped += 1
                continue
            x = vals[:-1]
            for i in caps:
                x[i] = min(x[i], config.cap)
            rows.append(x)
            labels.append(vals[-1])
    if skipped:
        warnings.append(f"{skipped} malformed row(s) skipped")
    if not rows:
        raise IngestionError(f"{path}: no usable rows after ingestion")
    X = np.array(rows)
    space = FeatureSpace(np.minimum(DEFAULT_LOWER, X.min(0)), np.maximum(DEFAULT_UPPER, X.max(0)), FEATURES)
    return Dataset(X, np.array(labels), space, dropped, warnings)


def split(dataset: Dataset, ratio: float = 0.75, seed: int = 0):
    """Seeded shuffle, then the first ``floor(ratio * n)`` rows train."""
    if not 0 < ratio < 1:
        raise ParameterError("split ratio must lie strictly between 0 and 1")
    n = len(dataset)
    if n < 2:
        raise ParameterError("need at least 2 rows to split")
    n_train = min(max(int(math.floor(ratio * n)), 1), n - 1)
    order = np.random.default_rng(seed).permutation(n)
    return dataset.subset(np.sort(order[:n_train])), dataset.subset(np.sort(order[n_train:]))


# synthetic generator

def _capped_geometric(u, p, cap):
    # failures before the first success, P(k) = (1-p)^k p
    return np.minimum(np.floor(np.log1p(-u) / np.log1p(-p)), cap)


def _kumaraswamy(u, a, b):
    return (1.0 - (1.0 - u) ** (1.0 / b)) ** (1.0 / a)


def ground_truth_score(X) -> np.ndarray:
    """The log-odds used to draw synthetic labels.

    Past dues enter through a concave increasing link of ``1.2*x1 + 0.8*x2
    + 0.5*x3``, so x1 strongly dominates x2 and x2 dominates x3.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    z = 1.2 * X[:, 0] + 0.8 * X[:, 1] + 0.5 * X[:, 2]
    return (
        -3.1
        + 2.0 * np.log1p(z)
        + 2.2 * X[:, 3]
        + 0.6 * X[:, 4]
        - 0.35 * np.log1p(X[:, 5] / 1000.0)
        - 0.4 * np.exp(-0.5 * (X[:, 6] - 8.0) ** 2 / 16.0)
        + 0.05 * X[:, 7]
        + 0.1 * X[:, 8]
    )


def gen_synthetic(n: int, seed: int = 0) -> Dataset:
    """Draw ``n`` records by inverse-CDF transforms of seeded uniforms.

    x1-x3 capped geometric, x4-x5 Kumaraswamy, x6 log-normal clipped at
    50000, x7-x9 capped geometric. Labels are Bernoulli of the sigmoid of
    :func:`ground_truth_score`.
    """
    if n < 100:
        raise ParameterError("synthetic datasets need n >= 100")
    U = np.random.default_rng(seed).random((n, 10))
    X = np.empty((n, 9))
    X[:, 0] = _capped_geometric(U[:, 0], 0.85, 4)
    X[:, 1] = _capped_geometric(U[:, 1], 0.8, 4)
    X[:, 2] = _capped_geometric(U[:, 2], 0.7, 4)
    X[:, 3] = _kumaraswamy(U[:, 3], 0.7, 1.5)
    X[:, 4] = _kumaraswamy(U[:, 4], 1.2, 3.0)
    X[:, 5] = np.minimum(np.exp(math.log(5000.0) + 0.6 * ndtri(U[:, 5])), 50_000.0)
    X[:, 6] = _capped_geometric(U[:, 6], 0.12, 30)
    X[:, 7] = _capped_geometric(U[:, 7], 0.5, 10)
    X[:, 8] = _capped_geometric(U[:, 8], 0.55, 6)
    y = (U[:, 9] < expit(ground_truth_score(X))).astype(float)
    return Dataset(X, y, default_space())
