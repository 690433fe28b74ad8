"""Report documents with canonical JSON and multi-table CSV output."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import MonoAttrError

REPORT_VERSION = 1
SIGNIFICANT_DIGITS = 12


class ReportIOError(MonoAttrError, OSError):
    pass


def canonical(obj):
    """Plain JSON types with floats rounded to 12 significant digits."""
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return canonical(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if not math.isfinite(v):
            return None
        v = float(f"{v:.{SIGNIFICANT_DIGITS}g}")
        return 0.0 if v == 0 else v
    return obj


def dumps(obj) -> str:
    return json.dumps(canonical(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


@dataclass
class ReportDocument:
    """Everything a CLI run produced, in serializable form.

    ``series`` holds plot data: ``bar`` series carry ``labels`` and
    ``values``; ``grid`` series carry ``points`` and per-feature ``values``.
    """

    model_id: str
    features: list
    baseline: Optional[list] = None
    attributions: list = field(default_factory=list)
    monotonicity: list = field(default_factory=list)
    audit: Optional[dict] = None
    grid: list = field(default_factory=list)
    series: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)
    version: int = REPORT_VERSION

    def add_attribution(self, result) -> None:
        d = result.to_dict()
        self.attributions.append(d)
        self.series.append(
            {
                "name": f"attribution-{d['method']}-{len(self.attributions)}",
                "kind": "bar",
                "labels": d["features"],
                "values": d["values"],
            }
        )

    def add_grid(self, grid) -> None:
        rows = grid.rows()
        self.grid.extend(rows)
        names = [self.features[i] for i in grid.features]
        for method in grid.attributions:
            mine = [r for r in rows if r["method"] == method]
            points = []
            for r in mine:
                if r["point"] not in points:
                    points.append(r["point"])
            values = {n: [r["normalized"] for r in mine if r["feature"] == n] for n in names}
            self.series.append(
                {
                    "name": f"grid-{method}",
                    "kind": "grid",
                    "features": names,
                    "points": points,
                    "values": values,
                    "violations": [list(p) for p in grid.violated_points(method)],
                }
            )

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "model": self.model_id,
            "features": list(self.features),
            "baseline": self.baseline,
            "attributions": self.attributions,
            "monotonicity": self.monotonicity,
            "audit": self.audit,
            "grid": self.grid,
            "series": self.series,
            "meta": self.meta,
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())

    def tables(self) -> dict:
        """Flat tables for delimited output, keyed by file stem."""
        names = list(self.features)
        t = {}
        t["attributions"] = (
            ["method", "explicand", "feature", "value", "normalized", "completeness_gap"],
            [
                [a["method"], _vec(a["explicand"]), f, a["values"][i], a["normalized"][i], a["completeness_gap"]]
                for a in self.attributions
                for i, f in enumerate(names)
            ],
        )
        t["monotonicity"] = (
            ["property", "verdict", "checked", "witness_count", "worst_margin"],
            [[r["property"], r["verdict"], r["checked"], r["witness_count"], r["worst_margin"]] for r in self.monotonicity],
        )
        verdicts = (self.audit or {}).get("verdicts", [])
        matrix = (self.audit or {}).get("matrix", {})
        t["audit_matrix"] = (
            ["axiom", "method", "verdict"],
            [[a, m, v] for a, row in matrix.items() for m, v in row.items()],
        )
        t["certificates"] = (
            ["axiom", "method", "feature", "margin", "x", "x_star", "attributions"],
            [
                [c["axiom"], c["method"], _vec(c["feature"]) if isinstance(c["feature"], list) else c["feature"],
                 c["margin"], _vec(c["x"]), _vec(c.get("x_star") or []), _vec(c["attributions"])]
                for v in verdicts
                for c in v.get("certificates", [])
            ],
        )
        t["grid"] = (
            ["method", "point", "feature", "attribution", "normalized"],
            [[r["method"], _vec(r["point"]), r["feature"], r["attribution"], r["normalized"]] for r in self.grid],
        )
        return t


def _vec(v) -> str:
    return " ".join(_cell(x) for x in v)


def _cell(v) -> str:
    v = canonical(v)
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_report(report: ReportDocument, fmt: str, path, figures: bool = False) -> list:
    """Write ``report`` and return the paths created.

    ``json`` writes one file. ``csv`` treats ``path`` as a directory and
    writes one table per section plus ``manifest.json``. With ``figures``,
    PNG renderings of the plot series go next to the output.
    """
    path = Path(path)
    written = []
    try:
        if fmt == "json":
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(report.to_json())
            written.append(path)
            fig_dir = path.with_name(path.stem + "_figures")
        elif fmt == "csv":
            path.mkdir(parents=True, exist_ok=True)
            manifest = {"version": report.version, "model": report.model_id, "baseline": report.baseline, "tables": {}}
            for stem, (header, rows) in report.tables().items():
                p = path / f"{stem}.csv"
                with p.open("w", newline="") as fh:
                    w = csv.writer(fh, lineterminator="\n")
                    w.writerow(header)
                    for row in rows:
                        w.writerow([_cell(c) for c in row])
                manifest["tables"][stem] = {"file": p.name, "rows": len(rows), "columns": header}
                written.append(p)
            (path / "manifest.json").write_text(dumps(manifest))
            written.append(path / "manifest.json")
            fig_dir = path / "figures"
        else:
            raise ValueError(f"unknown report format {fmt!r}; use json or csv")
        if figures and report.series:
            from .plots import render_series

            written += render_series(report.series, fig_dir)
    except OSError as e:
        raise ReportIOError(f"cannot write report to {e.filename or path}: {e.strerror}") from None
    return written
