"""Command-line interface.

Exit codes: 0 clean, 1 violations found, 2 usage or configuration error,
3 runtime error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .attribution import METHODS, RULES, IGConfig, attribute, canonical_method
from .audit import AxiomCheckConfig, audit_matrix, grid_audit
from .core import ModelHandle, MonotoneSpec, Point, get_model
from .data import Dataset, IngestConfig, gen_synthetic, ingest_csv, split
from .errors import (
    BoundsError,
    CapacityError,
    ConfigurationError,
    OracleUnavailableError,
    ParameterError,
    PreconditionError,
    SchemaError,
)
from .models import AdditiveMonotoneModel, TrainConfig, auc, build_model, train
from .report import ReportDocument, emit_report
from .verify import ProbeConfig, check_all
from .zoo import get_example

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2, 3

USAGE_ERRORS = (
    BoundsError,
    CapacityError,
    ConfigurationError,
    OracleUnavailableError,
    ParameterError,
    PreconditionError,
    SchemaError,
)

log = logging.getLogger("monoattr")


class UsageError(Exception):
    pass


def _vector(text: str) -> np.ndarray:
    try:
        return np.array([float(t) for t in text.split(",")], dtype=float)
    except ValueError:
        raise UsageError(f"expected a comma-separated numeric vector, got {text!r}") from None


def resolve_model(ref: str):
    """``(handle, default spec or None, trained model or None)`` for a reference.

    ``zoo:ID`` names an analytic example, an existing file is a saved
    additive model, anything else is looked up in the model registry.
    """
    if ref.startswith("zoo:"):
        ex = get_example(ref)
        return ex.model, ex.spec, None
    p = Path(ref)
    if p.is_file():
        m = AdditiveMonotoneModel.load(p)
        return m.handle(), m.monotone_spec(), m
    return get_model(ref), None, None


def resolve_spec(text, model: ModelHandle, default):
    if text is None:
        if default is None:
            raise UsageError("this model has no built-in monotone spec; pass --spec")
        return default
    p = Path(text)
    try:
        doc = json.loads(p.read_text()) if p.is_file() else json.loads(text)
    except json.JSONDecodeError as e:
        raise UsageError(f"--spec is neither a JSON file nor inline JSON ({e})") from None
    return MonotoneSpec.from_dict(doc, model.space)


def resolve_baseline(text: str, model: ModelHandle) -> Point:
    coords = np.zeros(model.arity) if text == "zero" else _vector(text)
    if coords.size != model.arity:
        raise UsageError(f"baseline has {coords.size} values, model takes {model.arity}")
    return Point(coords, model.space)


def resolve_point(text: str, model: ModelHandle, what: str) -> Point:
    coords = _vector(text)
    if coords.size != model.arity:
        raise UsageError(f"{what} has {coords.size} values, model takes {model.arity}")
    return Point(coords, model.space)


def resolve_data(text: str, seed: int, on_error: str = "fail") -> Dataset:
    if text.startswith("synthetic:"):
        try:
            n = int(text.split(":", 1)[1])
        except ValueError:
            raise UsageError(f"bad synthetic size in {text!r}") from None
        return gen_synthetic(n, seed)
    return ingest_csv(text, IngestConfig(on_error=on_error))


def _methods(text: str) -> list:
    if text == "both":
        return list(METHODS)
    return [canonical_method(m) for m in text.split(",")]


def _write(report: ReportDocument, args) -> None:
    if args.out:
        for p in emit_report(report, args.format, args.out, figures=args.figures):
            log.info("wrote %s", p)


def _print_table(header, rows) -> None:
    w = sys.stdout.write
    w("\t".join(header) + "\n")
    for r in rows:
        w("\t".join(f"{c:.6g}" if isinstance(c, float) else str(c) for c in r) + "\n")


# commands

def cmd_attribute(args) -> int:
    model, _, _ = resolve_model(args.model)
    x = resolve_point(args.explicand, model, "explicand")
    base = resolve_baseline(args.baseline, model)
    cfg = IGConfig(steps=args.steps, rule=args.rule)
    report = ReportDocument(model.id, list(model.space.names), base.coords.tolist())
    rows = []
    for method in _methods(args.method):
        res = attribute(method, model, x, base, cfg)
        report.add_attribution(res)
        d = res.to_dict()
        for i, name in enumerate(model.space.names):
            n = d["normalized"][i]
            rows.append([method, name, float(res.values[i]), "" if n is None else float(n)])
        rows.append([method, "(gap)", res.completeness_gap, ""])
    _print_table(["method", "feature", "attribution", "normalized"], rows)
    _write(report, args)
    return EXIT_OK


def cmd_check_mono(args) -> int:
    model, default_spec, _ = resolve_model(args.model)
    spec = resolve_spec(args.spec, model, default_spec)
    cfg = ProbeConfig(
        samples=args.samples, seed=args.seed, tolerance=args.tolerance,
        grid_resolution=args.grid, multi_coordinate=args.multi,
    )
    reports = check_all(model, spec, cfg)
    doc = ReportDocument(model.id, list(model.space.names), monotonicity=[r.to_dict() for r in reports])
    _print_table(
        ["property", "verdict", "checked", "witnesses"],
        [[r.property, r.verdict, r.checked, len(r.witnesses)] for r in reports],
    )
    _write(doc, args)
    return EXIT_VIOLATION if any(r.violated for r in reports) else EXIT_OK


def cmd_audit(args) -> int:
    model, default_spec, _ = resolve_model(args.model)
    spec = resolve_spec(args.spec, model, default_spec)
    base = resolve_baseline(args.baseline, model)
    ig = IGConfig(steps=args.steps, rule=args.rule)
    cfg = AxiomCheckConfig(samples=args.samples, seed=args.seed, tolerance=args.tolerance, ig_config=ig)
    methods = _methods(args.methods)
    rep = audit_matrix(model, base, spec, cfg, methods=methods)
    doc = ReportDocument(model.id, list(model.space.names), base.coords.tolist(), audit=rep.to_dict())
    doc.monotonicity = doc.audit["model_monotonicity"]
    doc.meta = {"command": "audit", "seed": args.seed, "samples": args.samples}
    violated = rep.violated
    for e in args.explicand or []:
        for method in methods:
            doc.add_attribution(attribute(method, model, resolve_point(e, model, "explicand"), base, ig))
    if args.grid:
        feats = args.grid.split(",")
        values = [float(v) for v in args.grid_values.split(",")]
        g = grid_audit(model, base, spec, feats, values, methods, ig, args.tolerance)
        doc.add_grid(g)
        doc.meta["grid_violations"] = {m: [list(p) for p in g.violated_points(m)] for m in g.attributions}
        violated = violated or bool(g.violations)
    matrix = rep.matrix()
    _print_table(["axiom"] + methods, [[a] + [matrix[a][m] for m in methods] for a in matrix])
    for note in rep.notes():
        print(f"note: {note}")
    for m, pts in doc.meta.get("grid_violations", {}).items():
        print(f"grid {m}: {len(pts)} ASPM/AWPM violation point(s) {pts}")
    _write(doc, args)
    return EXIT_VIOLATION if violated else EXIT_OK


def cmd_train(args) -> int:
    data = resolve_data(args.data, args.seed, args.on_error)
    arch = None
    if args.arch:
        p = Path(args.arch)
        try:
            arch = json.loads(p.read_text()) if p.is_file() else json.loads(args.arch)
        except json.JSONDecodeError as e:
            raise UsageError(f"--arch is neither a JSON file nor inline JSON ({e})") from None
    tr, te = split(data, args.split, args.seed)
    model = build_model(arch, data.space, seed=args.seed, model_id=args.id)
    cfg = TrainConfig(epochs=args.epochs, batch_size=args.batch_size, learning_rate=args.lr, seed=args.seed)
    trained, history = train(model, tr.features, tr.labels, cfg)
    trained.save(args.out)
    rows = [["train_rows", len(tr)], ["test_rows", len(te)], ["dropped_rows", data.dropped],
            ["initial_loss", history[0]], ["final_loss", history[-1]],
            ["train_auc", auc(trained.decision_function(tr.features), tr.labels)],
            ["test_auc", auc(trained.decision_function(te.features), te.labels)]]
    _print_table(["metric", "value"], rows)
    for w in data.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    model, _, trained = resolve_model(args.model)
    data = resolve_data(args.data, args.seed, args.on_error)
    if data.space.dim != model.arity:
        raise UsageError(f"data has {data.space.dim} features, model takes {model.arity}")
    print(f"auc\t{auc(model(data.features), data.labels):.6f}")
    return EXIT_OK


def cmd_gen_data(args) -> int:
    data = gen_synthetic(args.n, args.seed)
    data.to_csv(args.out)
    print(f"rows\t{len(data)}\nprevalence\t{data.prevalence:.6f}")
    return EXIT_OK


def _report_args(p):
    p.add_argument("--out", help="report path (a directory for --format csv)")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--figures", action="store_true", help="also render PNG figures of the plot series")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="monoattr", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("attribute", help="attribute one explicand")
    p.add_argument("--model", required=True)
    p.add_argument("--method", default="both", help="ig, bshap or both")
    p.add_argument("--explicand", required=True)
    p.add_argument("--baseline", default="zero")
    p.add_argument("--steps", type=int, default=300)
    p.add_argument("--rule", choices=RULES, default="gauss-legendre")
    _report_args(p)
    p.set_defaults(func=cmd_attribute)

    p = sub.add_parser("check-mono", help="probe the model's own monotonicity")
    p.add_argument("--model", required=True)
    p.add_argument("--spec")
    p.add_argument("--samples", type=int, default=10_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tolerance", type=float, default=1e-9)
    p.add_argument("--grid", type=int, default=0, help="lattice resolution per feature")
    p.add_argument("--multi", action="store_true", help="raise several coordinates at once")
    _report_args(p)
    p.set_defaults(func=cmd_check_mono)

    p = sub.add_parser("audit", help="audit the axioms for each method")
    p.add_argument("--model", required=True)
    p.add_argument("--spec")
    p.add_argument("--baseline", default="zero")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=5000)
    p.add_argument("--tolerance", type=float, default=1e-7)
    p.add_argument("--steps", type=int, default=300)
    p.add_argument("--rule", choices=RULES, default="gauss-legendre")
    p.add_argument("--methods", default="both")
    p.add_argument("--explicand", action="append", help="also attribute this point (repeatable)")
    p.add_argument("--grid", help="comma-separated features for a lattice audit")
    p.add_argument("--grid-values", default="0,1,2")
    _report_args(p)
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("train", help="train an additive monotone model")
    p.add_argument("--data", required=True, help="CSV file or synthetic:N")
    p.add_argument("--arch")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=TrainConfig.epochs)
    p.add_argument("--batch-size", type=int, default=TrainConfig.batch_size)
    p.add_argument("--lr", type=float, default=TrainConfig.learning_rate)
    p.add_argument("--split", type=float, default=0.75)
    p.add_argument("--id", default="trained")
    p.add_argument("--on-error", choices=("fail", "skip"), default="fail")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", help="AUC of a saved model on a dataset")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--on-error", choices=("fail", "skip"), default="fail")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("gen-data", help="write a synthetic credit dataset")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_data)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, *USAGE_ERRORS) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as e:  # noqa: BLE001
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
