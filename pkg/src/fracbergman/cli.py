"""Command-line entry point.

Exit codes: 0 all checks pass, 2 configuration error, 3 numeric or domain
error (divergence, window too small, quadrature budget), 4 a check failed.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from pathlib import Path
from typing import Sequence

from .config import DEFAULTS, ConfigError, RunConfig, load_config, parse_mesh
from .geometry import BETAS, Rectangle, ScaleRangeError
from .harness import (
    CSV_HEADER,
    InequalityReport,
    OperatorCache,
    covering_check,
    corollary_experiment,
    floored_suite,
    level_set_decomposition,
    maximal_vs_T_check,
    necessity_sequence,
    out_part_check,
    p0q0_experiment,
    pointwise_order_check,
    reverse_doubling_check,
    sparse_domination_check,
    stability_report,
    strong_inequality_experiment,
    to_measured_tree,
    weak_inequality_experiment_P,
    weak_inequality_experiment_T,
    weight_label,
)
from .harness.reports import CaseResult, format_float
from .harness.setup import EvalMesh
from .measure import (
    DomainError,
    GridFunction,
    NumericRangeError,
    b1q_constant,
    bekolle_constant,
    bpq_constant,
    closed_form_for,
    exponents_from,
    interval_family,
    power_b1q_closed_form,
    power_bekolle_closed_form,
    power_bpq_closed_form,
)
from .operators import ToleranceNotMetError, WindowTooSmallError

__all__ = ["main", "build_parser", "cmd_constants", "cmd_verify", "cmd_experiment", "THEOREMS"]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_FAILED = 0, 2, 3, 4
THEOREMS = ("strong", "weak-T", "weak-P", "corollary", "p0q0")
NUMERIC_ERRORS = (DomainError, NumericRangeError, WindowTooSmallError, ToleranceNotMetError, ScaleRangeError,
                  ArithmeticError)
CONSTANT_RTOL = 1e-6


class RequiredFiniteError(ArithmeticError):
    """A weight constant diverged where finiteness was required."""


# --- output -----------------------------------------------------------------

def render_csv(reports: Sequence[InequalityReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(CSV_HEADER)
    for rep in reports:
        writer.writerows(rep.csv_rows())
    return buf.getvalue()


def write_outputs(out: Path, command: str, cfg: RunConfig, reports: Sequence[InequalityReport],
                  extra: dict | None = None) -> None:
    out.mkdir(parents=True, exist_ok=True)
    doc = {
        "command": command,
        "pass": all(r.passed for r in reports),
        "config": to_measured_tree(cfg.raw, 0.0),
        "reports": [r.to_dict() for r in reports],
    }
    if extra:
        doc.update(extra)
    (out / "report.json").write_text(json.dumps(doc, indent=2, sort_keys=False) + "\n", encoding="utf-8")
    with open(out / "results.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write(render_csv(reports))


# --- commands ---------------------------------------------------------------

def _agreement_case(parameter: str, value: float, reference: float, details: dict) -> CaseResult:
    if math.isinf(value) and math.isinf(reference):
        disc = 0.0
    elif math.isfinite(value) and math.isfinite(reference) and reference != 0:
        disc = abs(value - reference) / abs(reference)
    else:
        disc = math.inf
    return CaseResult(parameter, disc, CONSTANT_RTOL, 0.0, details={**details, "value": value,
                                                                     "reference": reference})


def cmd_constants(cfg: RunConfig, require_finite: bool = False) -> list[InequalityReport]:
    """Weight constants for every (weight, alpha, gamma, p), against closed forms where known."""
    family = interval_family(cfg.window.x0, cfg.window.x1, *cfg.family_scales, cfg.family_random, cfg.seed)
    tol = cfg.quad_tol
    closed_cases, relation_cases = [], []
    diverged = []
    for w in cfg.weights:
        label = weight_label(w)
        pw = closed_form_for(w)
        for alpha, gamma, p in cfg.exponent_grid:
            ex = exponents_from(alpha, gamma, p)
            q = ex.q
            tag = f"{label}|alpha={alpha:g}|gamma={gamma:g}|p={p:g}"
            values = {}
            if p > 1:
                values["bpq"] = bpq_constant(w, p, q, alpha, family, tol)
                values["bekolle"] = bekolle_constant(w, p, alpha, family, tol)
                u = w.power(q)
                rel = bekolle_constant(u, ex.r, alpha, family, tol).value
                relation_cases.append(_agreement_case(f"{tag}|class-relation", rel, values["bpq"].value ** q,
                                                      {"r": ex.r, "q": q}))
            q1 = exponents_from(alpha, gamma, 1.0).q
            values["b1q"] = b1q_constant(w, q1, alpha, family, tol)
            for name, rep in values.items():
                if not rep.finite:
                    diverged.append(f"{tag}|{name}")
                if pw is None:
                    continue
                if name == "bpq":
                    ref = power_bpq_closed_form(pw.s, p, q, alpha)
                elif name == "bekolle":
                    ref = power_bekolle_closed_form(pw.s, p, alpha)
                else:
                    ref = power_b1q_closed_form(pw.s, q1, alpha)
                closed_cases.append(_agreement_case(f"{tag}|{name}", rep.value, ref,
                                                    {"witness": None if rep.witness is None
                                                     else [rep.witness.left, rep.witness.length]}))
    if require_finite and diverged:
        raise RequiredFiniteError(f"divergent constants: {', '.join(diverged)}")
    reports = [
        InequalityReport("constants/closed-form", max((c.lhs for c in closed_cases), default=0.0),
                         CONSTANT_RTOL, math.nan, math.nan, 0.0, 0.0, closed_cases,
                         {"family_size": len(family)}, {"divergent": diverged}),
        InequalityReport("constants/class-relation", max((c.lhs for c in relation_cases), default=0.0),
                         CONSTANT_RTOL, math.nan, math.nan, 0.0, 0.0, relation_cases,
                         {"family_size": len(family)}),
    ]
    return reports


def _level_set_report(cfg: RunConfig) -> InequalityReport:
    """The enumerable example: f = 1 on Q_[0,1), alpha = gamma = 0, lambda = 1.5, both grids."""
    f = GridFunction.constant(Rectangle(0.0, 1.0, 0.0, 1.0))
    mesh = EvalMesh(cfg.window, *cfg.mesh)
    cases = []
    for beta in BETAS:
        rep = level_set_decomposition(f, 0.0, 0.0, beta, 1.5, cfg.operator(), mesh, q=2.0)
        bad = rep.mesh_violations + rep.parent_failures + rep.nested_pairs
        cls = rep.classification
        if not (cls.get("exhaustive") and cls.get("exclusive")):
            bad += 1
        cases.append(CaseResult(f"beta={beta}", float(bad), 0.0, 0.0,
                                details={"squares": rep.maximal_squares, "measure": rep.super_level_measure,
                                         "mesh_points": rep.mesh_points_checked,
                                         "L1": cls.get("L1", []), "L2": cls.get("L2", [])}))
    return InequalityReport("level-set", sum(c.lhs for c in cases), 0.0, math.nan, 0.0, 0.0, 0.0, cases,
                            {"lambda": 1.5, "alpha": 0.0, "gamma": 0.0})


def cmd_verify(cfg: RunConfig) -> list[InequalityReport]:
    """Structural lemma checks: reverse doubling, covering, sparse domination, orders, level sets."""
    h = cfg.harness()
    plain = [f for f in cfg.functions if f.to_json()["kind"] != "floor_plus"] or list(cfg.functions)
    reports = [reverse_doubling_check(seed=cfg.seed), covering_check(seed=cfg.seed)]
    pairs = sorted({(a, g) for a, g, _ in cfg.exponent_grid})
    for alpha in sorted({a for a, _ in pairs}):
        gammas = sorted({0.0} | {g for a, g in pairs if a == alpha})
        reports.append(sparse_domination_check(plain[:3], alpha, gammas, h))
    for alpha, gamma in pairs:
        reports.append(pointwise_order_check(plain, alpha, gamma, h))
        reports.append(maximal_vs_T_check(floored_suite(plain[:2]), alpha, gamma, h))
        reports.append(out_part_check(plain, alpha, gamma, h))
    reports.append(_level_set_report(cfg))
    return reports


def _admissible(weights, check) -> tuple[list, list[str]]:
    keep, skipped = [], []
    for w in weights:
        (keep if check(w) else skipped).append(w)
    return keep, [weight_label(w) for w in skipped]


def cmd_experiment(cfg: RunConfig, which: str) -> list[InequalityReport]:
    if which not in THEOREMS:
        raise ConfigError(f"theorem: expected one of {', '.join(THEOREMS)}, got {which!r}")
    if not cfg.weights:
        raise ConfigError("weights: at least one weight is required")
    h = cfg.harness()
    family = h.family()
    cache = OperatorCache()
    reports = []
    for alpha, gamma, p in cfg.exponent_grid:
        if which in ("strong", "corollary"):
            if p == 1:
                continue
            q = exponents_from(alpha, gamma, p).q
            ws, skipped = _admissible(cfg.weights, lambda w: bpq_constant(w, p, q, alpha, family).finite)
            if not ws:
                raise ConfigError(f"weights: none has a finite B_(p,q) constant at (alpha, gamma, p) = "
                                  f"({alpha:g}, {gamma:g}, {p:g})")
            run = strong_inequality_experiment if which == "strong" else corollary_experiment
            rep = run(alpha, gamma, p, ws, cfg.functions, h, cache)
        elif which == "p0q0":
            if gamma == 0:
                continue
            from .measure import p0q0 as _p0q0
            p0, q0 = _p0q0(alpha, gamma)
            ws, skipped = _admissible(cfg.weights, lambda w: bpq_constant(w, p0, q0, alpha, family).finite)
            if not ws:
                raise ConfigError("weights: none has a finite constant at (p0, q0)")
            rep = p0q0_experiment(alpha, gamma, ws, cfg.functions, h, cache)
        else:
            q1 = exponents_from(alpha, gamma, 1.0).q
            ws, skipped = _admissible(cfg.weights, lambda w: b1q_constant(w, q1, alpha, family).finite)
            if not ws:
                raise ConfigError("weights: none has a finite B_(1,q) constant")
            run = weak_inequality_experiment_T if which == "weak-T" else weak_inequality_experiment_P
            rep = run(alpha, gamma, ws, cfg.functions, h, cache=cache)
        if skipped:
            rep.notes.append(f"skipped weights outside the class: {', '.join(skipped)}")
        reports.append(rep)
        reports.append(stability_report(rep, h.drift_limit))
        if which == "strong":
            reports.append(necessity_sequence(alpha, gamma, p, cfg.necessity_s, h))
    if not reports:
        raise ConfigError(f"exponentGrid: no entry applies to theorem {which!r}")
    return reports


# --- argument parsing -------------------------------------------------------

def _defaults_epilog() -> str:
    lines = ["config file defaults (JSON keys):"]
    for k, v in DEFAULTS.items():
        if k == "functions":
            v = [f["name"] for f in v]
        lines.append(f"  {k}: {json.dumps(v)}")
    lines.append("exit codes: 0 pass, 2 config error, 3 numeric/domain error, 4 check failed")
    lines.append("results.csv columns: " + ", ".join(CSV_HEADER))
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration (defaults below)")
    common.add_argument("--out", default="out", help="output directory for report.json and results.csv")
    common.add_argument("--seed", type=int, help="override the config seed")
    common.add_argument("--mesh", help="override the evaluation mesh, as <nx>x<ny>")
    common.add_argument("--tol", type=float, help="override the quadrature tolerance")
    parser = argparse.ArgumentParser(prog="fracbergman", description=__doc__.splitlines()[0],
                                     epilog=_defaults_epilog(), formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    c = sub.add_parser("constants", parents=[common], help="weight-class constants vs closed forms")
    c.add_argument("--require-finite", action="store_true", help="exit 3 if any constant diverges")
    sub.add_parser("verify", parents=[common], help="structural lemma checks")
    e = sub.add_parser("experiment", parents=[common], help="weighted inequality experiments")
    e.add_argument("--theorem", required=True, choices=THEOREMS)
    return parser


def _resolve_config(args) -> RunConfig:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.override(seed=args.seed)
    if args.mesh is not None:
        cfg = cfg.override(mesh=parse_mesh(args.mesh))
    if args.tol is not None:
        if not args.tol > 0:
            raise ConfigError("tol: must be positive")
        cfg = cfg.override(quad_tol=args.tol)
    return cfg


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve_config(args)
        if args.command == "constants":
            reports = cmd_constants(cfg, args.require_finite)
            name = "constants"
        elif args.command == "verify":
            reports = cmd_verify(cfg)
            name = "verify"
        else:
            reports = cmd_experiment(cfg, args.theorem)
            name = f"experiment:{args.theorem}"
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        print(f"numeric error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    write_outputs(Path(args.out), name, cfg, reports)
    failed = [r for r in reports if not r.passed]
    for r in reports:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.experiment}: lhs={format_float(r.lhs)} "
              f"rhs={format_float(r.rhs)}")
    if failed:
        print(f"{len(failed)} check(s) failed; witnesses in {Path(args.out) / 'report.json'}", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
