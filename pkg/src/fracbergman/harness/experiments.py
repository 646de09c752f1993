"""Numerical checks of the strong, weak and special-pair weighted bounds."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np

from ..measure import (
    PowerWeight,
    Weight,
    b1q_constant,
    bpq_constant,
    closed_form_for,
    exponents_from,
    lp_norm,
    p0q0,
    power_b1q_closed_form,
    power_bpq_closed_form,
    weighted_lp_norm,
)
from ..operators import apply_T
from .functions import TentSpec, TestFunctionSpec
from .reports import CaseResult, InequalityReport
from .setup import EvalMesh, HarnessConfig, OperatorCache, weight_label

__all__ = [
    "mesh_norm",
    "lambda_sup",
    "strong_inequality_experiment",
    "corollary_experiment",
    "p0q0_experiment",
    "weak_inequality_experiment_T",
    "weak_inequality_experiment_P",
    "necessity_sequence",
    "stability_report",
]


def mesh_norm(values: np.ndarray, cell_measure: np.ndarray, q: float) -> float:
    """(sum_cells value^q * measure)^(1/q); cells with zero value never contribute."""
    live = values > 0
    if not np.any(live):
        return 0.0
    return float(np.sum(values[live] ** q * cell_measure[live]) ** (1 / q))


def lambda_sup(values: np.ndarray, cell_measure: np.ndarray, q: float, n: int) -> tuple[float, float]:
    """max over n log-spaced lambda in [1e-3 max, max] of lambda * mu{values > lambda}^(1/q).

    Returns (sup, maximizing lambda).  The grid sup is a lower bound of the true sup.
    """
    top = float(np.max(values)) if values.size else 0.0
    if not top > 0:
        return 0.0, 0.0
    order = np.argsort(values)
    v = values[order]
    tail = np.cumsum(cell_measure[order][::-1])[::-1]  # tail[k] = mu of cells k..end
    lams = np.geomspace(1e-3 * top, top, n)
    first = np.searchsorted(v, lams, side="right")
    mu = np.where(first < v.size, tail[np.minimum(first, v.size - 1)], 0.0)
    scores = lams * mu ** (1 / q)
    k = int(np.argmax(scores))
    return float(scores[k]), float(lams[k])


def _weights_required(weights: Sequence[Weight]) -> list[Weight]:
    weights = list(weights)
    if not weights:
        raise ValueError("at least one weight is required")
    return weights


def _bracket_strong(w, p, q, alpha, family, tol):
    rep = bpq_constant(w, p, q, alpha, family, tol)
    out = {"bracket": rep.value, "witness": None if rep.witness is None else [rep.witness.left, rep.witness.length]}
    pw = closed_form_for(w)
    if pw is not None:
        out["closed_form"] = power_bpq_closed_form(pw.s, p, q, alpha)
    return rep.value, out


def _bracket_weak(w, q, alpha, family, tol):
    rep = b1q_constant(w, q, alpha, family, tol)
    out = {"bracket": rep.value, "witness": None if rep.witness is None else [rep.witness.left, rep.witness.length]}
    pw = closed_form_for(w)
    if pw is not None:
        out["closed_form"] = power_b1q_closed_form(pw.s, q, alpha)
    return rep.value, out


def _operator_values(spec, f, alpha, op_gamma, mesh: EvalMesh, cfg: HarnessConfig, cache: OperatorCache):
    tag = ("mesh", mesh.nx, mesh.ny, cfg.function_mesh, cfg.window)
    return cache.apply_T(spec, f, alpha, op_gamma, mesh.centers(), tag, cfg.operator)


def _norm_experiment(name: str, alpha: float, op_gamma: float, p: float, q: float, eta: float,
                     exponent: float, weights, functions, cfg: HarnessConfig, cache, refine: bool,
                     inputs: dict, extra_exponents: dict[str, float] | None = None) -> InequalityReport:
    weights = _weights_required(weights)
    cache = cache or OperatorCache()
    family = cfg.family()
    mesh = EvalMesh(cfg.window, *cfg.mesh)
    fine = mesh.refined()
    tol = cfg.operator.quad_tol
    cases: list[CaseResult] = []
    drifts = []
    brackets = {}
    for w in weights:
        label = weight_label(w)
        bracket, binfo = _bracket_strong(w, p, q, alpha, family, tol)
        brackets[label] = binfo
        wq = w.power(q)
        meas = mesh.cell_measures(wq, eta)
        meas_fine = fine.cell_measures(wq, eta) if refine else None
        for spec in functions:
            f = spec.realize(cfg.window, cfg.function_mesh, alpha)
            norm_f = lp_norm(f, w.power(p), p, alpha)
            details = {"weight": label, "function": spec.name, "norm_f": norm_f}
            if norm_f == 0:
                cases.append(CaseResult(f"{label}|{spec.name}", 0.0, cfg.c_max, tol, details=details))
                continue
            vals = _operator_values(spec, f, alpha, op_gamma, mesh, cfg, cache)
            lhs = mesh_norm(vals, meas, q)
            scale = bracket ** exponent * norm_f
            ratio = lhs / scale if math.isfinite(scale) else math.nan
            details.update(lhs=lhs, raw_ratio=lhs / norm_f, normalizer=scale)
            for tagname, e in (extra_exponents or {}).items():
                details[f"ratio_{tagname}"] = lhs / (bracket ** e * norm_f)
            if refine:
                vals_f = _operator_values(spec, f, alpha, op_gamma, fine, cfg, cache)
                ratio_f = mesh_norm(vals_f, meas_fine, q) / scale
                drift = abs(ratio_f - ratio) / ratio_f if ratio_f > 0 else 0.0
                details.update(refined_ratio=ratio_f, drift=drift)
                drifts.append(drift)
            cases.append(CaseResult(f"{label}|{spec.name}", ratio, cfg.c_max, tol * max(1.0, ratio),
                                    details=details))
    lhs = max((c.lhs for c in cases), default=0.0)
    if any(math.isnan(c.lhs) for c in cases):
        lhs = math.nan
    witnesses = {"brackets": brackets}
    if drifts:
        witnesses["max_drift"] = max(drifts)
    return InequalityReport(name, lhs, cfg.c_max, cfg.c_max, exponent, tol * max(1.0, lhs if math.isfinite(lhs) else 1.0),
                            0.0, cases, inputs, witnesses,
                            notes=["lhs norms are integrated over the window only (lower bounds)"])


def strong_inequality_experiment(alpha: float, gamma: float, p: float, weights: Sequence[Weight],
                                 functions: Sequence[TestFunctionSpec], cfg: HarnessConfig,
                                 cache: OperatorCache | None = None, refine: bool = True) -> InequalityReport:
    """Normalized ratios ||w T f||_{q,alpha} / ([w]^(1+p'/p+q/p') ||w f||_{p,alpha})."""
    ex = exponents_from(alpha, gamma, p)
    if ex.weak:
        raise ValueError("the strong experiment needs p > 1")
    inputs = {"alpha": alpha, "gamma": gamma, "p": p, "q": ex.q, "exponent": ex.strong_exponent}
    return _norm_experiment("strong", alpha, gamma, p, ex.q, alpha, ex.strong_exponent, weights, functions,
                            cfg, cache, refine, inputs)


def corollary_experiment(alpha: float, gamma: float, p: float, weights: Sequence[Weight],
                         functions: Sequence[TestFunctionSpec], cfg: HarnessConfig,
                         cache: OperatorCache | None = None, refine: bool = True) -> InequalityReport:
    """P+ from L^p(w^p dV_alpha) to L^q(w^q dV_eta), eta = (2+alpha)(q/p-1)+alpha."""
    ex = exponents_from(alpha, gamma, p)
    if ex.weak:
        raise ValueError("the corollary experiment needs p > 1")
    inputs = {"alpha": alpha, "gamma": gamma, "p": p, "q": ex.q, "eta": ex.eta, "exponent": ex.strong_exponent}
    return _norm_experiment("corollary", alpha, 0.0, p, ex.q, ex.eta, ex.strong_exponent, weights, functions,
                            cfg, cache, refine, inputs)


def p0q0_experiment(alpha: float, gamma: float, weights: Sequence[Weight],
                    functions: Sequence[TestFunctionSpec], cfg: HarnessConfig,
                    cache: OperatorCache | None = None, refine: bool = True) -> InequalityReport:
    """Strong experiment at (p0, q0) normalized by [w]^q0 instead of the general exponent."""
    p0, q0 = p0q0(alpha, gamma)
    ex = exponents_from(alpha, gamma, p0)
    strong_e = ex.strong_exponent
    inputs = {"alpha": alpha, "gamma": gamma, "p0": p0, "q0": q0, "exponent": q0, "strong_exponent": strong_e}
    rep = _norm_experiment("p0q0", alpha, gamma, p0, q0, alpha, q0, weights, functions, cfg, cache, refine,
                           inputs, extra_exponents={"strong": strong_e})
    rep.witnesses["exponents"] = {"q0": q0, "strong": strong_e, "q0_below_strong": bool(q0 < strong_e),
                                  "q_from_p0": ex.q}
    return rep


def _weak_experiment(name: str, alpha: float, gamma: float, op_gamma: float, eta: float,
                     exponents: dict[str, float], weights, functions, cfg: HarnessConfig,
                     cache, lambda_grid_size: int | None) -> InequalityReport:
    weights = _weights_required(weights)
    cache = cache or OperatorCache()
    q = exponents_from(alpha, gamma, 1.0).q
    n = lambda_grid_size or cfg.lambda_grid_size
    family = cfg.family()
    mesh = EvalMesh(cfg.window, *cfg.mesh)
    tol = cfg.operator.quad_tol
    cases = []
    drifts = []
    brackets = {}
    for w in weights:
        label = weight_label(w)
        bracket, binfo = _bracket_weak(w, q, alpha, family, tol)
        brackets[label] = binfo
        meas = mesh.cell_measures(w.power(q), eta)
        for spec in functions:
            f = spec.realize(cfg.window, cfg.function_mesh, alpha)
            norm1 = weighted_lp_norm(f, w, 1.0, alpha)
            vals = _operator_values(spec, f, alpha, op_gamma, mesh, cfg, cache)
            sup, lam = lambda_sup(vals, meas, q, n)
            sup2, _ = lambda_sup(vals, meas, q, 2 * n)
            drift = abs(sup2 - sup) / sup2 if sup2 > 0 else 0.0
            drifts.append(drift)
            for tag, e in exponents.items():
                scale = bracket ** e * norm1
                if norm1 == 0:
                    ratio = 0.0
                else:
                    ratio = sup / scale if math.isfinite(scale) else math.nan
                details = {"weight": label, "function": spec.name, "exponent_tag": tag, "exponent": e,
                           "sup": sup, "argmax_lambda": lam, "sup_doubled_grid": sup2, "drift": drift,
                           "norm_f_w": norm1}
                cases.append(CaseResult(f"{label}|{spec.name}|e={tag}", ratio, cfg.c_max,
                                        tol * max(1.0, ratio), details=details))
    lhs = max((c.lhs for c in cases), default=0.0)
    if any(math.isnan(c.lhs) for c in cases):
        lhs = math.nan
    per_exp = {tag: max((c.lhs for c in cases if c.details["exponent_tag"] == tag), default=0.0)
               for tag in exponents}
    witnesses = {"brackets": brackets, "max_ratio_by_exponent": per_exp,
                 "bounds_satisfied": {t: bool(v <= cfg.c_max) for t, v in per_exp.items()},
                 "max_drift": max(drifts, default=0.0)}
    inputs = {"alpha": alpha, "gamma": gamma, "q": q, "eta": eta, "exponents": dict(exponents),
              "lambda_grid_size": n}
    return InequalityReport(name, lhs, cfg.c_max, cfg.c_max, max(exponents.values()),
                            tol * max(1.0, lhs if math.isfinite(lhs) else 1.0), 0.0, cases, inputs, witnesses,
                            notes=["lambda-grid sups are lower bounds of the true sup"])


def weak_inequality_experiment_T(alpha: float, gamma: float, weights: Sequence[Weight],
                                 functions: Sequence[TestFunctionSpec], cfg: HarnessConfig,
                                 lambda_grid_size: int | None = None,
                                 cache: OperatorCache | None = None) -> InequalityReport:
    """sup_lambda lambda |{T f > lambda}|_{w^q,alpha}^(1/q) against [w]^e ||f w||_1 for e in {q, q^2}."""
    ex = exponents_from(alpha, gamma, 1.0)
    exps = {"q": ex.q, "q^2": ex.q ** 2}
    return _weak_experiment("weak-T", alpha, gamma, gamma, alpha, exps, weights, functions, cfg, cache,
                            lambda_grid_size)


def weak_inequality_experiment_P(alpha: float, gamma: float, weights: Sequence[Weight],
                                 functions: Sequence[TestFunctionSpec], cfg: HarnessConfig,
                                 lambda_grid_size: int | None = None,
                                 cache: OperatorCache | None = None) -> InequalityReport:
    """Same with P+ and super-level sets measured by w^q dV_eta, exponent 2q - 1."""
    ex = exponents_from(alpha, gamma, 1.0)
    eta = (2 + alpha) * (ex.q - 1) + alpha
    return _weak_experiment("weak-P", alpha, gamma, 0.0, eta, {"2q-1": 2 * ex.q - 1}, weights, functions,
                            cfg, cache, lambda_grid_size)


def necessity_sequence(alpha: float, gamma: float, p: float, s: float, cfg: HarnessConfig,
                       ks: Sequence[int] = tuple(range(1, 9)), mesh: tuple[int, int] | None = None,
                       ) -> InequalityReport:
    """Raw ratios ||w T f_k||_q / ||w f_k||_p for w = y^s and flat tents at height 2^-k.

    Counts the k where the ratio fails to increase; zero means the sequence
    grows, as it must when the bracket of y^s is infinite.
    """
    ex = exponents_from(alpha, gamma, p)
    w = PowerWeight(s)
    bracket = power_bpq_closed_form(s, p, ex.q, alpha)
    em = EvalMesh(cfg.window, *(mesh or cfg.mesh))
    meas = em.cell_measures(w.power(ex.q), alpha)
    ratios = []
    cases = []
    for k in ks:
        h = 2.0 ** -k
        tent = TentSpec((0.5, 0.75 * h), 0.5, 0.25 * h, name=f"tent-k{k}")
        f = tent.realize(tent.bounding_box(), (8, 8), alpha)
        vals = np.asarray(apply_T(f, alpha, gamma, em.centers(), cfg.operator))
        ratio = mesh_norm(vals, meas, ex.q) / lp_norm(f, w.power(p), p, alpha)
        ratios.append(ratio)
    violations = 0
    for i, k in enumerate(ks):
        grew = i == 0 or ratios[i] > ratios[i - 1]
        violations += 0 if grew else 1
        cases.append(CaseResult(f"k={k}", 0.0 if grew else 1.0, 0.0, 0.0,
                                details={"height": 2.0 ** -k, "raw_ratio": ratios[i]}))
    admissible = (-(1 + alpha) / ex.q, (1 + alpha) / ex.p_prime)
    inputs = {"alpha": alpha, "gamma": gamma, "p": p, "q": ex.q, "s": s, "ks": list(ks)}
    witnesses = {"bracket_closed_form": bracket, "admissible_s": list(admissible),
                 "ratios": ratios, "predicted_growth_exponent": s - (1 + alpha) / ex.p_prime}
    return InequalityReport("necessity", float(violations), 0.0, math.inf, 0.0, 0.0, 0.0, cases, inputs,
                            witnesses, notes=["lhs counts non-increasing steps of the ratio sequence"])


def stability_report(report: InequalityReport, limit: float, key: str = "drift") -> InequalityReport:
    """Drift of every case of ``report`` under refinement, checked against ``limit``."""
    cases = []
    for c in report.cases:
        if key in c.details:
            cases.append(CaseResult(c.parameter, float(c.details[key]), limit, 0.0,
                                    details={"ratio": c.lhs}))
    worst = max((c.lhs for c in cases), default=0.0)
    return InequalityReport(f"{report.experiment}/stability", worst, limit, limit, report.exponent_used,
                            0.0, 0.0, cases, dict(report.inputs), {})
