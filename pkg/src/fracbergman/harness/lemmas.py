"""Checks of the structural lemmas: reverse doubling, covering, sparse domination,
pointwise orders and the averaging identities behind the duality argument."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from ..geometry import BETAS, DyadicIndex, Interval, Rectangle, as_beta, cell_index, dyadic_indices_meeting
from ..geometry import find_adjacent_cover, find_dyadic_cover
from ..measure import (
    GridFunction,
    GridWeight,
    PowerWeight,
    Weight,
    bekolle_constant,
    carleson_constant,
    conjugate,
    dv_alpha_many,
    quad2d,
    reverse_doubling_theta,
)
from ..operators import (
    OperatorConfig,
    apply_dyadic_maximal,
    apply_dyadic_Q,
    apply_maximal,
    apply_T,
    geometric_tail_constant,
    maximal_to_T_constant,
)
from .functions import TestFunctionSpec
from .reports import CaseResult, InequalityReport
from .setup import HarnessConfig, sample_points

__all__ = [
    "bekolle_suite_weights",
    "random_dyadic_squares",
    "reverse_doubling_check",
    "covering_check",
    "sparse_domination_check",
    "pointwise_order_check",
    "maximal_vs_T_check",
    "out_part_check",
    "lemma24_condition_c",
    "DualityAverages",
    "duality_averages",
]

REL = 1e-12  # slack for exact closed-form comparisons


def bekolle_suite_weights(p: float, alpha: float, seed: int = 0) -> list[Weight]:
    """Four weights of the p-class: 1, two interior power weights, one random grid weight."""
    lo, hi = -(1 + alpha), (1 + alpha) * (p - 1)  # y^s is in the class iff lo < s < hi
    rng = np.random.default_rng(seed)
    grid = GridWeight(Rectangle(-4.0, 4.0, 0.0, 8.0), rng.uniform(0.5, 2.0, (16, 16)))
    return [PowerWeight(0.0), PowerWeight(0.5 * lo), PowerWeight(0.5 * hi), grid]


def random_dyadic_squares(n: int, seed: int = 0, scales=(-6, 2), x_range=(-4.0, 4.0)) -> list[DyadicIndex]:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n):
        beta = BETAS[int(rng.integers(2))]
        j = int(rng.integers(scales[0], scales[1] + 1))
        out.append(DyadicIndex(beta, j, cell_index(float(rng.uniform(*x_range)), j, beta)))
    return out


def reverse_doubling_check(ps: Sequence[float] = (1.5, 2.0, 3.0), alphas: Sequence[float] = (-0.5, 0.0, 1.0),
                           n_squares: int = 1000, seed: int = 0) -> InequalityReport:
    """|Q_I|_w <= C_{p,alpha} [w] |T_I|_w and |B_I|_w / |Q_I|_w <= theta on random dyadic squares."""
    start = time.perf_counter()
    squares = random_dyadic_squares(n_squares, seed)
    family = [s.interval() for s in squares]
    left = np.array([float(s.exact_left) for s in squares])
    side = np.array([s.length for s in squares])
    cases = []
    total_viol = 0
    for p in ps:
        for alpha in alphas:
            c_pa = carleson_constant(p, alpha)
            for w in bekolle_suite_weights(p, alpha, seed):
                bracket = bekolle_constant(w, p, alpha, family).value
                theta = reverse_doubling_theta(p, alpha, bracket)
                whole = w.integrate_many(left, left + side, np.zeros_like(side), side, alpha)
                top = w.integrate_many(left, left + side, side / 2, side, alpha)
                bottom = w.integrate_many(left, left + side, np.zeros_like(side), side / 2, alpha)
                v21 = int(np.sum(whole > c_pa * bracket * top * (1 + REL)))
                v22 = int(np.sum(bottom / whole > theta * (1 + REL)))
                total_viol += v21 + v22
                label = w.to_json().get("kind", "weight")
                if isinstance(w, PowerWeight):
                    label = f"y^{w.s:g}"
                cases.append(CaseResult(f"p={p:g}|alpha={alpha:g}|{label}", float(v21 + v22), 0.0, 0.0,
                                        details={"bracket": bracket, "C": c_pa, "theta": theta,
                                                 "max_Q_over_CT": float(np.max(whole / (c_pa * bracket * top))),
                                                 "max_B_over_Q": float(np.max(bottom / whole)),
                                                 "violations_top_half": v21, "violations_bottom_half": v22}))
    elapsed = time.perf_counter() - start
    return InequalityReport("reverse-doubling", float(total_viol), 0.0, math.nan, 1.0, 0.0, 0.0, cases,
                            {"ps": list(ps), "alphas": list(alphas), "n_squares": n_squares, "seed": seed},
                            {"runtime_s": elapsed})


def _check_cover(interval: Interval) -> list[str]:
    problems = []
    a, b = interval.exact_left, interval.exact_right
    size = Fraction(interval.length)
    _, J = find_dyadic_cover(interval)
    if not (J.exact_left <= a and b <= J.exact_right):
        problems.append("cover does not contain I")
    if Fraction(J.length) > 8 * size:
        problems.append("cover longer than 8|I|")
    for beta in BETAS:
        I1, I2 = find_adjacent_cover(interval, beta)
        if I1.beta != as_beta(beta) or I2.beta != as_beta(beta) or I1.j != I2.j:
            problems.append("adjacent pair not from one grid and scale")
        if I1.exact_right != I2.exact_left:
            problems.append("pair not adjacent")
        L = Fraction(I1.length)
        if not (size < L <= 2 * size):
            problems.append("pair length outside (|I|, 2|I|]")
        if not (I1.exact_left <= a and b <= I2.exact_right):
            problems.append("pair does not cover I")
    return problems


def covering_check(n: int = 10_000, seed: int = 0, lengths=(1e-3, 1e3), lefts=(-1e3, 1e3)) -> InequalityReport:
    """Both covering constructions on random intervals with log-uniform lengths."""
    start = time.perf_counter()
    rng = np.random.default_rng(seed)
    ls = np.exp(rng.uniform(np.log(lengths[0]), np.log(lengths[1]), n))
    xs = rng.uniform(lefts[0], lefts[1], n)
    failures = []
    for x, length in zip(xs, ls):
        problems = _check_cover(Interval(float(x), float(length)))
        if problems:
            failures.append({"interval": [float(x), float(length)], "problems": problems})
    elapsed = time.perf_counter() - start
    return InequalityReport("covering", float(len(failures)), 0.0, math.nan, 1.0, 0.0, 0.0, [],
                            {"n": n, "seed": seed, "lengths": list(lengths)},
                            {"failures": failures[:20], "runtime_s": elapsed})


def _dyadic_sum(f: GridFunction, alpha, gamma, z, cfg: OperatorConfig) -> np.ndarray:
    return sum(np.asarray(apply_dyadic_Q(f, alpha, gamma, b, z, cfg).truncated_value) for b in BETAS)


def _sparse_ratio(f, alpha, gamma, z, cfg: OperatorConfig) -> tuple[float, int]:
    t = np.asarray(apply_T(f, alpha, gamma, z, cfg))
    q = _dyadic_sum(f, alpha, gamma, z, cfg)
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(q > 0, t / q, np.where(t > 0, np.inf, 0.0))
    k = int(np.argmax(r))
    return float(r[k]), k


def sparse_domination_check(functions: Sequence[TestFunctionSpec], alpha: float, gammas: Sequence[float],
                            cfg: HarnessConfig) -> InequalityReport:
    """max over sample points of T f / (Q^0 f + Q^(1/3) f) and its drift.

    The dyadic side uses truncated values, so each ratio over-estimates the
    true one.  Drift is measured under one doubling of the realization mesh
    and one widening of the scale window by two scales on each side.
    """
    start = time.perf_counter()
    z = sample_points(cfg.window, cfg.n_samples, cfg.operator.eval_floor, cfg.seed)
    wide = cfg.operator.widened(2)
    fine_mesh = (2 * cfg.mesh[0], 2 * cfg.mesh[1])
    cases = []
    for gamma in gammas:
        for spec in functions:
            f = spec.realize(cfg.window, cfg.mesh, alpha)
            base, k = _sparse_ratio(f, alpha, gamma, z, cfg.operator)
            fine, _ = _sparse_ratio(spec.realize(cfg.window, fine_mesh, alpha), alpha, gamma, z, cfg.operator)
            widened, _ = _sparse_ratio(f, alpha, gamma, z, wide)
            drift = max(abs(fine - base) / fine, abs(widened - base) / widened) if math.isfinite(base) else math.inf
            cases.append(CaseResult(f"{spec.name}|gamma={gamma:g}", drift, cfg.drift_limit, 0.0,
                                    details={"ratio": base, "ratio_refined_mesh": fine,
                                             "ratio_widened_window": widened,
                                             "argmax_point": [z[k].real, z[k].imag]}))
    worst = max((c.lhs for c in cases), default=0.0)
    notes = []
    if alpha <= 0:
        notes.append("alpha <= 0 lies outside the range alpha > 0 where the sparse bound is established")
    elapsed = time.perf_counter() - start
    return InequalityReport("sparse-domination", worst, cfg.drift_limit, math.nan, 0.0, 0.0, 0.0, cases,
                            {"alpha": alpha, "gammas": list(gammas), "mesh": list(cfg.mesh),
                             "n_samples": cfg.n_samples, "scale_window": list(cfg.operator.scale_window)},
                            {"max_ratio": max((c.details["ratio"] for c in cases), default=0.0),
                             "runtime_s": elapsed}, notes)


def pointwise_order_check(functions: Sequence[TestFunctionSpec], alpha: float, gamma: float,
                          cfg: HarnessConfig) -> InequalityReport:
    """y^gamma P+ f(z) <= T f(z) at the sample points, up to twice the quadrature error."""
    z = sample_points(cfg.window, cfg.n_samples, cfg.operator.eval_floor, cfg.seed)
    tol = cfg.operator.quad_tol
    cases = []
    for spec in functions:
        f = spec.realize(cfg.window, cfg.function_mesh, alpha)
        t = np.asarray(apply_T(f, alpha, gamma, z, cfg.operator))
        p = np.asarray(apply_T(f, alpha, 0.0, z, cfg.operator))
        lhs = z.imag ** gamma * p
        slack = tol * (np.maximum(1, t) + z.imag ** gamma * np.maximum(1, p))
        viol = int(np.sum(lhs > t + slack))
        cases.append(CaseResult(spec.name, float(viol), 0.0, 0.0,
                                details={"max_ratio": float(np.max(lhs / np.where(t > 0, t, np.inf)))}))
    total = sum(c.lhs for c in cases)
    return InequalityReport("pointwise-order", total, 0.0, 1.0, 0.0, 0.0, 0.0, cases,
                            {"alpha": alpha, "gamma": gamma, "n_samples": cfg.n_samples})


def _window_family(cfg: HarnessConfig) -> list[Interval]:
    w = cfg.window
    return [I for I in cfg.family() if w.x0 <= I.left and I.right <= w.x1 and I.length <= w.y1]


def maximal_vs_T_check(functions: Sequence[TestFunctionSpec], alpha: float, gamma: float,
                       cfg: HarnessConfig) -> InequalityReport:
    """M f <= C T f at the sample points for strictly positive f.

    C is the explicit geometric constant of :func:`maximal_to_T_constant`;
    violations of the constant-free form are counted and logged separately.
    """
    z = sample_points(cfg.window, cfg.n_samples, cfg.operator.eval_floor, cfg.seed)
    family = _window_family(cfg)
    c = maximal_to_T_constant(alpha, gamma)
    tol = cfg.operator.quad_tol
    cases = []
    for spec in functions:
        f = spec.realize(cfg.window, cfg.function_mesh, alpha)
        m = np.asarray(apply_maximal(f, None, alpha, gamma, z, family))
        t = np.asarray(apply_T(f, alpha, gamma, z, cfg.operator))
        slack = 2 * tol * c * np.maximum(1, t)
        viol = int(np.sum(m > c * t + slack))
        literal = int(np.sum(m > t + 2 * tol * np.maximum(1, t)))
        cases.append(CaseResult(spec.name, float(viol), 0.0, 0.0,
                                details={"max_M_over_T": float(np.max(m / t)), "constant": c,
                                         "violations_with_constant_one": literal}))
    total = sum(c_.lhs for c_ in cases)
    return InequalityReport("maximal-vs-T", total, 0.0, c, 0.0, 0.0, 0.0, cases,
                            {"alpha": alpha, "gamma": gamma, "family_size": len(family)},
                            {"constant": c},
                            notes=["the constant-free comparison is not valid in general; see details"])


def _support_index(f: GridFunction, beta, j_max: int) -> DyadicIndex:
    """Smallest J in D^beta with supp f inside Q_J."""
    box = f.support_box()
    j = max(math.frexp(box.width)[1] - 1, math.frexp(box.y1)[1] - 1)
    while j <= j_max:
        J = DyadicIndex(as_beta(beta), j, cell_index(box.x0, j, beta))
        if box.x1 <= float(J.exact_right) and box.y1 <= J.length:
            return J
        j += 1
    raise ValueError("support does not fit in one square of the scale window")


def out_part_check(functions: Sequence[TestFunctionSpec], alpha: float, gamma: float,
                   cfg: HarnessConfig) -> InequalityReport:
    """Outside Q_J, Q^beta f <= C_geo M^{d,beta} f, for both geometric constants.

    Both sides run over the squares of the scale window.
    """
    z = sample_points(cfg.window, cfg.n_samples, cfg.operator.eval_floor, cfg.seed)
    consts = {power: geometric_tail_constant(alpha, gamma, power) for power in ("2+alpha", "1+alpha")}
    cases = []
    for spec in functions:
        f = spec.realize(cfg.window, cfg.function_mesh, alpha)
        for beta in BETAS:
            J = _support_index(f, beta, cfg.operator.scale_window[1])
            left, right = float(J.exact_left), float(J.exact_right)
            outside = ~((z.real >= left) & (z.real < right) & (z.imag < J.length))
            zo = z[outside]
            qd = apply_dyadic_Q(f, alpha, gamma, beta, zo, cfg.operator)
            # same squares on both sides; the coarse tail bound is not a point value
            upper = np.asarray(qd.truncated_value)
            md = np.asarray(apply_dyadic_maximal(f, None, alpha, gamma, beta, zo, cfg.operator))
            for power, c in consts.items():
                viol = int(np.sum(upper > c * md * (1 + REL)))
                with np.errstate(divide="ignore", invalid="ignore"):
                    worst = float(np.max(np.where(md > 0, upper / md, np.where(upper > 0, np.inf, 0.0))))
                cases.append(CaseResult(f"{spec.name}|beta={beta}|{power}", float(viol), 0.0, 0.0,
                                        details={"constant": c, "max_Q_over_M": worst,
                                                 "points": int(zo.size), "J": J}))
    total = sum(c.lhs for c in cases)
    return InequalityReport("out-part-domination", total, 0.0, consts["2+alpha"], 0.0, 0.0, 0.0, cases,
                            {"alpha": alpha, "gamma": gamma}, {"constants": consts})


def lemma24_condition_c(weight: Weight, mu_weight: Weight, mu_alpha: float, p: float, q: float, alpha: float,
                        gamma: float, family: Sequence[Interval], bound: float = 1e3) -> InequalityReport:
    """sup_I |Q_I|^(q(t - 1/p)) (avg_{Q_I} w^(1-p'))^(q/p') mu(Q_I), t = gamma/(2+alpha).

    For p = 1 the averaged factor becomes (inf_{Q_I} w)^(-q).  mu is
    mu_weight dV_{mu_alpha}.  Passes when the sup is at most ``bound``.
    """
    family = list(family)
    if not family:
        raise ValueError("interval family must be nonempty")
    t = gamma / (2 + alpha)
    left = np.array([I.left for I in family])
    side = np.array([I.length for I in family])
    args = (left, left + side, np.zeros_like(side), side)
    qa = dv_alpha_many(*args, alpha)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        if p == 1:
            factor = weight.ess_inf_many(*args) ** (-q)
        else:
            pp = conjugate(p)
            factor = (weight.power(1 - pp).integrate_many(*args, alpha) / qa) ** (q / pp)
        mu = mu_weight.integrate_many(*args, mu_alpha)
        vals = qa ** (q * (t - 1 / p)) * factor * mu
    vals = np.where(np.isnan(vals), np.inf, vals)
    k = int(np.argmax(vals))
    sup = float(vals[k])
    return InequalityReport("lemma24-c", sup, bound, bound, q, 0.0, 0.0, [],
                            {"p": p, "q": q, "alpha": alpha, "gamma": gamma, "mu_alpha": mu_alpha,
                             "family_size": len(family)},
                            {"sup": sup, "witness": [family[k].left, family[k].length]})


@dataclass(frozen=True)
class DualityAverages:
    direct: float
    decomposed: float
    squares: int

    @property
    def discrepancy(self) -> float:
        scale = max(abs(self.direct), abs(self.decomposed), 1e-300)
        return abs(self.direct - self.decomposed) / scale


def _pointwise_integral(f: GridFunction, density, rect: Rectangle, alpha: float, tol: float) -> float:
    """int_rect f * density dV_alpha by quadrature over the merged pieces of f."""
    total = 0.0
    for x0, x1, y0, y1, v in zip(*f.merged_rects()):
        piece = rect.intersect(Rectangle(x0, x1, y0, y1))
        if piece is not None:
            total += v * quad2d(density, piece, alpha, tol)
    return total


def duality_averages(f: GridFunction, g: GridFunction, sigma: Weight, u: Weight, alpha: float, gamma: float,
                     beta, scale_window: tuple[int, int] = (-3, 3), tol: float = 1e-10) -> DualityAverages:
    """Bilinear dyadic sum computed directly and through the weighted averages.

    direct:     sum_I |Q_I|_alpha^(t-1) (int_{Q_I} f) (int_{Q_I} g)
    decomposed: sum_I |Q_I|_alpha^(t-1) |Q_I|_sigma |Q_I|_u^(1-t) S_sigma(f/sigma) S_{u,gamma}(g/u)
    The weighted averages are evaluated by pointwise quadrature of
    (f/sigma) sigma and (g/u) u, independent of the cellwise exact route.
    """
    t = gamma / (2 + alpha)
    fb, gb = f.support_box(), g.support_box()
    if fb is None or gb is None:
        return DualityAverages(0.0, 0.0, 0)
    # a large square can meet both supports even when their x-ranges are disjoint
    x0, x1 = min(fb.x0, gb.x0), max(fb.x1, gb.x1)
    direct = decomposed = 0.0
    count = 0
    j0, j1 = scale_window
    for j in range(j0, j1 + 1):
        for idx in dyadic_indices_meeting(x0, x1, beta, j):
            left = float(idx.exact_left)
            side = idx.length
            a = (np.array([left]), np.array([left + side]), np.zeros(1), np.array([side]))
            qa = float(dv_alpha_many(*a, alpha)[0])
            fi = float(f.integrate_over(*a, alpha)[0])
            gi = float(g.integrate_over(*a, alpha)[0])
            if fi == 0 or gi == 0:
                continue
            count += 1
            direct += qa ** (t - 1) * fi * gi
            q_sigma = float(sigma.integrate_many(*a, alpha)[0])
            q_u = float(u.integrate_many(*a, alpha)[0])
            rect = Rectangle(left, left + side, 0.0, side)
            s_sigma = _pointwise_integral(f, lambda x, y: (1 / sigma(x, y)) * sigma(x, y), rect, alpha, tol) / q_sigma
            s_u = _pointwise_integral(g, lambda x, y: (1 / u(x, y)) * u(x, y), rect, alpha, tol) / q_u ** (1 - t)
            decomposed += qa ** (t - 1) * q_sigma * q_u ** (1 - t) * s_sigma * s_u
    return DualityAverages(direct, decomposed, count)
