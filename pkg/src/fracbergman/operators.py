"""Fractional Bergman operators, their dyadic models and maximal functions.

All operators act on nonnegative :class:`GridFunction` inputs and are
evaluated at points of the upper half-plane given as complex numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import roots_jacobi

from .geometry import DyadicIndex, Interval, as_beta, cell_index, cell_indices
from .measure.core import DomainError, GridFunction, Weight, dv_alpha_many

__all__ = [
    "OperatorConfig",
    "DyadicTail",
    "ToleranceNotMetError",
    "WindowTooSmallError",
    "kernel",
    "apply_T",
    "apply_P_plus",
    "apply_dyadic_Q",
    "apply_dyadic_Q_split",
    "apply_maximal",
    "apply_dyadic_maximal",
    "geometric_tail_constant",
    "as_points",
    "check_window",
    "maximal_to_T_constant",
]


class ToleranceNotMetError(ArithmeticError):
    """Adaptive quadrature ran out of refinement budget."""


class WindowTooSmallError(ValueError):
    """The dyadic scale window cannot hold the support of the input."""


@dataclass(frozen=True)
class OperatorConfig:
    quad_tol: float = 1e-6
    scale_window: tuple[int, int] = (-12, 8)
    eval_floor: float = 2.0 ** -10
    max_depth: int = 48
    chunk: int = 60_000

    def __post_init__(self):
        if not self.quad_tol > 0:
            raise ValueError("quad_tol must be positive")
        j0, j1 = self.scale_window
        if j0 > j1:
            raise ValueError("scale window must satisfy j_min <= j_max")
        if not self.eval_floor > 0:
            raise ValueError("eval_floor must be positive")

    def widened(self, by: int = 2) -> "OperatorConfig":
        j0, j1 = self.scale_window
        return OperatorConfig(self.quad_tol, (j0 - by, j1 + by), self.eval_floor,
                              self.max_depth, self.chunk)

    def refined(self) -> "OperatorConfig":
        return OperatorConfig(self.quad_tol / 2, self.scale_window, self.eval_floor,
                              self.max_depth, self.chunk)


@dataclass(frozen=True)
class DyadicTail:
    """Truncated dyadic sum plus a bound on the discarded coarser scales."""

    truncated_value: float | np.ndarray
    tail_bound: float | np.ndarray

    @property
    def upper(self):
        return self.truncated_value + self.tail_bound


def as_points(z) -> tuple[np.ndarray, np.ndarray, bool]:
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    x, y = z.real.copy(), z.imag.copy()
    if np.any(y <= 0):
        raise DomainError("evaluation points must lie in the open upper half-plane")
    return x, y, scalar


def _ret(arr, scalar):
    return float(arr[0]) if scalar else arr


def _check_params(alpha, gamma):
    if not alpha > -1:
        raise DomainError(f"alpha must exceed -1, got {alpha}")
    if not 0 <= gamma < 2 + alpha:
        raise DomainError(f"gamma must lie in [0, 2+alpha), got {gamma}")


def kernel(z, w, alpha: float, gamma: float):
    """1 / |z - conj(w)|^(2 + alpha - gamma)."""
    _check_params(alpha, gamma)
    z = np.asarray(z, complex)
    w = np.asarray(w, complex)
    if np.any(z.imag <= 0) or np.any(w.imag <= 0):
        raise DomainError("kernel arguments must lie in the open upper half-plane")
    d2 = (z.real - w.real) ** 2 + (z.imag + w.imag) ** 2
    out = d2 ** (-(2 + alpha - gamma) / 2)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# adaptive quadrature of the kernel over rectangles

_GL = {n: np.polynomial.legendre.leggauss(n) for n in (2, 4)}


class _Rules:
    """Tensor rules; rows touching y = 0 use Gauss-Jacobi for the factor v^alpha."""

    def __init__(self, alpha):
        self.alpha = alpha
        self.jacobi = {n: roots_jacobi(n, 0.0, alpha) for n in (2, 4)}

    def integrate(self, zx, zy, x0, x1, y0, y1, expo, n):
        xs, wx = _GL[n]
        ts, wj = self.jacobi[n]
        xm, xr = 0.5 * (x0 + x1), 0.5 * (x1 - x0)
        X = xm[:, None] + xr[:, None] * xs[None]
        bnd = (y0 == 0)[:, None]
        # interior rows: substitute u = v^(1+alpha)/(1+alpha), so dV_alpha = dx du
        a1 = 1 + self.alpha
        safe_y0 = np.where(y0 > 0, y0, 1.0)
        grow = np.expm1(a1 * np.log1p((y1 - y0) / safe_y0))
        frac = 0.5 * (1 + xs)
        Yi = safe_y0[:, None] * np.exp(np.log1p(frac[None] * grow[:, None]) / a1)
        WYi = 0.5 * (safe_y0 ** a1 / a1 * grow)[:, None] * wx[None]
        Yb = 0.5 * y1[:, None] * (1 + ts[None])
        Y = np.where(bnd, Yb, Yi)
        WYb = (0.5 * y1[:, None]) ** a1 * wj[None]
        WY = np.where(bnd, WYb, WYi)
        dx2 = (zx[:, None] - X) ** 2
        dy2 = (zy[:, None] + Y) ** 2
        K = (dx2[:, :, None] + dy2[:, None, :]) ** (-expo)
        return np.einsum("pi,pj,pij->p", xr[:, None] * wx[None], WY, K)


def _kernel_sum(zx, zy, rects, vals, alpha, gamma, cfg: OperatorConfig) -> np.ndarray:
    """sum_r vals[r] * int_{rect_r} K(z, w) dV_alpha(w) for every point z."""
    nz = zx.size
    out = np.zeros(nz)
    rx0, rx1, ry0, ry1 = rects
    keep = vals != 0
    rx0, rx1, ry0, ry1, vals = rx0[keep], rx1[keep], ry0[keep], ry1[keep], vals[keep]
    nr = vals.size
    if nr == 0 or nz == 0:
        return out
    expo = (2 + alpha - gamma) / 2
    rules = _Rules(alpha)
    mass = np.abs(vals) * dv_alpha_many(rx0, rx1, ry0, ry1, alpha)
    rtol = cfg.quad_tol * mass / mass.sum()

    zblock = max(1, cfg.chunk // nr)
    for start in range(0, nz, zblock):
        zi = np.arange(start, min(nz, start + zblock))
        pz = np.repeat(zi, nr)
        pr = np.tile(np.arange(nr), zi.size)
        work = [pz, rx0[pr], rx1[pr], ry0[pr], ry1[pr], vals[pr], rtol[pr]]
        depth = 0
        while work[0].size:
            if depth > cfg.max_depth:
                raise ToleranceNotMetError(
                    f"kernel quadrature did not reach tol={cfg.quad_tol} within {cfg.max_depth} bisections")
            nxt = [[] for _ in work]
            for c0 in range(0, work[0].size, cfg.chunk):
                sl = slice(c0, c0 + cfg.chunk)
                z_i, x0, x1, y0, y1, v, tl = (a[sl] for a in work)
                zxp, zyp = zx[z_i], zy[z_i]
                g4 = rules.integrate(zxp, zyp, x0, x1, y0, y1, expo, 4)
                g2 = rules.integrate(zxp, zyp, x0, x1, y0, y1, expo, 2)
                err = np.abs(g4 - g2) * np.abs(v)
                # a rect much larger than its distance to the reflected point is never accepted
                gap = np.maximum(np.maximum(x0 - zxp, zxp - x1), 0.0)
                dist = np.hypot(gap, zyp + y0)
                size = np.maximum(x1 - x0, y1 - y0)
                # below a few ulps of the contribution the estimate is rounding noise
                contrib = np.abs(v * g4)
                budget = np.maximum(0.5 * (tl + cfg.quad_tol * contrib),
                                    64 * np.finfo(float).eps * contrib)
                ok = (err <= budget) & (size <= 4 * dist)
                np.add.at(out, z_i[ok], v[ok] * g4[ok])
                bad = ~ok
                if np.any(bad):
                    z_b, x0b, x1b, y0b, y1b, vb, tb = (a[bad] for a in (z_i, x0, x1, y0, y1, v, tl))
                    xm, ym = 0.5 * (x0b + x1b), 0.5 * (y0b + y1b)
                    for cx0, cx1 in ((x0b, xm), (xm, x1b)):
                        for cy0, cy1 in ((y0b, ym), (ym, y1b)):
                            for lst, arr in zip(nxt, (z_b, cx0, cx1, cy0, cy1, vb, tb / 4)):
                                lst.append(arr)
            work = [np.concatenate(l) if l else np.zeros(0) for l in nxt]
            work[0] = work[0].astype(np.int64)
            depth += 1
    return out


def apply_T(f: GridFunction, alpha: float, gamma: float, z, cfg: OperatorConfig | None = None):
    """T_{alpha,gamma} f(z) = int f(w) |z - conj(w)|^-(2+alpha-gamma) dV_alpha(w)."""
    _check_params(alpha, gamma)
    cfg = cfg or OperatorConfig()
    x, y, scalar = as_points(z)
    rx0, rx1, ry0, ry1, vals = f.merged_rects()
    out = _kernel_sum(x, y, (rx0, rx1, ry0, ry1), vals, alpha, gamma, cfg)
    return _ret(out, scalar)


def apply_P_plus(f: GridFunction, alpha: float, z, cfg: OperatorConfig | None = None):
    """Positive Bergman projection, the gamma = 0 case of :func:`apply_T`."""
    return apply_T(f, alpha, 0.0, z, cfg)


# ---------------------------------------------------------------------------
# dyadic model operators

def _square_mass(j: int) -> float:
    return math.ldexp(1.0, j)


def _dyadic_terms(f: GridFunction, alpha, gamma, beta, x, y, j_min, j_max,
                  sigma: Weight | None = None):
    """Yield (j, inside_mask, term_values) for each scale.

    term = |Q_I|_{sigma,alpha}^(t-1) int_{Q_I} f sigma dV_alpha for the scale-j
    square containing each point, t = gamma / (2 + alpha).
    """
    beta = as_beta(beta)
    t = gamma / (2 + alpha)
    s_even, s_odd = float(beta), -float(beta)
    for j in range(j_min, j_max + 1):
        L = math.ldexp(1.0, j)
        inside = y < L
        if not np.any(inside):
            yield j, inside, np.zeros(0)
            continue
        m = cell_indices(x[inside], j, beta)
        um, inv = np.unique(m, return_inverse=True)
        left = np.ldexp(um + (s_even if j % 2 == 0 else s_odd), j)
        right = left + L
        zeros = np.zeros_like(left)
        height = np.full_like(left, L)
        mass = f.integrate_over(left, right, zeros, height, alpha, sigma)
        if sigma is None:
            qa = dv_alpha_many(left, right, zeros, height, alpha)
        else:
            qa = sigma.integrate_many(left, right, zeros, height, alpha)
        with np.errstate(divide="ignore", invalid="ignore"):
            term = np.where(mass > 0, qa ** (t - 1) * mass, 0.0)
        yield j, inside, term[inv]


def check_window(f: GridFunction, beta, j_max: int) -> None:
    box = f.support_box()
    if box is None:
        return
    beta = as_beta(beta)
    top = DyadicIndex(beta, j_max, cell_index(box.x0, j_max, beta))
    if not (box.x1 <= float(top.exact_right) and box.y1 <= top.length):
        raise WindowTooSmallError(
            f"support {tuple(float(v) for v in box.as_tuple())} does not fit in a scale-{j_max} square of D^{beta}")


def maximal_to_T_constant(alpha: float, gamma: float) -> float:
    """C with M_{alpha,gamma} f <= C T_{alpha,gamma} f for f >= 0.

    For z, w in Q_I one has |z - conj(w)|^2 <= 5 |I|^2, which bounds the
    kernel below on Q_I; the rest is |Q_I|_alpha = |I|^(2+alpha)/(1+alpha).
    """
    _check_params(alpha, gamma)
    t = gamma / (2 + alpha)
    return 5.0 ** ((2 + alpha - gamma) / 2) * (1 + alpha) ** (1 - t)


def geometric_tail_constant(alpha: float, gamma: float, power: str = "2+alpha") -> float:
    """sum_{k>=0} 2^(c k (t - 1)), with c = 2 + alpha or 1 + alpha."""
    c = (2 + alpha) if power == "2+alpha" else (1 + alpha)
    t = gamma / (2 + alpha)
    return 1.0 / (1.0 - 2.0 ** (c * (t - 1)))


def apply_dyadic_Q(f: GridFunction, alpha: float, gamma: float, beta, z,
                   cfg: OperatorConfig | None = None) -> DyadicTail:
    """Q^beta_{alpha,gamma} f(z), truncated to the configured scale window.

    The tail bound covers every scale above j_max: there each term is at
    most |Q_I|_alpha^(t-1) ||f||_{1,alpha} and these decay geometrically by
    2^((2+alpha)(t-1)) per scale.
    """
    _check_params(alpha, gamma)
    cfg = cfg or OperatorConfig()
    j_min, j_max = cfg.scale_window
    check_window(f, beta, j_max)
    x, y, scalar = as_points(z)
    acc = np.zeros_like(x)
    for _, inside, term in _dyadic_terms(f, alpha, gamma, beta, x, y, j_min, j_max):
        if term.size:
            acc[inside] += term
    total = f.integral(alpha)
    t = gamma / (2 + alpha)
    first = (math.ldexp(1.0, (j_max + 1)) ** (2 + alpha) / (1 + alpha)) ** (t - 1) * total
    tail = first / (1 - 2.0 ** ((2 + alpha) * (t - 1)))
    tails = np.full_like(acc, tail)
    return DyadicTail(_ret(acc, scalar), _ret(tails, scalar))


def apply_dyadic_Q_split(f: GridFunction, J: DyadicIndex, alpha: float, gamma: float, z,
                         cfg: OperatorConfig | None = None, beta=None):
    """(in, out) parts of Q^beta f(z) relative to J: in sums I inside J, out sums I strictly containing J."""
    _check_params(alpha, gamma)
    cfg = cfg or OperatorConfig()
    if beta is not None and as_beta(beta) != J.beta:
        raise ValueError("J must belong to the grid D^beta")
    box = f.support_box()
    if box is not None:
        q = J.square().region()
        if not q.contains_rect(box):
            raise ValueError("f must be supported in Q_J")
    j_min, j_max = cfg.scale_window
    check_window(f, J.beta, j_max)
    x, y, scalar = as_points(z)
    inner = np.zeros_like(x)
    outer = np.zeros_like(x)
    for j, inside, term in _dyadic_terms(f, alpha, gamma, J.beta, x, y, j_min, j_max):
        if term.size:
            if j <= J.j:
                inner[inside] += term
            else:
                outer[inside] += term
    return _ret(inner, scalar), _ret(outer, scalar)


def apply_dyadic_maximal(f: GridFunction, sigma: Weight | None, alpha: float, gamma: float, beta, z,
                         cfg: OperatorConfig | None = None):
    """Dyadic weighted fractional maximal function over D^beta in the scale window."""
    _check_params(alpha, gamma)
    cfg = cfg or OperatorConfig()
    j_min, j_max = cfg.scale_window
    x, y, scalar = as_points(z)
    best = np.zeros_like(x)
    for _, inside, term in _dyadic_terms(f, alpha, gamma, beta, x, y, j_min, j_max, sigma):
        if term.size:
            best[inside] = np.maximum(best[inside], term)
    return _ret(best, scalar)


def apply_maximal(f: GridFunction, sigma: Weight | None, alpha: float, gamma: float, z,
                  family: Sequence[Interval], chunk: int = 2_000_000):
    """max over I in family with z in Q_I of |Q_I|_{sigma,alpha}^(t-1) int_{Q_I} f sigma dV_alpha.

    An empty family (or no square containing z) gives 0.
    """
    _check_params(alpha, gamma)
    x, y, scalar = as_points(z)
    family = list(family)
    if not family:
        return _ret(np.zeros_like(x), scalar)
    left = np.array([I.left for I in family])
    length = np.array([I.length for I in family])
    right = left + length
    zeros = np.zeros_like(left)
    mass = f.integrate_over(left, right, zeros, length, alpha, sigma)
    if sigma is None:
        qa = dv_alpha_many(left, right, zeros, length, alpha)
    else:
        qa = sigma.integrate_many(left, right, zeros, length, alpha)
    t = gamma / (2 + alpha)
    with np.errstate(divide="ignore", invalid="ignore"):
        value = np.where(mass > 0, qa ** (t - 1) * mass, 0.0)
    best = np.zeros_like(x)
    step = max(1, chunk // len(family))
    for s in range(0, x.size, step):
        xs, ys = x[s:s + step, None], y[s:s + step, None]
        hit = (left[None] <= xs) & (xs < right[None]) & (ys < length[None])
        best[s:s + step] = np.where(hit, value[None], 0.0).max(axis=1)
    return _ret(best, scalar)
