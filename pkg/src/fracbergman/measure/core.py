"""The measures dV_alpha, weights, piecewise-constant functions and quadrature."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..geometry import Rectangle

__all__ = [
    "DEFAULT_TOL",
    "DomainError",
    "NumericRangeError",
    "dv_alpha",
    "dv_alpha_many",
    "quad2d",
    "Weight",
    "PowerWeight",
    "GridWeight",
    "ScaledWeight",
    "UNIT_WEIGHT",
    "weight_from_json",
    "integrate_weight",
    "GridFunction",
    "weighted_lp_norm",
    "lp_norm",
]

DEFAULT_TOL = 1e-8


class DomainError(ValueError):
    """Parameters outside the range where a formula is defined."""


class NumericRangeError(ArithmeticError):
    """A finite quantity could not be represented (overflow), as opposed to a divergent one."""


def _check_alpha(alpha: float) -> None:
    if not alpha > -1:
        raise DomainError(f"alpha must exceed -1, got {alpha}")


def _y_moment(y0, y1, t):
    """int_{y0}^{y1} y^t dy, vectorized; inf where the integral diverges at 0."""
    y0 = np.asarray(y0, dtype=float)
    y1 = np.asarray(y1, dtype=float)
    if t > -1:
        with np.errstate(over="raise"):
            try:
                return (y1 ** (t + 1) - y0 ** (t + 1)) / (t + 1)
            except FloatingPointError as exc:
                raise NumericRangeError(f"y-moment of order {t} overflows") from exc
    with np.errstate(divide="ignore", over="ignore"):
        if t == -1:
            out = np.log(y1) - np.log(y0)
        else:
            out = (y1 ** (t + 1) - y0 ** (t + 1)) / (t + 1)
    return np.where(y0 > 0, out, np.inf)


def dv_alpha(rect: Rectangle, alpha: float) -> float:
    """Exact dV_alpha measure of a rectangle."""
    _check_alpha(alpha)
    return float((rect.x1 - rect.x0) * _y_moment(rect.y0, rect.y1, alpha))


def dv_alpha_many(x0, x1, y0, y1, alpha: float) -> np.ndarray:
    _check_alpha(alpha)
    return (np.asarray(x1, float) - np.asarray(x0, float)) * _y_moment(y0, y1, alpha)


# ---------------------------------------------------------------------------
# generic quadrature

_GL = {n: np.polynomial.legendre.leggauss(n) for n in (2, 4, 8)}


def _gauss_rect(fn, x0, x1, y0, y1, alpha, n=8):
    xs, wx = _GL[n]
    xm, xr = 0.5 * (x0 + x1), 0.5 * (x1 - x0)
    ym, yr = 0.5 * (y0 + y1), 0.5 * (y1 - y0)
    X = xm + xr * xs[:, None]
    Y = ym + yr * xs[None, :]
    vals = fn(X, Y) * Y ** alpha
    return float(xr * yr * (wx[:, None] * wx[None, :] * vals).sum())


def quad2d(fn: Callable, rect: Rectangle, alpha: float, tol: float = DEFAULT_TOL,
           max_panels: int = 4000) -> float:
    """int_rect fn(x, y) y^alpha dx dy by adaptive tensor Gauss-Legendre.

    fn must be vectorized.  When the rectangle touches y = 0 the y-range is cut
    into geometric panels [h/2^(k+1), h/2^k]; the unresolved bottom strip is
    estimated from the observed panel ratio and the sweep stops once that
    estimate drops below tol.  Returns inf when the panel ratio shows the
    integral does not converge at the boundary.
    """
    _check_alpha(alpha)
    x0, x1, y0, y1 = rect.as_tuple()

    def adaptive(a, b, depth=0):
        whole = _gauss_rect(fn, x0, x1, a, b, alpha)
        mid = 0.5 * (a + b)
        halves = _gauss_rect(fn, x0, x1, a, mid, alpha) + _gauss_rect(fn, x0, x1, mid, b, alpha)
        if abs(whole - halves) <= max(tol, 1e-13 * abs(halves)) or depth > 30:
            return halves
        return adaptive(a, mid, depth + 1) + adaptive(mid, b, depth + 1)

    if y0 > 0:
        return adaptive(y0, y1)

    total, prev, hi = 0.0, None, y1
    for _ in range(max_panels):
        lo = 0.5 * hi
        panel = adaptive(lo, hi)
        total += panel
        if prev is not None and prev != 0.0:
            ratio = panel / prev
            if ratio >= 1.0 - 1e-9 and lo < 1e-30:
                return math.inf
            if 0 <= ratio < 1:
                remainder = panel * ratio / (1 - ratio)
                if abs(remainder) <= tol:
                    return total + remainder
        elif prev == 0.0 and panel == 0.0:
            return total
        prev, hi = panel, lo
        if lo < 1e-300:
            break
    return math.inf


# ---------------------------------------------------------------------------
# weights

class Weight:
    """A positive function on the upper half-plane.

    Subclasses provide exact integrals against dV_alpha over rectangles and
    exact essential bounds over rectangles.
    """

    def __call__(self, x, y):
        raise NotImplementedError

    def power(self, t: float) -> "Weight":
        raise NotImplementedError

    def integrate_many(self, x0, x1, y0, y1, alpha: float) -> np.ndarray:
        raise NotImplementedError

    def ess_inf_many(self, x0, x1, y0, y1) -> np.ndarray:
        raise NotImplementedError

    def ess_sup_many(self, x0, x1, y0, y1) -> np.ndarray:
        raise NotImplementedError

    def to_json(self) -> dict:
        raise NotImplementedError

    def integrate(self, rect: Rectangle, alpha: float, tol: float = DEFAULT_TOL) -> float:
        return integrate_weight(rect, self, alpha, tol)

    def ess_inf(self, rect: Rectangle) -> float:
        return float(self.ess_inf_many(*map(np.atleast_1d, rect.as_tuple()))[0])

    def ess_sup(self, rect: Rectangle) -> float:
        return float(self.ess_sup_many(*map(np.atleast_1d, rect.as_tuple()))[0])


@dataclass(frozen=True)
class PowerWeight(Weight):
    """w(x + iy) = y^s."""

    s: float

    def __call__(self, x, y):
        return np.broadcast_to(np.asarray(y, float) ** self.s, np.broadcast(x, y).shape)

    def power(self, t: float) -> "PowerWeight":
        return PowerWeight(self.s * t)

    def integrate_many(self, x0, x1, y0, y1, alpha):
        _check_alpha(alpha)
        return (np.asarray(x1, float) - np.asarray(x0, float)) * _y_moment(y0, y1, self.s + alpha)

    def ess_inf_many(self, x0, x1, y0, y1):
        y0 = np.asarray(y0, float)
        y1 = np.asarray(y1, float)
        if self.s > 0:
            return y0 ** self.s
        if self.s < 0:
            return y1 ** self.s
        return np.ones_like(y0)

    def ess_sup_many(self, x0, x1, y0, y1):
        y0 = np.asarray(y0, float)
        y1 = np.asarray(y1, float)
        if self.s > 0:
            return y1 ** self.s
        if self.s < 0:
            with np.errstate(divide="ignore"):
                return np.where(y0 > 0, y0 ** self.s, np.inf)
        return np.ones_like(y0)

    def to_json(self):
        return {"kind": "power", "s": self.s}


UNIT_WEIGHT = PowerWeight(0.0)


@dataclass(frozen=True, eq=False)
class GridWeight(Weight):
    """Piecewise-constant weight on a uniform nx-by-ny mesh of ``window``.

    ``values[i, k]`` is the value on the cell in column i (x) and row k (y).
    Outside the window the weight equals ``outside``.
    """

    window: Rectangle
    values: np.ndarray
    outside: float = 1.0

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or not np.all(v > 0) or not np.all(np.isfinite(v)):
            raise ValueError("grid weight values must be a finite positive 2-D array")
        if not self.outside > 0:
            raise ValueError("outside value must be positive")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def nx(self) -> int:
        return self.values.shape[0]

    @property
    def ny(self) -> int:
        return self.values.shape[1]

    @property
    def xedges(self) -> np.ndarray:
        return np.linspace(self.window.x0, self.window.x1, self.nx + 1)

    @property
    def yedges(self) -> np.ndarray:
        return np.linspace(self.window.y0, self.window.y1, self.ny + 1)

    def __call__(self, x, y):
        x = np.asarray(x, float)
        y = np.asarray(y, float)
        x, y = np.broadcast_arrays(x, y)
        w = self.window
        i = np.floor((x - w.x0) / (w.x1 - w.x0) * self.nx).astype(int)
        k = np.floor((y - w.y0) / (w.y1 - w.y0) * self.ny).astype(int)
        inside = (i >= 0) & (i < self.nx) & (k >= 0) & (k < self.ny)
        out = np.full(x.shape, self.outside)
        out[inside] = self.values[i[inside], k[inside]]
        return out

    def power(self, t: float) -> "GridWeight":
        return GridWeight(self.window, self.values ** t, self.outside ** t)

    def _overlaps(self, x0, x1, y0, y1, alpha):
        x0, x1, y0, y1 = (np.atleast_1d(np.asarray(a, float)) for a in (x0, x1, y0, y1))
        xe, ye = self.xedges, self.yedges
        ox = np.clip(np.minimum(x1[:, None], xe[None, 1:]) - np.maximum(x0[:, None], xe[None, :-1]), 0, None)
        lo = np.maximum(y0[:, None], ye[None, :-1])
        hi = np.minimum(y1[:, None], ye[None, 1:])
        oy = np.where(hi > lo, _y_moment(np.minimum(lo, hi), hi, alpha), 0.0)
        return ox, oy

    def integrate_many(self, x0, x1, y0, y1, alpha):
        _check_alpha(alpha)
        ox, oy = self._overlaps(x0, x1, y0, y1, alpha)
        inside = np.einsum("ni,ik,nk->n", ox, self.values, oy)
        inside_measure = ox.sum(axis=1) * oy.sum(axis=1)
        total = dv_alpha_many(x0, x1, y0, y1, alpha)
        return inside + self.outside * np.clip(total - inside_measure, 0, None)

    def _touching(self, x0, x1, y0, y1):
        x0, x1, y0, y1 = (np.atleast_1d(np.asarray(a, float)) for a in (x0, x1, y0, y1))
        xe, ye = self.xedges, self.yedges
        tx = (np.minimum(x1[:, None], xe[None, 1:]) > np.maximum(x0[:, None], xe[None, :-1]))
        ty = (np.minimum(y1[:, None], ye[None, 1:]) > np.maximum(y0[:, None], ye[None, :-1]))
        w = self.window
        outside = (x0 < w.x0) | (x1 > w.x1) | (y0 < w.y0) | (y1 > w.y1)
        return tx, ty, outside

    def ess_inf_many(self, x0, x1, y0, y1):
        tx, ty, outside = self._touching(x0, x1, y0, y1)
        big = np.where(tx[:, :, None] & ty[:, None, :], self.values[None], np.inf)
        m = big.reshape(len(tx), -1).min(axis=1)
        return np.where(outside, np.minimum(m, self.outside), m)

    def ess_sup_many(self, x0, x1, y0, y1):
        tx, ty, outside = self._touching(x0, x1, y0, y1)
        big = np.where(tx[:, :, None] & ty[:, None, :], self.values[None], -np.inf)
        m = big.reshape(len(tx), -1).max(axis=1)
        return np.where(outside, np.maximum(m, self.outside), m)

    def to_json(self):
        w = self.window
        return {
            "kind": "grid",
            "window": [w.x0, w.x1, w.y0, w.y1],
            "nx": self.nx,
            "ny": self.ny,
            # x varies fastest
            "values": [float(v) for v in self.values.T.ravel()],
            "outside": self.outside,
        }


class ScaledWeight(Weight):
    """w(z)^t for a base weight w; delegates to the base's own power."""

    def __init__(self, base: Weight, t: float):
        self.base = base
        self.t = float(t)
        self._resolved = base.power(self.t)

    def __call__(self, x, y):
        return self._resolved(x, y)

    def power(self, t):
        return ScaledWeight(self.base, self.t * t)

    def integrate_many(self, *args):
        return self._resolved.integrate_many(*args)

    def ess_inf_many(self, *args):
        return self._resolved.ess_inf_many(*args)

    def ess_sup_many(self, *args):
        return self._resolved.ess_sup_many(*args)

    def to_json(self):
        return {"kind": "scaled", "base": self.base.to_json(), "power": self.t}

    def __repr__(self):
        return f"ScaledWeight({self.base!r}, {self.t})"


def weight_from_json(spec: dict) -> Weight:
    kind = spec.get("kind")
    if kind == "power":
        return PowerWeight(float(spec["s"]))
    if kind in ("grid", "gridded"):
        win = Rectangle(*map(float, spec["window"]))
        nx, ny = int(spec["nx"]), int(spec["ny"])
        vals = np.asarray(spec["values"], dtype=float)
        if vals.ndim == 1:
            if vals.size != nx * ny:
                raise ValueError(f"grid weight needs {nx * ny} values, got {vals.size}")
            vals = vals.reshape(ny, nx).T
        return GridWeight(win, vals, float(spec.get("outside", 1.0)))
    if kind == "scaled":
        return ScaledWeight(weight_from_json(spec["base"]), float(spec["power"]))
    raise ValueError(f"unknown weight kind {kind!r}")


def integrate_weight(rect: Rectangle, w: Weight, alpha: float, tol: float = DEFAULT_TOL) -> float:
    """|rect|_{w, alpha} = int_rect w dV_alpha.

    Power weights use the closed form when s + alpha > -1 and fall back to
    adaptive quadrature otherwise (inf when the rectangle reaches y = 0).
    """
    _check_alpha(alpha)
    if not tol > 0:
        raise ValueError("tol must be positive")
    base = w._resolved if isinstance(w, ScaledWeight) else w
    if isinstance(base, PowerWeight) and base.s + alpha <= -1:
        if rect.y0 == 0:
            return math.inf
        return quad2d(base, rect, alpha, tol)
    val = float(base.integrate_many(*map(np.atleast_1d, rect.as_tuple()), alpha)[0])
    if math.isinf(val) and rect.y0 > 0:
        raise NumericRangeError("weight integral overflows")
    return val


# ---------------------------------------------------------------------------
# piecewise-constant functions

@dataclass(frozen=True, eq=False)
class GridFunction:
    """Nonnegative function, constant on the cells of a uniform mesh of ``window``.

    ``values[i, k]`` lives on column i, row k; zero outside the window.
    """

    window: Rectangle
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or np.any(v < 0) or not np.all(np.isfinite(v)):
            raise ValueError("grid function values must be a finite nonnegative 2-D array")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, rect: Rectangle, value: float = 1.0) -> "GridFunction":
        return cls(rect, np.full((1, 1), float(value)))

    @property
    def nx(self) -> int:
        return self.values.shape[0]

    @property
    def ny(self) -> int:
        return self.values.shape[1]

    @property
    def xedges(self) -> np.ndarray:
        return np.linspace(self.window.x0, self.window.x1, self.nx + 1)

    @property
    def yedges(self) -> np.ndarray:
        return np.linspace(self.window.y0, self.window.y1, self.ny + 1)

    def scaled(self, c: float) -> "GridFunction":
        return GridFunction(self.window, self.values * c)

    def is_zero(self) -> bool:
        return not np.any(self.values > 0)

    def __call__(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x, float), np.asarray(y, float))
        w = self.window
        i = np.floor((x - w.x0) / (w.x1 - w.x0) * self.nx).astype(int)
        k = np.floor((y - w.y0) / (w.y1 - w.y0) * self.ny).astype(int)
        inside = (i >= 0) & (i < self.nx) & (k >= 0) & (k < self.ny)
        out = np.zeros(x.shape)
        out[inside] = self.values[i[inside], k[inside]]
        return out

    def cells(self):
        """Flat arrays (x0, x1, y0, y1, value) of all cells."""
        xe, ye = self.xedges, self.yedges
        X0, Y0 = np.meshgrid(xe[:-1], ye[:-1], indexing="ij")
        X1, Y1 = np.meshgrid(xe[1:], ye[1:], indexing="ij")
        return X0.ravel(), X1.ravel(), Y0.ravel(), Y1.ravel(), self.values.ravel()

    def support_box(self) -> Rectangle | None:
        nz = np.argwhere(self.values > 0)
        if nz.size == 0:
            return None
        xe, ye = self.xedges, self.yedges
        (i0, k0), (i1, k1) = nz.min(axis=0), nz.max(axis=0)
        return Rectangle(xe[i0], xe[i1 + 1], ye[k0], ye[k1 + 1])

    def merged_rects(self):
        """Cover the support by few rectangles of constant value.

        Runs of equal values along x are merged first, then identical runs in
        consecutive rows.  Returns arrays (x0, x1, y0, y1, value).
        """
        xe, ye = self.xedges, self.yedges
        out = []
        open_runs: dict[tuple[int, int, float], int] = {}
        for k in range(self.ny + 1):
            row_runs = set()
            if k < self.ny:
                col = self.values[:, k]
                i = 0
                while i < self.nx:
                    v = col[i]
                    if v == 0:
                        i += 1
                        continue
                    i1 = i
                    while i1 + 1 < self.nx and col[i1 + 1] == v:
                        i1 += 1
                    row_runs.add((i, i1, float(v)))
                    i = i1 + 1
            for key in list(open_runs):
                if key not in row_runs:
                    k0 = open_runs.pop(key)
                    out.append((xe[key[0]], xe[key[1] + 1], ye[k0], ye[k], key[2]))
            for key in row_runs:
                open_runs.setdefault(key, k)
        if not out:
            e = np.zeros(0)
            return e, e, e, e, e
        out.sort()
        arr = np.array(out, dtype=float)
        return arr[:, 0], arr[:, 1], arr[:, 2], arr[:, 3], arr[:, 4]

    def integrate_over(self, x0, x1, y0, y1, alpha: float, weight: Weight | None = None,
                       power: float = 1.0) -> np.ndarray:
        """int_{R} f^power w dV_alpha for each rectangle R (vectorized over R)."""
        _check_alpha(alpha)
        x0, x1, y0, y1 = (np.atleast_1d(np.asarray(a, float)) for a in (x0, x1, y0, y1))
        vals = self.values ** power
        if weight is None or (isinstance(weight, PowerWeight) and weight.s == 0):
            xe, ye = self.xedges, self.yedges
            ox = np.clip(np.minimum(x1[:, None], xe[None, 1:]) - np.maximum(x0[:, None], xe[None, :-1]), 0, None)
            lo = np.maximum(y0[:, None], ye[None, :-1])
            hi = np.minimum(y1[:, None], ye[None, 1:])
            oy = np.where(hi > lo, _y_moment(np.minimum(lo, hi), hi, alpha), 0.0)
            return np.einsum("ni,ik,nk->n", ox, vals, oy)
        cx0, cx1, cy0, cy1, cv = self.cells()
        cv = cv ** power
        keep = cv > 0
        cx0, cx1, cy0, cy1, cv = cx0[keep], cx1[keep], cy0[keep], cy1[keep], cv[keep]
        out = np.zeros(len(x0))
        if cv.size == 0:
            return out
        ix0 = np.maximum(x0[:, None], cx0[None])
        ix1 = np.minimum(x1[:, None], cx1[None])
        iy0 = np.maximum(y0[:, None], cy0[None])
        iy1 = np.minimum(y1[:, None], cy1[None])
        hit = (ix1 > ix0) & (iy1 > iy0)
        n, c = np.nonzero(hit)
        if n.size:
            parts = weight.integrate_many(ix0[n, c], ix1[n, c], iy0[n, c], iy1[n, c], alpha) * cv[c]
            np.add.at(out, n, parts)
        return out

    def integral(self, alpha: float, weight: Weight | None = None, power: float = 1.0) -> float:
        w = self.window
        return float(self.integrate_over(w.x0, w.x1, w.y0, w.y1, alpha, weight, power)[0])


def weighted_lp_norm(f: GridFunction, w: Weight, p: float, alpha: float,
                     tol: float = DEFAULT_TOL) -> float:
    """||f||_{p, w, alpha}^p = int |f|^p w dV_alpha (the p-th power of the norm).

    Exact cellwise for piecewise-constant f; inf when w is not integrable on
    the support of f.
    """
    if not p >= 1:
        raise DomainError(f"p must be >= 1, got {p}")
    del tol  # cell integrals are exact
    x0, x1, y0, y1, v = f.cells()
    keep = v > 0
    if not np.any(keep):
        return 0.0
    base = w._resolved if isinstance(w, ScaledWeight) else w
    if isinstance(base, PowerWeight) and base.s + alpha <= -1:
        if np.any(y0[keep] == 0):
            return math.inf
    masses = base.integrate_many(x0[keep], x1[keep], y0[keep], y1[keep], alpha)
    return float(np.sum(v[keep] ** p * masses))


def lp_norm(f: GridFunction, w: Weight, p: float, alpha: float) -> float:
    """(int |f|^p w dV_alpha)^(1/p)."""
    return weighted_lp_norm(f, w, p, alpha) ** (1.0 / p)
