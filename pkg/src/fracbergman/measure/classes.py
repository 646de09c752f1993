"""Bekolle-Bonami type constants over finite interval families.

The true constants are suprema over all intervals.  Here they are maxima over
a finite family, so every reported value is a lower bound on the true one
(and exact for power weights, whose brackets do not depend on the square).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from ..geometry import BETAS, Interval, dyadic_indices_meeting
from .core import DEFAULT_TOL, DomainError, PowerWeight, ScaledWeight, Weight, dv_alpha_many
from .exponents import conjugate

__all__ = [
    "WeightConstantReport",
    "interval_family",
    "square_averages",
    "bpq_constant",
    "b1q_constant",
    "bekolle_constant",
    "b1_constant",
    "carleson_constant",
    "reverse_doubling_theta",
    "power_bpq_closed_form",
    "power_bekolle_closed_form",
    "power_b1q_closed_form",
    "closed_form_for",
]


@dataclass(frozen=True)
class WeightConstantReport:
    value: float
    witness: Interval | None
    family_size: int
    quad_tolerance: float

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)

    def to_dict(self) -> dict:
        w = self.witness
        return {
            "value": self.value,
            "witness": None if w is None else [w.left, w.length],
            "family_size": self.family_size,
            "tolerance": self.quad_tolerance,
        }


def interval_family(x0: float, x1: float, j_min: int, j_max: int,
                    n_random: int = 1000, seed: int = 0) -> list[Interval]:
    """Dyadic intervals of both grids meeting [x0, x1) at scales j_min..j_max,
    plus n_random intervals with left ends uniform in [x0, x1) and log-uniform
    lengths in [2^j_min, 2^j_max]."""
    fam = []
    for beta in BETAS:
        for j in range(j_min, j_max + 1):
            fam.extend(idx.interval() for idx in dyadic_indices_meeting(x0, x1, beta, j))
    rng = np.random.default_rng(seed)
    lefts = rng.uniform(x0, x1, n_random)
    lengths = np.exp2(rng.uniform(j_min, j_max, n_random))
    fam.extend(Interval(float(a), float(b)) for a, b in zip(lefts, lengths))
    return fam


def _family_arrays(family: Sequence[Interval]):
    left = np.array([I.left for I in family], float)
    length = np.array([I.length for I in family], float)
    return left, left + length, np.zeros_like(left), length


def square_averages(w: Weight, family: Sequence[Interval], alpha: float) -> np.ndarray:
    """(1/|Q_I|_alpha) int_{Q_I} w dV_alpha for each I (inf when divergent)."""
    x0, x1, y0, y1 = _family_arrays(family)
    with np.errstate(over="ignore", invalid="ignore"):
        return w.integrate_many(x0, x1, y0, y1, alpha) / dv_alpha_many(x0, x1, y0, y1, alpha)


def _argmax_report(values: np.ndarray, family: Sequence[Interval], tol: float) -> WeightConstantReport:
    values = np.where(np.isnan(values), np.inf, values)
    k = int(np.argmax(values))  # first maximal index wins
    return WeightConstantReport(float(values[k]), family[k], len(family), tol)


def _require_family(family):
    family = list(family)
    if not family:
        raise ValueError("interval family must be nonempty")
    return family


def _resolve(w: Weight) -> Weight:
    return w._resolved if isinstance(w, ScaledWeight) else w


def bpq_constant(w: Weight, p: float, q: float, alpha: float, family: Iterable[Interval],
                 tol: float = DEFAULT_TOL) -> WeightConstantReport:
    """max_I (avg_{Q_I} w^q)^(1/q) (avg_{Q_I} w^(-p'))^(1/p')."""
    if not p > 1:
        raise DomainError("B_{p,q,alpha} needs p > 1")
    family = _require_family(family)
    w = _resolve(w)
    pp = conjugate(p)
    a = square_averages(w.power(q), family, alpha)
    b = square_averages(w.power(-pp), family, alpha)
    with np.errstate(over="ignore", invalid="ignore"):
        vals = a ** (1 / q) * b ** (1 / pp)
    return _argmax_report(vals, family, tol)


def b1q_constant(w: Weight, q: float, alpha: float, family: Iterable[Interval],
                 tol: float = DEFAULT_TOL) -> WeightConstantReport:
    """max_I (avg_{Q_I} w^q)^(1/q) * ess sup_{Q_I} 1/w."""
    if not q >= 1:
        raise DomainError("B_{1,q,alpha} needs q >= 1")
    family = _require_family(family)
    w = _resolve(w)
    a = square_averages(w.power(q), family, alpha)
    x0, x1, y0, y1 = _family_arrays(family)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        inv_sup = 1.0 / w.ess_inf_many(x0, x1, y0, y1)
        vals = a ** (1 / q) * inv_sup
    return _argmax_report(vals, family, tol)


def bekolle_constant(w: Weight, p: float, alpha: float, family: Iterable[Interval],
                     tol: float = DEFAULT_TOL) -> WeightConstantReport:
    """max_I (avg_{Q_I} w)(avg_{Q_I} w^(1-p'))^(p-1)."""
    if not p > 1:
        raise DomainError("the Bekolle-Bonami class needs p > 1")
    family = _require_family(family)
    w = _resolve(w)
    pp = conjugate(p)
    a = square_averages(w, family, alpha)
    b = square_averages(w.power(1 - pp), family, alpha)
    with np.errstate(over="ignore", invalid="ignore"):
        vals = a * b ** (p - 1)
    return _argmax_report(vals, family, tol)


def b1_constant(w: Weight, alpha: float, family: Iterable[Interval],
                tol: float = DEFAULT_TOL) -> WeightConstantReport:
    """max_I (avg_{Q_I} w) * ess sup_{Q_I} 1/w, the p = 1 class."""
    return b1q_constant(w, 1.0, alpha, family, tol)


def carleson_constant(p: float, alpha: float) -> float:
    """max{2, (2^(1+alpha) / (2^(1+alpha) - 1))^p}."""
    if not alpha > -1:
        raise DomainError(f"alpha must exceed -1, got {alpha}")
    a = 2.0 ** (1 + alpha)
    return max(2.0, (a / (a - 1)) ** p)


def reverse_doubling_theta(p: float, alpha: float, bekolle: float) -> float:
    """theta = 1 - 1/(C_{p,alpha} [w]); lies in (0, 1) for [w] >= 1."""
    if not bekolle >= 1:
        raise DomainError(f"a Bekolle-Bonami constant is >= 1, got {bekolle}")
    return 1 - 1 / (carleson_constant(p, alpha) * bekolle)


# closed forms for y^s -------------------------------------------------------

def _avg_power(t: float, alpha: float) -> float:
    """avg over any Q_I of y^t, divided by |I|^t."""
    return (alpha + 1) / (t + alpha + 1) if t + alpha > -1 else math.inf


def power_bpq_closed_form(s: float, p: float, q: float, alpha: float) -> float:
    pp = conjugate(p)
    return _avg_power(q * s, alpha) ** (1 / q) * _avg_power(-pp * s, alpha) ** (1 / pp)


def power_bekolle_closed_form(s: float, p: float, alpha: float) -> float:
    pp = conjugate(p)
    return _avg_power(s, alpha) * _avg_power((1 - pp) * s, alpha) ** (p - 1)


def power_b1q_closed_form(s: float, q: float, alpha: float) -> float:
    if s > 0:
        return math.inf
    # ess sup of y^{-s} over Q_I is |I|^{-s}
    return _avg_power(q * s, alpha) ** (1 / q)


def closed_form_for(w: Weight) -> PowerWeight | None:
    w = _resolve(w)
    return w if isinstance(w, PowerWeight) else None
