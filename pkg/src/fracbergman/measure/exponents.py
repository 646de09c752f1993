"""Exponent bookkeeping for the strong, weak and special-pair estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .core import DomainError

__all__ = ["Exponents", "exponents_from", "conjugate", "p0q0"]


def conjugate(p: float) -> float:
    """Hoelder conjugate p' with 1/p + 1/p' = 1 (inf for p = 1)."""
    if p < 1:
        raise DomainError(f"exponent must be >= 1, got {p}")
    return math.inf if p == 1 else p / (p - 1)


@dataclass(frozen=True)
class Exponents:
    alpha: float
    gamma: float
    p: float
    q: float
    p_prime: float
    q_prime: float
    r: float
    eta: float

    @property
    def ratio(self) -> float:
        """gamma / (2 + alpha)."""
        return self.gamma / (2 + self.alpha)

    @property
    def weak(self) -> bool:
        return self.p == 1

    @property
    def strong_exponent(self) -> float:
        """Power of [w]_{B_{p,q,alpha}} in the strong bound: 1 + p'/p + q/p'."""
        if self.weak:
            return math.nan
        return 1 + self.p_prime / self.p + self.q / self.p_prime

    @property
    def weak_exponents(self) -> dict[str, float]:
        """Candidate powers of [w]_{B_{1,q,alpha}} for the weak bounds."""
        return {"T_q": self.q, "T_q2": self.q ** 2, "P": 2 * self.q - 1}


def exponents_from(alpha: float, gamma: float, p: float) -> Exponents:
    """Solve 1/p - 1/q = gamma/(2+alpha) and derive p', q', r, eta."""
    if not alpha > -1:
        raise DomainError(f"alpha must exceed -1, got {alpha}")
    if not 0 <= gamma < 2 + alpha:
        raise DomainError(f"gamma must lie in [0, 2+alpha), got {gamma}")
    if not p >= 1:
        raise DomainError(f"p must be >= 1, got {p}")
    t = gamma / (2 + alpha)
    inv_q = 1 / p - t
    if not inv_q > 0:
        raise DomainError(f"p={p} must be below (2+alpha)/gamma={(2 + alpha) / gamma}")
    q = 1 / inv_q
    pp = conjugate(p)
    qp = conjugate(q)
    r = 1 + q / pp
    eta = (2 + alpha) * (q / p - 1) + alpha
    return Exponents(alpha, gamma, p, q, pp, qp, r, eta)


def p0q0(alpha: float, gamma: float) -> tuple[float, float]:
    """The special pair (p0, q0) depending only on t = gamma/(2+alpha)."""
    if not alpha > -1:
        raise DomainError(f"alpha must exceed -1, got {alpha}")
    if not 0 < gamma < 2 + alpha:
        raise DomainError(f"gamma must lie in (0, 2+alpha), got {gamma}")
    t = gamma / (2 + alpha)
    p0 = (2 - t) / (t - t * t + 1)
    q0 = (2 - t) / (1 - t)
    return p0, q0
