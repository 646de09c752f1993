"""Super-level sets of the dyadic operator as unions of maximal dyadic squares."""

from __future__ import annotations

import numpy as np

from ..geometry import DyadicIndex, as_beta, dyadic_indices_meeting
from ..measure import GridFunction, Weight, dv_alpha_many
from ..operators import OperatorConfig, apply_dyadic_Q, check_window
from .reports import LevelSetReport
from .setup import EvalMesh

__all__ = ["maximal_squares", "level_set_decomposition", "classify_maximal_squares"]


def _index_arrays(level: list[DyadicIndex]):
    left = np.array([float(i.exact_left) for i in level])
    length = np.array([i.length for i in level])
    return left, left + length, np.zeros_like(left), length


def maximal_squares(f: GridFunction, alpha: float, gamma: float, beta, lam: float,
                    cfg: OperatorConfig) -> list[tuple[DyadicIndex, float, float]]:
    """Maximal dyadic I (within the scale window) whose top half carries Q f > lam.

    Q f is constant on each top half T_I, equal to the sum of the terms of
    all squares containing I; that sum grows toward the children, so the
    super-level set is the union of Q_I over the maximal such I.  Returns
    (I, value on T_I, value on T_parent) triples ordered by (j desc, m).
    """
    beta = as_beta(beta)
    j_min, j_max = cfg.scale_window
    check_window(f, beta, j_max)
    box = f.support_box()
    if box is None:
        return []
    t = gamma / (2 + alpha)
    level = list(dyadic_indices_meeting(box.x0, box.x1, beta, j_max))
    inherited = np.zeros(len(level))
    found = []
    j = j_max
    while level:
        x0, x1, y0, y1 = _index_arrays(level)
        mass = f.integrate_over(x0, x1, y0, y1, alpha)
        qa = dv_alpha_many(x0, x1, y0, y1, alpha)
        value = inherited + np.where(mass > 0, qa ** (t - 1) * mass, 0.0)
        nxt, nxt_val = [], []
        for idx, v, parent_v in zip(level, value, inherited):
            if v > lam:
                found.append((idx, float(v), float(parent_v)))
            elif j > j_min:
                for child in idx.children():
                    if float(child.exact_left) < box.x1 and float(child.exact_right) > box.x0:
                        nxt.append(child)
                        nxt_val.append(v)
        level, inherited = nxt, np.array(nxt_val)
        j -= 1
    return found


def _square_measure(idx: DyadicIndex, weight: Weight | None, alpha: float) -> float:
    left = float(idx.exact_left)
    args = (np.array([left]), np.array([left + idx.length]), np.zeros(1), np.array([idx.length]))
    if weight is None:
        return float(dv_alpha_many(*args, alpha)[0])
    return float(weight.integrate_many(*args, alpha)[0])


def classify_maximal_squares(squares: list[DyadicIndex], finer: list[DyadicIndex], q: float,
                             weight: Weight | None, alpha: float) -> dict:
    """Split the lam-maximal squares by |Q_I cap E_{2 lam}|_u >= 2^(-q-1) |Q_I|_u.

    ``finer`` are the 2 lam-maximal squares; each lies inside exactly one
    lam-maximal square because E_{2 lam} is a subset of E_lam.
    """
    first, second = [], []
    fractions = []
    for idx in squares:
        total = _square_measure(idx, weight, alpha)
        inside = sum(_square_measure(k, weight, alpha) for k in finer if idx.contains_index(k))
        frac = inside / total if total > 0 else 0.0
        fractions.append(frac)
        (first if frac >= 2.0 ** (-q - 1) else second).append(idx)
    return {
        "threshold": 2.0 ** (-q - 1),
        "L1": first,
        "L2": second,
        "fractions": fractions,
        "exhaustive": len(first) + len(second) == len(squares),
        "exclusive": not (set(first) & set(second)),
    }


def level_set_decomposition(f: GridFunction, alpha: float, gamma: float, beta, lam: float,
                            cfg: OperatorConfig, mesh: EvalMesh | None = None,
                            weight: Weight | None = None, measure_alpha: float | None = None,
                            q: float | None = None) -> LevelSetReport:
    """Maximal squares of {Q f > lam}, checked against point evaluations of Q f.

    Every mesh point with Q f > lam must lie in exactly one listed square and
    every other mesh point in none; each listed square below the top scale
    needs a point of Q_parent outside Q_I where Q f <= lam.
    """
    beta = as_beta(beta)
    a = alpha if measure_alpha is None else measure_alpha
    found = maximal_squares(f, alpha, gamma, beta, lam, cfg)
    squares = [idx for idx, _, _ in found]
    measure = sum(_square_measure(idx, weight, a) for idx in squares)

    witnesses = []
    parent_failures = 0
    j_max = cfg.scale_window[1]
    for idx, value, _ in found:
        if idx.j == j_max:
            witnesses.append({"square": idx, "parent": None, "note": "parent outside scale window"})
            continue
        parent = idx.parent()
        z0 = (float(parent.exact_left) + 0.5 * parent.length) + 0.75j * parent.length
        q0 = float(apply_dyadic_Q(f, alpha, gamma, beta, z0, cfg).truncated_value)
        ok = q0 <= lam
        parent_failures += 0 if ok else 1
        witnesses.append({"square": idx, "parent": parent, "z0": [z0.real, z0.imag],
                          "value_on_square": value, "value_at_z0": q0, "ok": ok})

    nested = sum(1 for i, outer in enumerate(squares) for inner in squares[i + 1:]
                 if outer.contains_index(inner) or inner.contains_index(outer))

    checked = violations = 0
    if mesh is not None:
        z = mesh.centers()
        z = z[z.imag < 2.0 ** j_max]
        if z.size:
            qv = np.asarray(apply_dyadic_Q(f, alpha, gamma, beta, z, cfg).truncated_value)
            count = np.zeros(z.size, dtype=int)
            for idx in squares:
                left, right = float(idx.exact_left), float(idx.exact_right)
                count += ((z.real >= left) & (z.real < right) & (z.imag < idx.length)).astype(int)
            inside = qv > lam
            violations = int(np.sum(inside & (count != 1)) + np.sum(~inside & (count != 0)))
            checked = int(z.size)

    classification = {}
    if q is not None:
        finer = [idx for idx, _, _ in maximal_squares(f, alpha, gamma, beta, 2 * lam, cfg)]
        classification = classify_maximal_squares(squares, finer, q, weight, a)

    return LevelSetReport(lam, measure, squares, cfg.quad_tol, witnesses, checked, violations,
                          parent_failures, nested, classification)

