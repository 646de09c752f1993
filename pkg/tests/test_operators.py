import math

import hypothesis.strategies as st
import numpy as np
import pytest
from hypothesis import given, settings
from scipy import integrate

from fracbergman.geometry import DyadicIndex, Interval, Rectangle
from fracbergman.measure import DomainError, GridFunction, PowerWeight
from fracbergman.operators import (
    OperatorConfig,
    WindowTooSmallError,
    apply_dyadic_maximal,
    apply_dyadic_Q,
    apply_dyadic_Q_split,
    apply_maximal,
    apply_P_plus,
    apply_T,
    check_window,
    geometric_tail_constant,
    kernel,
    maximal_to_T_constant,
)

UNIT = Rectangle(0.0, 1.0, 0.0, 1.0)
CFG = OperatorConfig(quad_tol=1e-9, scale_window=(-3, 3))


def dblquad_T(rect, z, alpha, gamma, value=1.0):
    e = 2 + alpha - gamma
    fn = lambda v, u: value * v ** alpha / ((z.real - u) ** 2 + (z.imag + v) ** 2) ** (e / 2)
    return integrate.dblquad(fn, rect.x0, rect.x1, rect.y0, rect.y1, epsabs=1e-13, epsrel=1e-12)[0]


def test_kernel_values():
    assert kernel(0.5j, 0.5j, 0.0, 0.0) == pytest.approx(1.0)
    assert kernel(1j, 1j, 0.0, 0.0) == pytest.approx(0.25)
    assert kernel(1 + 1j, 1j, 1.0, 1.0) == pytest.approx(1 / 5)


def test_kernel_rejects_lower_half_plane():
    with pytest.raises(DomainError):
        kernel(1 - 1j, 1j, 0.0, 0.0)


@pytest.mark.parametrize("alpha,gamma", [(-0.5, 0.0), (0.0, 0.0), (0.0, 1.0), (1.0, 0.5), (2.5, 1.0)])
def test_T_matches_scipy_interior(alpha, gamma):
    rect = Rectangle(0.2, 0.8, 0.3, 0.9)
    f = GridFunction.constant(rect, 2.0)
    z = 0.4 + 0.1j
    got = apply_T(f, alpha, gamma, z, CFG)
    assert got == pytest.approx(dblquad_T(rect, z, alpha, gamma, 2.0), rel=1e-8)


@pytest.mark.parametrize("alpha", [-0.5, 0.0, 1.0])
def test_T_matches_scipy_boundary_support(alpha):
    f = GridFunction.constant(UNIT)
    z = 0.5 + 0.01j
    got = apply_T(f, alpha, 0.0, z, CFG)
    assert got == pytest.approx(dblquad_T(UNIT, z, alpha, 0.0), rel=1e-8)


def test_P_plus_is_T_at_gamma_zero():
    f = GridFunction.constant(UNIT)
    z = np.array([0.3 + 0.2j, 2.0 + 1.0j])
    assert np.allclose(apply_P_plus(f, 0.5, z, CFG), apply_T(f, 0.5, 0.0, z, CFG), rtol=1e-12)


def test_T_linearity():
    rng = np.random.default_rng(0)
    win = Rectangle(-1.0, 1.0, 0.0, 2.0)
    f = GridFunction(win, rng.uniform(0, 1, (4, 4)))
    g = GridFunction(win, rng.uniform(0, 1, (4, 4)))
    h = GridFunction(win, 2 * f.values + 3 * g.values)
    z = np.array([0.1 + 0.5j, -0.7 + 0.05j, 3 + 3j])
    lhs = apply_T(h, 0.0, 1.0, z, CFG)
    rhs = 2 * apply_T(f, 0.0, 1.0, z, CFG) + 3 * apply_T(g, 0.0, 1.0, z, CFG)
    assert np.allclose(lhs, rhs, rtol=1e-7)


@given(st.floats(min_value=-2, max_value=3), st.floats(min_value=0.01, max_value=4))
@settings(max_examples=20, deadline=None)
def test_T_monotone_in_support(x, y):
    small = GridFunction.constant(Rectangle(0.0, 0.5, 0.0, 0.5))
    big = GridFunction.constant(Rectangle(0.0, 1.0, 0.0, 1.0))
    z = complex(x, y)
    assert apply_T(small, 0.0, 1.0, z, CFG) <= apply_T(big, 0.0, 1.0, z, CFG) * (1 + 1e-8)


def test_T_translation_invariance():
    f = GridFunction.constant(UNIT)
    g = GridFunction.constant(Rectangle(3.0, 4.0, 0.0, 1.0))
    assert apply_T(f, 0.0, 0.5, 0.3 + 0.4j, CFG) == pytest.approx(apply_T(g, 0.0, 0.5, 3.3 + 0.4j, CFG), rel=1e-8)


def test_T_rejects_boundary_point():
    with pytest.raises(DomainError):
        apply_T(GridFunction.constant(UNIT), 0.0, 0.0, 0.5 + 0j, CFG)


# dyadic model ----------------------------------------------------------------
# f = 1 on Q_[0,1), alpha = gamma = 0: each square Q_I of D^0 holding [0,1)
# contributes |Q_[0,1)| / |Q_I| = 4^-j, and squares inside it contribute 1.

def test_dyadic_Q_top_half_hand_value():
    f = GridFunction.constant(UNIT)
    got = apply_dyadic_Q(f, 0.0, 0.0, 0, 0.5 + 0.75j, CFG)
    assert float(got.truncated_value) == 1 + 1 / 4 + 1 / 16 + 1 / 64
    assert float(got.tail_bound) == pytest.approx(4.0 ** -4 * 4 / 3, rel=1e-12)


def test_dyadic_Q_bottom_half_hand_value():
    f = GridFunction.constant(UNIT)
    got = apply_dyadic_Q(f, 0.0, 0.0, 0, 0.3 + 0.25j, CFG)
    # [0,1/2) and [0,1) contribute 1 each; y = 0.25 is not below |[0,1/4)|
    assert float(got.truncated_value) == 2 + 1 / 4 + 1 / 16 + 1 / 64


def test_dyadic_Q_split_sums_to_whole():
    f = GridFunction.constant(UNIT)
    J = DyadicIndex(0, 0, 0)
    z = 0.5 + 0.75j
    inside, outside = apply_dyadic_Q_split(f, J, 0.0, 0.0, z, CFG)
    assert inside == pytest.approx(1.0)
    assert outside == pytest.approx(1 / 4 + 1 / 16 + 1 / 64)


def test_dyadic_Q_zero_off_support_squares():
    f = GridFunction.constant(UNIT)
    got = apply_dyadic_Q(f, 0.0, 0.0, 0, -0.5 + 0.5j, CFG)
    assert float(got.truncated_value) == 0.0


def test_window_too_small():
    f = GridFunction.constant(Rectangle(0.0, 3.0, 0.0, 1.0))
    with pytest.raises(WindowTooSmallError):
        check_window(f, 0, 0)
    with pytest.raises(WindowTooSmallError):
        apply_dyadic_Q(f, 0.0, 0.0, 0, 1 + 1j, OperatorConfig(scale_window=(-2, 0)))


def test_tail_constant_formula():
    t = 1 / 2
    assert geometric_tail_constant(0.0, 1.0) == pytest.approx(1 / (1 - 2.0 ** (2 * (t - 1))))


@given(st.floats(min_value=-1.4, max_value=2.4), st.floats(min_value=0.01, max_value=3.9))
@settings(max_examples=30, deadline=None)
def test_sparse_bound_pointwise(x, y):
    f = GridFunction.constant(UNIT)
    z = complex(x, y)
    cfg = OperatorConfig(quad_tol=1e-7, scale_window=(-12, 8))
    q = sum(float(apply_dyadic_Q(f, 0.0, 1.0, b, z, cfg).upper) for b in (0, 1 / 3))
    t = apply_T(f, 0.0, 1.0, z, cfg)
    assert 0 < t <= 20 * q


# maximal functions -------------------------------------------------------------

def test_dyadic_maximal_hand_value():
    f = GridFunction.constant(UNIT)
    # at gamma = 0 the maximal average over dyadic squares holding z is 1
    got = apply_dyadic_maximal(f, None, 0.0, 0.0, 0, 0.5 + 0.75j, CFG)
    assert float(got) == pytest.approx(1.0)


def test_maximal_dominates_dyadic_maximal():
    f = GridFunction.constant(UNIT)
    z = np.array([0.5 + 0.75j, 0.25 + 0.1j, 1.5 + 1.0j])
    family = [idx.interval() for b in (0, 1 / 3) for j in range(-3, 4)
              for idx in (DyadicIndex(b, j, m) for m in range(-20, 20))]
    m = apply_maximal(f, None, 0.0, 0.0, z, family)
    md = apply_dyadic_maximal(f, None, 0.0, 0.0, 0, z, CFG)
    assert np.all(m >= md - 1e-12)


def test_weighted_maximal_uses_sigma():
    f = GridFunction.constant(UNIT)
    fam = [Interval(0.0, 1.0)]
    got = apply_maximal(f, PowerWeight(1.0), 0.0, 0.0, np.array([0.5 + 0.5j]), fam)
    # sigma-average of f over Q_[0,1) times |Q|^t with t = 0
    assert float(got[0]) == pytest.approx(1.0)


def test_maximal_to_T_constant_value():
    assert maximal_to_T_constant(0.0, 1.0) == pytest.approx(math.sqrt(5.0))
