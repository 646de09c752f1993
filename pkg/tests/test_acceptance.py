"""End-to-end acceptance checks; the summary prints one PASS/FAIL line per criterion."""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from fracbergman.cli import main
from fracbergman.geometry import Rectangle
from fracbergman.harness import (
    HarnessConfig,
    OperatorCache,
    covering_check,
    bekolle_suite_weights,
    default_suite,
    level_set_decomposition,
    maximal_squares,
    necessity_sequence,
    p0q0_experiment,
    reverse_doubling_check,
    sparse_domination_check,
    strong_inequality_experiment,
    weak_inequality_experiment_P,
    weak_inequality_experiment_T,
)
from fracbergman.harness.setup import EvalMesh
from fracbergman.measure import (
    GridFunction,
    PowerWeight,
    bekolle_constant,
    bpq_constant,
    conjugate,
    exponents_from,
    p0q0,
    power_bpq_closed_form,
)
from fracbergman.operators import OperatorConfig

CFG = HarnessConfig()
SUITE = default_suite()


def rel(a, b):
    return abs(a - b) / abs(b)


@pytest.mark.criterion("exponent arithmetic on the (alpha, gamma, p) grid")
def test_exponent_arithmetic():
    start = time.perf_counter()
    checked = 0
    for alpha in (-0.5, 0.0, 1.0, 2.5):
        for gamma in (0.0, 0.5, 1.0):
            if not gamma < 2 + alpha:
                continue
            # ten points in [1, (2+alpha)/gamma), or [1, 8] when gamma = 0
            ps = np.linspace(1.0, (2 + alpha) / gamma, 11)[:10] if gamma > 0 else np.linspace(1.0, 8.0, 10)
            for p in ps:
                ex = exponents_from(alpha, gamma, float(p))
                t = gamma / (2 + alpha)
                assert abs((1 / ex.p - 1 / ex.q) - t) <= 1e-12 * max(t, 1 / ex.p)
                if p > 1:
                    assert rel(ex.r, 1 + ex.q / conjugate(p)) <= 1e-12
                assert abs(ex.eta - ((2 + alpha) * (ex.q / p - 1) + alpha)) <= 1e-12 * max(1, abs(ex.eta))
                checked += 1
            if gamma > 0:
                p0, q0 = p0q0(alpha, gamma)
                assert abs(1 / q0 - (1 / p0 - t)) <= 1e-12
                assert rel(exponents_from(alpha, gamma, p0).q, q0) <= 1e-12
    p0, q0 = p0q0(0.0, 1.0)
    assert rel(p0, 1.2) <= 1e-12 and rel(q0, 3.0) <= 1e-12
    assert checked == 120
    assert time.perf_counter() - start < 1.0


ADMISSIBLE = [
    (0.0, 2.0, 2.0, 0.0), (0.25, 2.0, 2.0, 0.0), (-0.25, 2.0, 2.0, 0.0),
    (0.125, 1.5, 3.0, 0.0), (-0.125, 1.5, 3.0, 0.0), (0.1, 1.5, 2.25, -0.5),
    (-0.1, 3.0, 4.0, -0.5), (0.3, 2.0, 4.0, 1.0), (-0.3, 2.0, 4.0, 1.0),
    (0.5, 3.0, 3.0, 2.5), (-0.5, 4.0, 6.0, 2.5), (0.2, 1.25, 1.6, 1.0),
]


@pytest.mark.criterion("weight constants vs closed forms, 2/sqrt(3) value, class relation")
def test_weight_constants():
    start = time.perf_counter()
    family = CFG.family()
    for s, p, q, alpha in ADMISSIBLE:
        got = bpq_constant(PowerWeight(s), p, q, alpha, family).value
        assert rel(got, power_bpq_closed_form(s, p, q, alpha)) <= 1e-6
    got = bpq_constant(PowerWeight(0.25), 2.0, 2.0, 0.0, family).value
    assert rel(got, 2 / math.sqrt(3)) <= 1e-6
    for p, q, alpha in ((1.5, 3.0, 0.0), (2.0, 4.0, 1.0)):
        r = 1 + q / conjugate(p)
        for w in bekolle_suite_weights(p, alpha):
            lhs = bekolle_constant(w.power(q), r, alpha, family).value
            rhs = bpq_constant(w, p, q, alpha, family).value ** q
            # weights outside the class diverge on both sides
            assert math.isfinite(lhs) == math.isfinite(rhs)
            if math.isfinite(rhs):
                assert rel(lhs, rhs) <= 1e-9
    assert time.perf_counter() - start < 10.0


@pytest.mark.criterion("Carleson-square bound and reverse doubling on 1000 squares")
def test_reverse_doubling():
    start = time.perf_counter()
    rep = reverse_doubling_check(n_squares=1000)
    assert rep.passed and rep.lhs == 0
    assert time.perf_counter() - start < 10.0


@pytest.mark.criterion("covering of 10^4 random intervals")
def test_covering():
    start = time.perf_counter()
    rep = covering_check(n=10_000)
    assert rep.passed and rep.lhs == 0
    assert time.perf_counter() - start < 5.0


@pytest.mark.criterion("sparse domination ratio finite and stable")
def test_sparse_domination():
    start = time.perf_counter()
    rep = sparse_domination_check(SUITE[:3], 0.0, [0.0, 1.0], CFG)
    assert rep.passed and rep.lhs < 0.15
    assert math.isfinite(rep.witnesses["max_ratio"]) and rep.witnesses["max_ratio"] > 0
    assert time.perf_counter() - start < 120.0


@pytest.mark.criterion("strong bound at (0, 1, 1.5) and divergent-weight necessity")
def test_strong_bound_and_necessity():
    weights = [PowerWeight(0.0), PowerWeight(0.125), PowerWeight(0.25)]
    rep = strong_inequality_experiment(0.0, 1.0, 1.5, weights, SUITE[:3], CFG, OperatorCache())
    assert rep.passed and rep.lhs < CFG.c_max
    assert all(c.details["drift"] < 0.15 for c in rep.cases)
    nec = necessity_sequence(0.0, 1.0, 1.5, 1.0, CFG)
    ratios = nec.witnesses["ratios"]
    assert len(ratios) == 8 and all(b > a for a, b in zip(ratios, ratios[1:]))


@pytest.mark.criterion("weak-type bounds for T and P+ with stable lambda-grid sup")
def test_weak_bounds():
    start = time.perf_counter()
    weights = [PowerWeight(0.0), PowerWeight(-0.125), PowerWeight(-0.25)]
    cache = OperatorCache()
    rt = weak_inequality_experiment_T(0.0, 1.0, weights, SUITE, CFG, cache=cache)
    rp = weak_inequality_experiment_P(0.0, 1.0, weights, SUITE, CFG, cache=cache)
    for rep in (rt, rp):
        assert rep.passed and all(c.passed for c in rep.cases)
        assert all(c.details["drift"] < 0.15 for c in rep.cases)
    assert {c.parameter.rsplit("e=", 1)[1] for c in rt.cases} == {"q", "q^2"}
    assert {c.parameter.rsplit("e=", 1)[1] for c in rp.cases} == {"2q-1"}
    assert time.perf_counter() - start < 120.0


@pytest.mark.criterion("special pair (p0, q0) with exponent q0 = 3 < 6.5")
def test_p0q0():
    weights = [PowerWeight(0.0), PowerWeight(0.1)]
    rep = p0q0_experiment(0.0, 1.0, weights, SUITE[:3], CFG, OperatorCache())
    assert rep.passed
    ex = rep.witnesses["exponents"]
    assert ex["q0"] == pytest.approx(3.0, rel=1e-12)
    assert ex["strong"] == pytest.approx(6.5, rel=1e-12)
    assert ex["q0_below_strong"]


@pytest.mark.criterion("level-set decomposition matches hand enumeration")
def test_level_set():
    f = GridFunction.constant(Rectangle(0.0, 1.0, 0.0, 1.0))
    ocfg = OperatorConfig()
    found = sorted((i.exact_left, i.exact_right) for i, _, _ in maximal_squares(f, 0.0, 0.0, 0, 1.5, ocfg))
    assert found == [(0, Fraction(1, 2)), (Fraction(1, 2), 1)]
    for beta in (0, Fraction(1, 3)):
        rep = level_set_decomposition(f, 0.0, 0.0, beta, 1.5, ocfg, EvalMesh(CFG.window, 128, 128))
        assert rep.passed and rep.parent_failures == 0 and rep.mesh_violations == 0
        assert all(w["ok"] for w in rep.parent_witnesses)


@pytest.mark.criterion("byte-identical results.csv across identical runs")
def test_determinism(tmp_path):
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert main(["experiment", "--theorem", "weak-P", "--seed", "11", "--out", str(out)]) == 0
        outs.append((out / "results.csv").read_bytes())
    assert outs[0] == outs[1] and len(outs[0]) > 0
