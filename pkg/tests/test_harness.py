import json
import math
from fractions import Fraction

import numpy as np
import pytest

from fracbergman.geometry import Rectangle
from fracbergman.harness import (
    CaseResult,
    EvalMesh,
    FloorPlusSpec,
    HarnessConfig,
    IndicatorSpec,
    InequalityReport,
    TentSpec,
    classify_maximal_squares,
    default_suite,
    duality_averages,
    floored_suite,
    function_spec_from_json,
    json_number,
    lambda_sup,
    lemma24_condition_c,
    level_set_decomposition,
    maximal_squares,
    mesh_norm,
    sample_points,
    stability_report,
    to_measured_tree,
    weight_label,
)
from fracbergman.measure import GridFunction, PowerWeight, dv_alpha, interval_family
from fracbergman.operators import OperatorConfig

UNIT = Rectangle(0.0, 1.0, 0.0, 1.0)
WINDOW = Rectangle(-1.5, 2.5, 0.0, 4.0)


def endpoints(found):
    return sorted((idx.exact_left, idx.exact_right) for idx, _, _ in found)


# level sets --------------------------------------------------------------------

def test_level_set_hand_enumeration_grid_zero():
    f = GridFunction.constant(UNIT)
    found = maximal_squares(f, 0.0, 0.0, 0, 1.5, OperatorConfig())
    assert endpoints(found) == [(0, Fraction(1, 2)), (Fraction(1, 2), 1)]


def test_level_set_hand_enumeration_grid_third():
    f = GridFunction.constant(UNIT)
    found = maximal_squares(f, 0.0, 0.0, Fraction(1, 3), 1.5, OperatorConfig())
    assert endpoints(found) == [
        (Fraction(-1, 6), Fraction(1, 12)),
        (Fraction(1, 12), Fraction(1, 3)),
        (Fraction(1, 3), Fraction(5, 6)),
        (Fraction(5, 6), Fraction(13, 12)),
    ]


@pytest.mark.parametrize("beta", [0, Fraction(1, 3)])
def test_level_set_report_consistent_with_point_values(beta):
    f = GridFunction.constant(UNIT)
    rep = level_set_decomposition(f, 0.0, 0.0, beta, 1.5, OperatorConfig(), EvalMesh(WINDOW, 64, 64), q=2.0)
    assert rep.passed
    assert rep.mesh_points_checked == 64 * 64
    assert all(w["ok"] for w in rep.parent_witnesses)
    assert rep.classification["exhaustive"] and rep.classification["exclusive"]


def test_level_set_measure_grid_zero():
    f = GridFunction.constant(UNIT)
    rep = level_set_decomposition(f, 0.0, 0.0, 0, 1.5, OperatorConfig())
    assert rep.super_level_measure == pytest.approx(2 * 0.25)


def test_classification_threshold():
    f = GridFunction.constant(UNIT)
    cfg = OperatorConfig()
    squares = [i for i, _, _ in maximal_squares(f, 0.0, 0.0, 0, 1.5, cfg)]
    finer = [i for i, _, _ in maximal_squares(f, 0.0, 0.0, 0, 3.0, cfg)]
    cls = classify_maximal_squares(squares, finer, 2.0, None, 0.0)
    assert cls["threshold"] == 2.0 ** -3
    assert len(cls["L1"]) + len(cls["L2"]) == len(squares)


def test_empty_level_set():
    f = GridFunction.constant(UNIT)
    assert maximal_squares(f, 0.0, 0.0, 0, 100.0, OperatorConfig(scale_window=(-3, 3))) == []


# duality ------------------------------------------------------------------------

def test_duality_routes_agree():
    f = GridFunction.constant(UNIT)
    g = GridFunction.constant(Rectangle(0.0, 0.5, 0.0, 0.5))
    res = duality_averages(f, g, PowerWeight(0.0), PowerWeight(0.0), 0.0, 0.0, 0)
    assert res.discrepancy <= 1e-8


def test_duality_single_scale():
    f = GridFunction.constant(UNIT)
    res = duality_averages(f, f, PowerWeight(0.0), PowerWeight(0.0), 0.0, 0.0, 0, scale_window=(0, 0))
    assert res.direct == pytest.approx(1.0)
    assert res.decomposed == pytest.approx(1.0, rel=1e-8)


def test_lemma24_unweighted():
    fam = interval_family(-1, 2, -4, 4, 50)
    rep = lemma24_condition_c(PowerWeight(0.0), PowerWeight(0.0), 0.0, 2.0, 2.0, 0.0, 0.0, fam)
    assert rep.lhs == pytest.approx(1.0)
    assert rep.passed


# test functions ------------------------------------------------------------------

def test_indicator_realization_exact_mass():
    spec = IndicatorSpec([(0.0, 1.0)], (), "ind")
    f = spec.realize(WINDOW, (32, 32), 0.5)
    assert f.integral(0.5) == pytest.approx(dv_alpha(UNIT, 0.5), rel=1e-12)


def test_tent_peak_and_support():
    spec = TentSpec((0.5, 0.5), 0.25, 0.25, 1.0, "tent")
    f = spec.realize(WINDOW, (64, 64), 0.0)
    # the nearest cell center sits 1/32 from the peak, so 1 - (1/32)/0.25
    assert f.values.max() == pytest.approx(0.875)
    box = f.support_box()
    assert box.x0 >= 0.25 - 1e-12 and box.x1 <= 0.75 + 1e-12


def test_floor_plus_adds_floor():
    base = IndicatorSpec([(0.0, 1.0)], (), "ind")
    f = FloorPlusSpec(base, 1e-3, "fl").realize(WINDOW, (8, 8), 0.0)
    assert f.values.min() == pytest.approx(1e-3)


def test_function_json_round_trip():
    for spec in default_suite() + floored_suite(default_suite()):
        again = function_spec_from_json(json.loads(json.dumps(spec.to_json())))
        assert again.to_json() == spec.to_json()


def test_function_outside_window_rejected():
    with pytest.raises(ValueError):
        IndicatorSpec([(5.0, 1.0)], (), "far").realize(WINDOW, (8, 8), 0.0)


# mesh and reports -----------------------------------------------------------------

def test_mesh_cell_measures_sum():
    m = EvalMesh(Rectangle(0, 2, 0, 1), 4, 3)
    assert m.cell_measures(PowerWeight(0.0), 1.0).sum() == pytest.approx(dv_alpha(Rectangle(0, 2, 0, 1), 1.0))
    assert m.refined().nx == 8


def test_sample_points_deterministic_and_inside():
    a = sample_points(WINDOW, 100, 2.0 ** -10, 7)
    b = sample_points(WINDOW, 100, 2.0 ** -10, 7)
    assert np.array_equal(a, b)
    assert np.all(a.imag >= 2.0 ** -10) and np.all(a.imag <= 4.0)


def test_mesh_norm_and_lambda_sup():
    vals = np.array([1.0, 2.0, 3.0])
    meas = np.array([1.0, 1.0, 1.0])
    assert mesh_norm(vals, meas, 2.0) == pytest.approx(math.sqrt(14.0))
    sup, lam = lambda_sup(vals, meas, 1.0, 64)
    # lam * |{v > lam}| tends to 2 * 2 as lam rises to 2; the grid approaches from below
    assert 3.8 < sup < 4.0 and lam < 2.0


def test_weight_label():
    assert weight_label(PowerWeight(0.25)) == "y^0.25"


def test_report_pass_rule_and_json():
    ok = InequalityReport("x", 1.0, 2.0, 1.0, 1.0, cases=[CaseResult("a", 1.0, 2.0, 0.0)])
    bad = InequalityReport("y", math.inf, 2.0, 1.0, 1.0)
    assert ok.passed and not bad.passed
    doc = json.loads(json.dumps(bad.to_dict()))
    assert doc["lhs"]["value"] == "inf"
    assert json_number(float("nan")) == "nan"
    assert to_measured_tree({"a": 1.5}, 0.1) == {"a": {"value": 1.5, "tolerance": 0.1}}
    assert ok.csv_rows()[-1][1] == "aggregate"


def test_stability_report_reads_drift():
    case = CaseResult("a", 1.0, 2.0, 0.0, details={"drift": 0.2})
    rep = InequalityReport("x", 1.0, 2.0, 1.0, 1.0, cases=[case])
    assert not stability_report(rep, 0.15).passed


def test_harness_config_family_deterministic():
    cfg = HarnessConfig()
    assert [(i.left, i.length) for i in cfg.family()] == [(i.left, i.length) for i in cfg.family()]
