import json

import numpy as np
import pytest

from curvcert.aubin import REFERENCE_ALPHA4, BumpParams, flat_metric
from curvcert.errors import DomainError, GeometryError, UsageError
from curvcert.harness import catalog
from curvcert.harness.catalog import CatalogMetric, verify_flags
from curvcert.harness.checks import ACCEPTANCE, CHECKS, TOLERANCES, run_check
from curvcert.harness.operations import (bach_covariance_check, convergence_study, cross_validate, min_norm_scan,
                                         sample_ball)
from curvcert.harness.report import SCHEMA, run_suite
from curvcert.jets import ScalarField


# sampling

def test_sample_ball_empty():
    s = sample_ball(None, 1.0, REFERENCE_ALPHA4, 0)
    assert len(s.points) == 0
    assert len(s.axis_points) == 3 * 4 * 2


def test_sample_ball_inside_and_stratified():
    s = sample_ball((0.1, 0, 0, 0), 0.5, REFERENCE_ALPHA4, 10**4, seed=3)
    a = np.array([float(v) for v in REFERENCE_ALPHA4])
    q = ((s.points - s.center) ** 2 @ a) / 0.25
    assert np.all(q < 1)
    fr = s.fractions()
    assert abs(fr["inner"] - 0.5) <= 0.05 and abs(fr["outer"] - 0.5) <= 0.05
    assert np.sum(s.region == "center") == 1
    assert np.all(((s.axis_points - s.center) ** 2 @ a) / 0.25 < 1)


def test_sample_ball_deterministic():
    a = sample_ball(None, 1.0, REFERENCE_ALPHA4, 500, seed=7).points
    b = sample_ball(None, 1.0, REFERENCE_ALPHA4, 500, seed=7).points
    assert np.array_equal(a, b)


# scans

def test_flat_scan_is_identically_zero():
    sc = min_norm_scan(catalog.load("flat4"), "weyl", np.random.default_rng(0).uniform(-1, 1, (20, 4)))
    assert not sc.positive
    assert np.all(np.isneginf(sc.values))


def test_deformed_scan_positive_and_summary():
    params = BumpParams(1.3, 1.0, REFERENCE_ALPHA4)
    pts = sample_ball(None, 1.0, REFERENCE_ALPHA4, 300).all_points()
    sc = min_norm_scan(catalog.load("flat4"), "wplus", pts, params)
    assert sc.positive
    summ = sc.summary()
    assert np.isfinite(summ["log_min"]) and summ["count"] == len(pts)
    assert summ["histogram"]["zeros"] == 0 and sum(summ["histogram"]["counts"]) == len(pts)
    with pytest.raises(DomainError):
        min_norm_scan(catalog.load("flat4"), "nope", pts)


def test_scaled_scan_matches_direct_pipeline_where_representable():
    params = BumpParams(1.3, 1.0, REFERENCE_ALPHA4, b=4.0)
    pts = sample_ball(None, 1.0, REFERENCE_ALPHA4, 40, seed=1).select("inner")
    scaled = min_norm_scan(catalog.load("flat4"), "weyl", pts, params).values
    direct = min_norm_scan(flat_metric(4), "weyl", pts, params).values  # bare field: no flat flag
    assert np.allclose(scaled, direct, rtol=0, atol=1e-6)


# cross validation

def test_cross_validate_outside_support_is_exact():
    params = BumpParams(1.3, 0.2, REFERENCE_ALPHA4)
    pts = np.array([[0.5, 0.5, 0.0, 0.0], [0.0, 0.0, 0.4, 0.4]])
    cv = cross_validate(catalog.load("flat4"), params, pts)
    assert cv.max_residual == 0.0 and cv.passed is True


def test_cross_validate_curved_background_is_diagnostic():
    params = BumpParams(1.3, 0.3, REFERENCE_ALPHA4, b=4.0)
    cv = cross_validate(catalog.load("pert4"), params, np.array([[0.05, 0.0, 0.02, 0.0]]), "cotton")
    assert cv.diagnostic and cv.passed is None


# convergence

def test_convergence_skipped_for_exact_quantity():
    res = convergence_study(lambda r: 0.0)
    assert res.status == "skipped" and res.slope is None


def test_convergence_detects_order():
    assert convergence_study(lambda r: 3 * r**2).slope == pytest.approx(2.0)
    assert convergence_study(lambda r: 3 * r**0.5).status == "fail"


def test_weyl_convergence_slope():
    res = convergence_study("weyl", xi=np.array([[0.0] * 4, [0.2, -0.1, 0.1, 0.2]]))
    assert res.status == "pass" and res.slope >= 1.0


# covariance

def test_covariance_trivial_factors():
    fld = catalog.load("pert4b")
    pts = np.array([[0.05, 0.1, -0.1, 0.15]])
    zero = bach_covariance_check(fld, ScalarField(lambda x: 0.0 * x[0], 4), pts)
    assert zero.residual == 0.0
    const = bach_covariance_check(fld, ScalarField(lambda x: 0.0 * x[0] + 0.4, 4), pts)
    assert const.weight == 2 and const.passed
    with pytest.raises(DomainError):
        bach_covariance_check(catalog.load("pert5b"), ScalarField(lambda x: x[0], 5), np.zeros((1, 5)))


def test_covariance_recovers_weight_two():
    u = ScalarField(lambda x: 0.2 * x[0] * x[1] - 0.1 * x[2] + 0.05 * x[3] ** 3, 4)
    res = bach_covariance_check(catalog.load("pert4b"), u, np.array([[0.05, 0.1, -0.1, 0.15], [0.0] * 4]))
    assert res.weight == 2 and res.passed


# catalog

def test_catalog_names_and_unknown():
    assert {"flat4", "sphere4", "pert4", "bump4"} <= set(catalog.names())
    with pytest.raises(UsageError):
        catalog.load("nope")


@pytest.mark.parametrize("name", catalog.names())
def test_catalog_flags_hold(name):
    cm = catalog.load(name)
    assert cm.dim in (4, 5) and cm.safe_radius > 0


def test_wrong_flag_is_rejected():
    cm = catalog.load("pert4")
    lie = CatalogMetric("liar", 4, 0.5, cm.field, {**cm.flags, "einstein": True})
    with pytest.raises(GeometryError):
        verify_flags(lie)


# checks and reports

def test_check_registry():
    assert set(ACCEPTANCE) <= set(CHECKS)
    assert len(ACCEPTANCE) == 9
    with pytest.raises(UsageError):
        run_check("nope")


@pytest.mark.parametrize("name", ["coeffs", "bach-constant", "sphere"])
def test_fast_checks_pass(name):
    rec = run_check(name)
    assert rec.status == "pass", rec.error


def test_tightened_tolerance_fails():
    rec = run_check("sphere", {"sphere_scalar": 0.0})
    assert rec.status == "fail"


def test_empty_suite_is_trivial_pass():
    rep = run_suite({"checks": []})
    assert rep.passed and rep.verdict == "pass"
    assert rep.body()["checks"] == []
    assert rep.body()["schema"] == SCHEMA


def test_suite_rejects_unknown_names():
    with pytest.raises(UsageError):
        run_suite({"checks": ["nope"]})
    with pytest.raises(UsageError):
        run_suite({"checks": ["coeffs"], "tolerances": {"nope": 1.0}})


def test_suite_body_is_deterministic():
    cfg = {"checks": ["coeffs", "bach-constant", "sphere"], "seed": 5}
    a, b = run_suite(cfg), run_suite(cfg)
    assert json.dumps(a.body(), sort_keys=True) == json.dumps(b.body(), sort_keys=True)
    assert "timing" in a.to_dict() and "timing" not in a.body()
    assert a.lines()[-1] == "verdict: pass"


def test_tolerance_keys_documented():
    assert "closed_weyl" in TOLERANCES and TOLERANCES["closed_weyl"] == 1e-8
