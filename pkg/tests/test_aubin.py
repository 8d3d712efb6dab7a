import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from curvcert.aubin import (REFERENCE_ALPHA4, BumpParams, DerivCombos, bach_center_constant, bach_principal,
                            bach_table_general, bach_table_printed, bump_derivs, bump_f, check_bump_signs,
                            closed_form_inputs, conformal_unit_normalize, cotton_coeffs, cotton_deformed_closed_form,
                            cotton_principal, deform_metric, deformed_weyl_closed_form, flat_metric, reference_alpha,
                            phi, phi_formulas, phi_jets, sd_principal, weyl_coeffs, weyl_principal)
from curvcert.curvature import bach, cotton, curvature_bundle, tensor_norm_sq
from curvcert.errors import DomainError, PreconditionError
from curvcert.harness import catalog
from curvcert.jets import factorial_weights, monomials

F = Fraction
PARAMS = BumpParams(1.3, 0.8, REFERENCE_ALPHA4)


def _in_ball(params, count, seed=0, frac=0.9):
    rng = np.random.default_rng(seed)
    n = params.n
    x = rng.normal(size=(count, n))
    x /= np.linalg.norm(x, axis=1)[:, None]
    x *= (frac * rng.random(count) ** (1 / n))[:, None]
    return params.r * x / np.sqrt(params.alpha_f)


# bump profile

def test_profile_vanishes_outside():
    assert not np.any(bump_derivs([1.0, 2.0, 5.0]))
    js = bump_f(2.0)
    assert js.value == 0.0 and all(v == 0.0 for v in js.partials.values())


def test_profile_at_zero():
    js = bump_f(0.0)
    assert js.value == pytest.approx(-math.exp(-10), rel=1e-14)
    assert js.partial(0) == pytest.approx(10 * math.exp(-10), rel=1e-14)
    # f'' = (2b - b^2) e^{-b} at 0
    assert js.partial(0, 0) == pytest.approx(-80 * math.exp(-10), rel=1e-13)


def test_profile_signs():
    assert check_bump_signs()
    assert check_bump_signs(b=8.0)
    # a shallow bump loses the signs of the third and fourth derivatives near y = 0
    assert not check_bump_signs(b=4.0)
    d = bump_derivs(0.0, 4.0, 4)
    assert d[3] < 0 and d[4] > 0
    with pytest.raises(DomainError):
        bump_f(0.5, b=2.0)


def test_bump_params_validation():
    with pytest.raises(DomainError):
        BumpParams(0.5, 1.0, REFERENCE_ALPHA4)
    with pytest.raises(DomainError):
        BumpParams(1.0, 0.0, REFERENCE_ALPHA4)
    with pytest.raises(DomainError):
        BumpParams(1.0, 1.0, (1, 3, 1, 1))
    assert reference_alpha(5) == (2, 2, 1, 1, 1)
    with pytest.raises(DomainError):
        reference_alpha(3)


# phi

def test_phi_outside_is_zero():
    js = phi((0.0, 0.0, 0.0, 0.9), PARAMS)
    assert js.value == 0.0 and not any(js.partials.values())


def test_phi_center():
    js = phi(np.zeros(4), PARAMS)
    f1 = bump_f(0.0).partial(0)
    for i in range(4):
        assert js.partial(i) == 0.0
        for j in range(4):
            want = PARAMS.lam * float(REFERENCE_ALPHA4[i]) * f1 if i == j else 0.0
            assert js.partial(i, j) == pytest.approx(want, rel=1e-12, abs=1e-20)
    lap = sum(js.partial(i, i) for i in range(4))
    assert lap == pytest.approx(PARAMS.lam * f1 * float(sum(REFERENCE_ALPHA4)), rel=1e-12)


def test_phi_formulas_match_jets():
    pts = _in_ball(PARAMS, 12, seed=3)
    pf = phi_formulas(pts, PARAMS)
    c = phi_jets(pts, PARAMS, 4)
    w = factorial_weights(4, 4)
    index = {m: k for k, m in enumerate(monomials(4, 4))}
    n = 4
    import itertools
    for order, arr in ((1, pf.d1), (2, pf.d2), (3, pf.d3), (4, pf.d4)):
        scale = np.abs(arr).max()
        for idx in itertools.product(range(n), repeat=order):
            k = index[tuple(sorted(idx))]
            jet = c[:, k] * w[k]
            got = arr[(slice(None),) + idx]
            assert np.abs(got - jet).max() <= 1e-10 * scale, (order, idx)
    lap = sum(c[:, index[(i, i)]] * 2 for i in range(n))
    assert np.allclose(pf.lap, lap, rtol=0, atol=1e-10 * np.abs(lap).max())
    assert np.allclose(pf.lap, np.trace(pf.d2, axis1=1, axis2=2))
    assert np.allclose(pf.dlap, np.einsum("Nkkj->Nj", pf.d3))
    assert np.allclose(pf.hesslap, np.einsum("Nttjk->Njk", pf.d4))
    assert np.allclose(pf.bilap, np.einsum("Nttkk->N", pf.d4))


# the deformed metric

def test_deformed_metric_basics():
    fld = deform_metric(flat_metric(4), PARAMS)
    assert np.allclose(fld.jets(np.array([[0, 0, 0.0, 0.9]]), 0)[0, ..., 0], np.eye(4))
    assert np.allclose(fld.jets(np.zeros((1, 4)), 0)[0, ..., 0], np.eye(4))
    base = catalog.load("pert4").field
    pts = _in_ball(PARAMS, 30, seed=5) * 0.5
    g = base.jets(pts, 0)[..., 0]
    gt = deform_metric(base, BumpParams(1.3, 0.4, REFERENCE_ALPHA4)).jets(pts, 0)[..., 0]
    assert np.all(np.linalg.eigvalsh(gt) >= np.linalg.eigvalsh(g) - 1e-14)
    with pytest.raises(DomainError):
        deform_metric(flat_metric(5), PARAMS)


# Weyl coefficients

def test_weyl_coeff_table():
    co = weyl_coeffs(REFERENCE_ALPHA4)
    half = {(0, 1): F(5, 48), (2, 3): F(5, 48), (0, 2): F(-1, 48), (1, 3): F(-1, 48),
            (0, 3): F(-1, 12), (1, 2): F(-1, 12)}
    for (i, j), v in half.items():
        assert co.a2[i, j] == v == co.a2[j, i]
    assert sum(co.a2[i, j] ** 2 for i in range(4) for j in range(i + 1, 4)) == F(7, 192)
    for key, v in {(0, 1, 2): F(-15, 8), (1, 0, 3): F(-1, 2), (0, 1, 3): F(-5, 4),
                   (1, 0, 2): F(-9, 8), (0, 2, 3): F(-3, 4), (2, 0, 1): F(-5, 8)}.items():
        assert co.a3[key] == v


def test_weyl_coeffs_dimension_five():
    co = weyl_coeffs(reference_alpha(5))
    assert co.a2[0, 1] == F(1, 2)
    assert all(v != 0 for v in co.a2.values())
    # (n - 3) alpha_i equals the sum of the remaining alphas when alpha_i = 1 and {j, k} = {1, 2}
    zeros = sorted(k for k, v in co.a3.items() if v == 0)
    assert zeros == [(2, 0, 1), (2, 1, 0), (3, 0, 1), (3, 1, 0), (4, 0, 1), (4, 1, 0)]
    assert len(co.a3) - len(zeros) == 54


alphas = st.lists(st.fractions(min_value=1, max_value=2, max_denominator=12), min_size=4, max_size=6)


@given(alphas)
def test_weyl_coeff_trace_rules(al):
    co = weyl_coeffs(al)
    n = len(al)
    for j in range(n):
        assert sum(co.a2[i, j] for i in range(n) if i != j) == 0
        for c in range(n):
            assert sum(co.b2[i, j][c] for i in range(n) if i != j) == 0


def test_weyl_coeffs_need_dimension_four():
    with pytest.raises(DomainError):
        weyl_coeffs((1, 2, 1))


def test_weyl_principal_exact_at_center():
    p = np.zeros((1, 4))
    wp = weyl_principal(PARAMS, p)
    cb = curvature_bundle(deform_metric(flat_metric(4), PARAMS), p, "weyl")
    f1 = bump_f(0.0).partial(0)
    for (i, j), a in weyl_coeffs(REFERENCE_ALPHA4).a2.items():
        want = PARAMS.lam**2 * float(a) * f1**2
        assert wp.components["ijij"][0, i, j] == pytest.approx(want, rel=1e-12)
        assert cb.weyl[0, i, j, i, j] == pytest.approx(want, rel=1e-10)
    assert np.allclose(wp.tensor, cb.weyl, rtol=0, atol=1e-10 * np.abs(cb.weyl).max())


def test_sd_principal_limits():
    pts = _in_ball(PARAMS, 5, seed=9)
    base = weyl_principal(PARAMS, pts)
    one = sd_principal(PARAMS, pts, 1.0)
    assert np.allclose(one.components["ijij"], base.components["ijij"])
    assert np.allclose(one.components["ijik"], base.components["ijik"])
    assert not np.any(one.components["ijkl"])
    zero = sd_principal(PARAMS, np.zeros((1, 4)), 0.0)
    assert np.allclose(zero.components["ijij"], 0.5 * weyl_principal(PARAMS, np.zeros((1, 4))).components["ijij"])
    with pytest.raises(DomainError):
        sd_principal(BumpParams(1.3, 0.8, reference_alpha(5)), np.zeros((1, 5)), 0.0)


def test_sd_principal_components_match_tensor_at_center():
    rec = sd_principal(PARAMS, np.zeros((1, 4)), -0.4)
    t = rec.tensor[0]
    for i in range(4):
        for j in range(4):
            if i != j:
                assert rec.components["ijij"][0, i, j] == pytest.approx(t[i, j, i, j], rel=1e-12)
                for k in range(4):
                    if k not in (i, j):
                        l = 6 - i - j - k
                        assert rec.components["ijkl"][0, i, j, k, l] == pytest.approx(t[i, j, k, l], rel=1e-12,
                                                                                      abs=1e-30)


# Cotton coefficients

def test_cotton_coeffs():
    co = cotton_coeffs(REFERENCE_ALPHA4)
    assert co.a3[0, 1, 2] == F(15, 8)
    for (i, j, k), v in co.a3.items():
        assert co.a3[i, k, j] == -v


def test_cotton_principal_center_and_preconditions():
    rec = cotton_principal(PARAMS, np.zeros((1, 4)))
    assert not np.any(rec.components["iji"]) and not np.any(rec.components["ijk"])
    with pytest.raises(PreconditionError):
        cotton_principal(BumpParams(1.3, 0.8, (1, 1, 1.5, 2)), np.zeros((1, 4)))


# closed forms

STRONG = BumpParams(1.7, 0.6, REFERENCE_ALPHA4, b=6.0)


@pytest.mark.parametrize("variant", ["literal", "corrected"])
def test_weyl_closed_form_flat_background(variant):
    pts = _in_ball(STRONG, 20, seed=2, frac=0.8)
    truth = curvature_bundle(deform_metric(flat_metric(4), STRONG), pts, "weyl")
    w = deformed_weyl_closed_form(closed_form_inputs(flat_metric(4), STRONG, pts), variant)
    assert np.abs(w - truth.weyl).max() <= 1e-8 * max(1.0, np.abs(truth.weyl).max())


def test_cotton_closed_form_flat_background():
    pts = _in_ball(STRONG, 20, seed=2, frac=0.8)
    truth = curvature_bundle(deform_metric(flat_metric(4), STRONG), pts, "cotton").cotton
    inp = closed_form_inputs(flat_metric(4), STRONG, pts, "cotton")
    corrected = np.abs(cotton_deformed_closed_form(inp, "corrected") - truth).max()
    literal = np.abs(cotton_deformed_closed_form(inp, "literal") - truth).max()
    assert corrected <= 1e-12 * np.abs(truth).max()
    # the literal blocks are off at second order in phi, visible for a steep, tall bump
    assert literal > 1e-6 * np.abs(truth).max()


def test_closed_forms_reduce_to_background_outside_support():
    base = catalog.load("pert4")
    pts = np.array([[0.3, 0.3, 0.3, 0.3]])
    params = BumpParams(1.3, 0.2, REFERENCE_ALPHA4)
    cb = curvature_bundle(base.field, pts, "cotton")
    w = deformed_weyl_closed_form(closed_form_inputs(base.field, params, pts))
    c = cotton_deformed_closed_form(closed_form_inputs(base.field, params, pts, "cotton"))
    assert np.allclose(w, cb.weyl, rtol=0, atol=1e-15)
    assert np.allclose(c, cb.cotton, rtol=0, atol=1e-15)


def test_corrected_weyl_closed_form_exact_on_curved_background():
    base = catalog.load("pert4b").field
    params = BumpParams(1.3, 0.3, REFERENCE_ALPHA4, b=4.0)
    pts = _in_ball(params, 10, seed=4, frac=0.7)
    truth = curvature_bundle(deform_metric(base, params), pts, "weyl").weyl
    w = deformed_weyl_closed_form(closed_form_inputs(base, params, pts), "corrected")
    assert np.abs(w - truth).max() <= 1e-10 * np.abs(truth).max()


def test_cotton_closed_form_needs_third_derivatives():
    with pytest.raises(PreconditionError):
        cotton_deformed_closed_form(closed_form_inputs(flat_metric(4), PARAMS, np.zeros((1, 4))))


# Bach

def test_bach_tables_agree_except_known_entry():
    pr, ge = bach_table_printed(), bach_table_general(REFERENCE_ALPHA4)
    assert pr.A_coeffs() == ge.A_coeffs() == (F(-323, 12), F(-41, 6), F(53, 6), F(299, 12))
    assert sum(pr.A_coeffs()) == 0
    key = (2, 1, 0, 1)  # x1^2 * x2 x4 in the C polynomial of B24
    assert pr.entries[1, 3]["C"][key] == F(-20, 3)
    assert ge.entries[1, 3]["C"][key] == F(-40, 3)
    assert pr.entries[1, 2]["C"] == ge.entries[1, 2]["C"]


def test_bach_center_constant():
    assert bach_center_constant() == F(105845, 36)
    assert bach_center_constant(bach_table_general(REFERENCE_ALPHA4)) == F(105845, 36)


def test_bach_principal_center_is_twice_pipeline():
    p = np.zeros((1, 4))
    for r in (0.2, 0.1):
        params = BumpParams(1.3, r, REFERENCE_ALPHA4)
        b = bach(deform_metric(flat_metric(4), params), p)[0]
        rec = bach_principal(params, p)
        comp = rec.components["ij"][0]
        assert np.abs(b - comp / 2).max() <= 1e-8 * np.abs(comp).max()
        assert np.allclose(rec.tensor[0], comp / 2, rtol=1e-12)
        assert abs(np.trace(comp)) <= 1e-12 * np.abs(comp).max()
        combos = DerivCombos.at(0.0)
        norm = float(np.sum(comp.diagonal() ** 2))
        assert 2 * norm == pytest.approx(float(F(105845, 36)) * params.lam**4 * combos.A**2 / r**4, rel=1e-12)


def test_bach_principal_dimension_guard():
    with pytest.raises(DomainError):
        bach_principal(BumpParams(1.3, 0.8, reference_alpha(5)), np.zeros((1, 5)))


# conformal normalisation

def test_unit_normalize_constant_norm_gives_constant_factor():
    cm = catalog.load("s2xs2")
    pts = np.array([[0.0] * 4, [0.2, -0.1, 0.3, 0.1]])
    out = conformal_unit_normalize(cm.field, "weyl", pts)
    diag = np.einsum("Nii->Ni", out.jets(pts, 0)[..., 0]) / np.einsum("Nii->Ni", cm.field.jets(pts, 0)[..., 0])
    assert np.allclose(diag, diag[0, 0])
    cb = curvature_bundle(out, pts, "weyl")
    assert np.allclose(tensor_norm_sq(cb.weyl, cb.ginv), 1.0)


def test_unit_normalize_bach_on_einstein_metric():
    with pytest.raises(PreconditionError):
        conformal_unit_normalize(catalog.load("sphere4").field, "bach", np.zeros((3, 4)))
    with pytest.raises(PreconditionError):
        conformal_unit_normalize(flat_metric(4), "weyl", np.zeros((1, 4)))


def test_cotton_of_deformed_flat_vanishes_at_center():
    c = cotton(deform_metric(flat_metric(4), PARAMS), np.zeros((1, 4)))
    assert not np.any(np.abs(c) > 1e-30)
