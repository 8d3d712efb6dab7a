import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from curvcert.aubin import bump_f
from curvcert.errors import CapabilityError, DomainError, GeometryError
from curvcert.jets import (ChartPoint, Jet, MetricField, ScalarField, coordinate_jets, eval_metric_jet,
                           eval_scalar_jet, finite_difference_check, jexp, jinv_matrix, jlog, jmul, jpow,
                           monomials, n_coeffs)

# Taylor data of exp(x0) * sin(x1) + x0 x1^2 at (0.3, -0.4), order 3, from sympy
SYMPY_PARTIALS = {
    (): -0.4776597791969788,
    (0,): -0.3656597791969788,
    (1,): 1.003302295069503,
    (0, 0): -0.5256597791969787,
    (0, 1): 0.4433022950695026,
    (1, 1): 1.125659779196979,
    (0, 0, 0): -0.5256597791969787,
    (0, 0, 1): 1.243302295069503,
    (0, 1, 1): 2.525659779196979,
    (1, 1, 1): -1.243302295069503,
}


def test_monomial_layout():
    assert monomials(2, 2) == ((), (0,), (1,), (0, 0), (0, 1), (1, 1))
    assert n_coeffs(4, 4) == math.comb(8, 4)


def test_constant_field_has_zero_partials():
    f = ScalarField(lambda x: 3.5, 4)
    js = eval_scalar_jet(f, (0.1, 0.2, 0.3, 0.4), 2)
    assert js.value == 3.5
    assert all(v == 0 for v in js.partials.values())


def test_polynomial_partials():
    f = ScalarField(lambda x: x[0] * x[0] * x[1], 4)
    js = eval_scalar_jet(f, (1, 1, 0, 0), 2)
    assert js.partial(0, 1) == pytest.approx(2.0)
    assert js.partial(0, 0) == pytest.approx(2.0)
    assert js.partial(1, 1) == 0.0


def test_elementary_functions_against_sympy_oracle():
    def fn(x):
        s = x[1].compose(np.stack([np.sin(x[1].value), np.cos(x[1].value), -np.sin(x[1].value),
                                   -np.cos(x[1].value)], axis=-1))
        return x[0].exp() * s + x[0] * x[1] * x[1]

    js = eval_scalar_jet(ScalarField(fn, 2), (0.3, -0.4), 3)
    for idx, val in SYMPY_PARTIALS.items():
        assert js.partial(*idx) == pytest.approx(val, rel=1e-12, abs=1e-13)


def test_order_limits():
    f = ScalarField(lambda x: x[0], 2, max_order=2)
    with pytest.raises(CapabilityError):
        f.jets(np.zeros((1, 2)), 3)
    with pytest.raises(CapabilityError):
        eval_scalar_jet(ScalarField(lambda x: x[0], 2, max_order=8), (0, 0), 5)


def test_nonfinite_evaluation_is_domain_error():
    f = ScalarField(lambda x: x[0].log(), 2)
    with pytest.raises(DomainError):
        eval_scalar_jet(f, (-1.0, 0.0), 1)
    with pytest.raises(DomainError):
        ChartPoint((float("nan"), 0.0))


def test_metric_jet_flat_and_sphere():
    flat = MetricField.from_components(lambda x: [[1.0 if i == j else 0.0 for j in range(4)] for i in range(4)], 4)
    mj = eval_metric_jet(flat, (0.2, 0.1, 0, 0), 2)
    assert np.array_equal(mj.g[0], np.eye(4))
    assert not np.any(mj.dg) and not np.any(mj.d2g)

    def stereo(scale):
        def comps(x):
            q = sum(xi * xi for xi in x) * scale
            e = 4.0 * (1.0 + q) ** -2.0 if scale == 1.0 else (1.0 + q) ** -2.0
            return [[e if i == j else 0.0 for j in range(4)] for i in range(4)]
        return MetricField.from_components(comps, 4)

    mj = eval_metric_jet(stereo(1.0), np.zeros(4), 2)
    assert np.allclose(mj.g[0], 4 * np.eye(4))
    assert not np.any(mj.dg)
    mj = eval_metric_jet(stereo(0.25), np.zeros(4), 2)
    assert np.allclose(mj.g[0], np.eye(4))
    assert not np.any(mj.dg)
    # d_a d_b g_ii = -delta_ab at the origin (from sympy: (1 + |x|^2/4)^-2)
    assert mj.d2g[0, 0, 0, 1, 1] == pytest.approx(-1.0)
    assert mj.d2g[0, 0, 0, 1, 2] == pytest.approx(0.0)


def test_indefinite_metric_rejected():
    bad = MetricField.from_components(lambda x: [[1.0, 0.0], [0.0, -1.0]], 2)
    with pytest.raises(GeometryError):
        eval_metric_jet(bad, (0, 0), 1)


def test_finite_difference_polynomial_exact():
    f = ScalarField(lambda x: x[0] ** 3 - 2 * x[0] * x[1] * x[2] + x[3] * x[3], 4)
    rep = finite_difference_check(f, (0.3, -0.2, 0.5, 0.1), 3, 1e-2)
    assert rep.max_residual <= 1e-9


def test_finite_difference_bump():
    f = ScalarField(lambda x: bump_f_jet(x[0]), 1)
    rep = finite_difference_check(f, (0.5,), 4, 1e-3)
    assert rep.max_residual <= 1e-5


def bump_f_jet(x):
    from curvcert.aubin import bump_derivs

    return x.compose(bump_derivs(x.value, 10.0, x.order))


def test_declared_order_above_four_is_rejected():
    f = ScalarField(lambda x: x[0], 1, max_order=5)
    with pytest.raises(CapabilityError):
        finite_difference_check(f, (0.1,), 5, 1e-2)


def test_bump_f_matches_profile():
    js = bump_f(0.0)
    assert js.value == pytest.approx(-math.exp(-10))
    assert js.partial(0) == pytest.approx(10 * math.exp(-10))


@st.composite
def jets(draw, n=2, order=3):
    size = n_coeffs(n, order)
    vals = draw(st.lists(st.floats(-2, 2), min_size=size, max_size=size))
    return np.array(vals)


@given(jets(), jets(), jets())
def test_jmul_commutative_associative(a, b, c):
    assert np.allclose(jmul(a, b, 2), jmul(b, a, 2))
    assert np.allclose(jmul(jmul(a, b, 2), c, 2), jmul(a, jmul(b, c, 2), 2), atol=1e-9)


@given(jets())
def test_exp_log_roundtrip(a):
    e = jexp(a, 2)
    assert np.allclose(jlog(e, 2), a, atol=1e-9)


@given(jets(), st.floats(-1.5, 2.5))
def test_power_law(a, p):
    a = a.copy()
    a[0] = abs(a[0]) + 0.5
    assert np.allclose(jmul(jpow(a, p, 2), jpow(a, 1 - p, 2), 2), a, atol=1e-8)


def test_matrix_inverse_jet(rng):
    pts = rng.uniform(-0.3, 0.3, (5, 3))
    xs = coordinate_jets(pts, 3)
    rows = [[(1.0 if i == j else 0.0) + 0.2 * xs[i] * xs[j] + 0.1 * xs[(i + j) % 3].exp() for j in range(3)]
            for i in range(3)]
    m = np.stack([np.stack([r.c for r in row], axis=-2) for row in rows], axis=-3)
    inv = jinv_matrix(m, 3)
    from curvcert.jets import jeinsum

    ident = jeinsum("ab,bc->ac", m, inv, 3)
    target = np.zeros_like(ident)
    target[..., 0] = np.eye(3)
    assert np.allclose(ident, target, atol=1e-12)


def test_jet_arithmetic_operators(rng):
    x, y = coordinate_jets(rng.uniform(0.5, 1.0, (3, 2)), 2)
    z = (x * y + 2.0 - x / y) ** 2
    assert isinstance(z, Jet)
    assert np.allclose((x - x).c, 0)
    assert np.allclose((x.sqrt() * x.sqrt()).c, x.c)
