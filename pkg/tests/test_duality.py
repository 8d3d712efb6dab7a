import numpy as np
import pytest
from hypothesis import given, strategies as st

from curvcert.curvature import conformal_rescale, curvature_bundle, tensor_norm_sq
from curvcert.duality import (PAIRS, complement, component_recipe, from_form_matrix, hodge_star,
                              mixed_weyl, split_weyl, star_first_pair, to_form_matrix, wijik_sign_table)
from curvcert.errors import DomainError
from curvcert.harness import catalog
from curvcert.jets import ScalarField

P = np.array([[0.1, -0.2, 0.15, 0.05]])


def _weyl(name="pert4b", p=P):
    cb = curvature_bundle(catalog.load(name).field, p, "weyl")
    return cb


def test_flat_star_on_basis():
    s = hodge_star(np.eye(4)).matrix
    # star e12 = e34, star e13 = -e24, star e14 = e23
    expected = {(0, 1): ((2, 3), 1), (0, 2): ((1, 3), -1), (0, 3): ((1, 2), 1),
                (1, 2): ((0, 3), 1), (1, 3): ((0, 2), -1), (2, 3): ((0, 1), 1)}
    for q, pair in enumerate(PAIRS):
        target, sign = expected[pair]
        col = np.zeros(6)
        col[PAIRS.index(target)] = sign
        assert np.array_equal(s[:, q], col)
        assert complement(*pair) == (target, sign)


def test_orientation_reversal_negates():
    g = curvature_bundle(catalog.load("pert4").field, P, "riemann").g
    assert np.allclose(hodge_star(g, -1).matrix, -hodge_star(g, 1).matrix)
    with pytest.raises(DomainError):
        hodge_star(g, 2)


def test_star_squares_to_identity():
    g = _weyl().g
    s = hodge_star(g).matrix
    assert np.allclose(s @ s, np.eye(6), atol=1e-12)


def test_dimension_guard():
    with pytest.raises(DomainError):
        hodge_star(np.eye(5))
    with pytest.raises(DomainError):
        complement(1, 1)


def test_form_matrix_roundtrip():
    w = _weyl().weyl
    assert np.allclose(from_form_matrix(to_form_matrix(w)), w)


def test_split_properties():
    cb = _weyl()
    pair = split_weyl(cb.weyl, cb.g)
    assert np.allclose(pair.total, cb.weyl)
    star = hodge_star(cb.g)
    assert np.allclose(star_first_pair(pair.plus, star), pair.plus, atol=1e-12)
    assert np.allclose(star_first_pair(pair.minus, star), -pair.minus, atol=1e-12)
    # idempotent: splitting W+ again gives back W+ and zero
    again = split_weyl(pair.plus, cb.g)
    assert np.allclose(again.plus, pair.plus, atol=1e-12)
    assert np.abs(again.minus).max() < 1e-12
    up = np.einsum("...ia,...jb,...kc,...ld,...abcd->...ijkl", *(cb.ginv,) * 4, pair.plus)
    assert abs(np.einsum("...ijkl,...ijkl->...", up, pair.minus)[0]) < 1e-12
    total = tensor_norm_sq(cb.weyl, cb.ginv)
    assert np.allclose(tensor_norm_sq(pair.plus, cb.ginv) + tensor_norm_sq(pair.minus, cb.ginv), total)


def test_orientation_swaps_halves():
    cb = _weyl()
    a, b = split_weyl(cb.weyl, cb.g, 1), split_weyl(cb.weyl, cb.g, -1)
    assert np.allclose(a.plus, b.minus) and np.allclose(a.minus, b.plus)


def test_mixed_weyl_endpoints():
    cb = _weyl()
    pair = split_weyl(cb.weyl, cb.g)
    assert np.array_equal(mixed_weyl(pair, 1), pair.plus + pair.minus)
    assert np.array_equal(mixed_weyl(pair, 0), pair.plus)
    assert np.allclose(mixed_weyl(pair, 0.25), pair.plus + 0.25 * pair.minus)


def test_self_dual_split_is_conformally_invariant():
    base = catalog.load("pert4").field
    u = ScalarField(lambda x: 0.2 * x[0] - 0.3 * x[1] * x[2] + 0.1, 4)
    a = _weyl("pert4")
    cb = curvature_bundle(conformal_rescale(base, u), P, "weyl")
    e2u = np.exp(2 * u(P))[0]
    pa, pb = split_weyl(a.weyl, a.g), split_weyl(cb.weyl, cb.g)
    assert np.allclose(pb.plus, e2u * pa.plus, atol=1e-12)
    assert np.allclose(pb.minus, e2u * pa.minus, atol=1e-12)


def test_component_recipe_matches_star_at_center():
    cb = _weyl("pert4b", np.zeros((1, 4)))
    assert np.allclose(cb.g, np.eye(4))
    pair = split_weyl(cb.weyl, cb.g)
    rec = component_recipe(cb.weyl)
    assert np.allclose(rec.plus, pair.plus, atol=1e-14)
    assert np.allclose(rec.minus, pair.minus, atol=1e-14)


def test_sign_table_pairs_contain_j():
    for (i, j, k), ((a, b), s) in wijik_sign_table().items():
        assert j in (a, b) and s in (1, -1)


@given(st.lists(st.floats(-1, 1), min_size=6, max_size=6))
def test_star_is_isometry_on_forms(vals):
    g = _weyl().g[0]
    star = hodge_star(g)
    omega = np.array(vals)
    ginv = np.linalg.inv(g)
    ia, ib = [p[0] for p in PAIRS], [p[1] for p in PAIRS]
    big = ginv[np.ix_(ia, ia)] * ginv[np.ix_(ib, ib)] - ginv[np.ix_(ia, ib)] * ginv[np.ix_(ib, ia)]
    so = star.apply(omega)
    assert so @ big @ so == pytest.approx(omega @ big @ omega, rel=1e-9, abs=1e-12)
