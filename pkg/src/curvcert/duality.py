"""Hodge star on 2-forms in dimension four and the self-dual/anti-self-dual Weyl split.

2-forms are represented on the ordered basis (12, 13, 14, 23, 24, 34)
(zero-based pairs (0,1), (0,2), ...).  A star matrix ``S`` acts on covariant
component vectors ``w[(ab)] = omega_ab`` (a < b).  Weyl tensors act on forms
through their first index pair.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .errors import DomainError
from .jets import MetricJet

PAIRS: tuple[tuple[int, int], ...] = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))
_PAIR_INDEX = {p: k for k, p in enumerate(PAIRS)}


def _perm_sign(p) -> int:
    p = list(p)
    sign = 1
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign


_EPS = np.zeros((4, 4, 4, 4))
for _p in permutations(range(4)):
    _EPS[_p] = _perm_sign(_p)

# flat epsilon on pairs: _EPS6[(kl), (ab)] = eps_klab
_EPS6 = np.array([[_EPS[k, l, a, b] for (a, b) in PAIRS] for (k, l) in PAIRS])


def complement(i: int, j: int, orientation: int = 1) -> tuple[tuple[int, int], int]:
    """Oriented complementary pair for the flat star.

    Returns ``((a, b), s)`` with a < b and ``star(e_i ^ e_j) = s e_a ^ e_b``.
    """
    if i == j:
        raise DomainError("complement needs i != j")
    a, b = sorted(set(range(4)) - {i, j})
    return (a, b), int(orientation * _EPS[i, j, a, b])


def wijik_sign_table(orientation: int = 1) -> dict[tuple[int, int, int], tuple[tuple[int, int], int]]:
    """For distinct (i, j, k): the pair (i', k') = star-complement of (i, k) and its sign.

    ``W_{iji'k'}`` then equals ``s * W_{ij a b}`` with ``(a, b), s`` the entry;
    the pair is always {j, l} with l the fourth index, either as (j, l) or (l, j).
    """
    out = {}
    for i, j, k in permutations(range(4), 3):
        out[(i, j, k)] = complement(i, k, orientation)
    return out


def to_form_matrix(w: np.ndarray) -> np.ndarray:
    """(N, 4, 4, 4, 4) curvature-type tensor -> (N, 6, 6) on the pair basis."""
    ia = [p[0] for p in PAIRS]
    ib = [p[1] for p in PAIRS]
    return w[..., ia, ib, :, :][..., ia, ib]


def from_form_matrix(m: np.ndarray) -> np.ndarray:
    """Inverse of :func:`to_form_matrix` using antisymmetry in each pair."""
    out = np.zeros(m.shape[:-2] + (4, 4, 4, 4))
    for p, (i, j) in enumerate(PAIRS):
        for q, (k, l) in enumerate(PAIRS):
            v = m[..., p, q]
            out[..., i, j, k, l] = v
            out[..., j, i, k, l] = -v
            out[..., i, j, l, k] = -v
            out[..., j, i, l, k] = v
    return out


@dataclass
class StarOperator:
    matrix: np.ndarray  # (..., 6, 6)
    orientation: int
    g: np.ndarray

    def apply(self, omega: np.ndarray) -> np.ndarray:
        return np.einsum("...pq,...q->...p", self.matrix, omega)


def _check_dim(g: np.ndarray) -> None:
    if g.shape[-1] != 4:
        raise DomainError(f"Hodge star on 2-forms is implemented for n = 4, got n = {g.shape[-1]}")


def hodge_star(mj: MetricJet | np.ndarray, orientation: int = 1) -> StarOperator:
    """(star omega)_kl = 1/2 eps_klab g^ac g^bd omega_cd with eps_1234 = orientation sqrt(det g)."""
    if orientation not in (1, -1):
        raise DomainError("orientation must be +1 or -1")
    g = mj.g if isinstance(mj, MetricJet) else np.asarray(mj, dtype=float)
    _check_dim(g)
    ginv = np.linalg.inv(g)
    ia = [p[0] for p in PAIRS]
    ib = [p[1] for p in PAIRS]
    # second exterior power of g^{-1}: G[(ab),(cd)] = g^ac g^bd - g^ad g^bc
    big = ginv[..., ia, :][..., :, ia] * ginv[..., ib, :][..., :, ib] \
        - ginv[..., ia, :][..., :, ib] * ginv[..., ib, :][..., :, ia]
    vol = np.sqrt(np.linalg.det(g))[..., None, None]
    return StarOperator(orientation * vol * (_EPS6 @ big), orientation, g)


@dataclass
class WeylPair:
    plus: np.ndarray
    minus: np.ndarray

    @property
    def total(self) -> np.ndarray:
        return self.plus + self.minus


def star_first_pair(w: np.ndarray, star: StarOperator) -> np.ndarray:
    return from_form_matrix(star.matrix @ to_form_matrix(w))


def star_second_pair(w: np.ndarray, star: StarOperator) -> np.ndarray:
    return from_form_matrix(to_form_matrix(w) @ np.swapaxes(star.matrix, -1, -2))


def split_weyl(w: np.ndarray, mj: MetricJet | np.ndarray, orientation: int = 1) -> WeylPair:
    """W^(+/-) = (W +/- star W) / 2 with the star on the first index pair."""
    star = hodge_star(mj, orientation)
    sw = star_first_pair(w, star)
    return WeylPair(0.5 * (w + sw), 0.5 * (w - sw))


def mixed_weyl(pair: WeylPair, t: float) -> np.ndarray:
    """W^+ + t W^-."""
    if t == 1:
        return pair.plus + pair.minus
    if t == 0:
        return pair.plus.copy()
    return pair.plus + t * pair.minus


def component_recipe(w: np.ndarray, orientation: int = 1) -> WeylPair:
    """Flat-metric split W^(+/-)_ijkl = (W_ijkl +/- s W_ijab) / 2 with (ab), s = complement(k, l).

    Only meaningful where g = identity (chart centers of normalized charts).
    """
    plus = np.zeros_like(w)
    minus = np.zeros_like(w)
    for k in range(4):
        for l in range(4):
            if k == l:
                continue
            (a, b), s = complement(k, l, orientation)
            dual = s * w[..., :, :, a, b]
            plus[..., :, :, k, l] = 0.5 * (w[..., :, :, k, l] + dual)
            minus[..., :, :, k, l] = 0.5 * (w[..., :, :, k, l] - dual)
    return WeylPair(plus, minus)
