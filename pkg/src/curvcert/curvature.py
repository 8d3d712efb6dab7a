"""Curvature chain g -> Christoffel -> Riemann -> Ricci -> Weyl -> Cotton -> Bach.

Conventions
-----------
``R(X, Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z`` with
``R^l_{ijk} d_l = R(d_j, d_k) d_i`` and ``R_{ijkl} = g_{im} R^m_{jkl}``, so the
round sphere has ``R_{ijij} > 0``.  Christoffel arrays are indexed
``gamma[k, i, j] = Gamma^k_{ij}``.  Covariant derivatives append the
differentiation slot last: ``dA[i, j, k] = A_{ij,k}``.

Every tensor is computed as a Taylor jet at the chart point; derivatives of
curvature come from differentiating these jets, never from grids.  Arrays
carry a leading batch axis over points.
"""

from __future__ import annotations

import string
from dataclasses import dataclass

import numpy as np

from .errors import CapabilityError, DomainError
from .jets import (MetricField, MetricJet, ScalarField, as_points, eval_metric_jet, jconst, jeinsum,
                   jet_order, jexp, jgrad, jinv_matrix, jmul, truncate)

# ---------------------------------------------------------------------------
# jet-level building blocks


def _perm(a: np.ndarray, subs: str) -> np.ndarray:
    src, dst = subs.split("->")
    return np.einsum(f"...{src}z->...{dst}z", a)


def kulkarni_nomizu_jet(a: np.ndarray, b: np.ndarray, n: int) -> np.ndarray:
    outer = jeinsum("ik,jl->ikjl", a, b, n)
    return (_perm(outer, "ikjl->ijkl") - _perm(outer, "iljk->ijkl")
            + _perm(outer, "jlik->ijkl") - _perm(outer, "jkil->ijkl"))


def covariant_derivative_jet(t: np.ndarray, gamma: np.ndarray, n: int, rank: int) -> np.ndarray:
    """Jet of nabla T for a covariant rank-``rank`` tensor jet (order drops by one)."""
    order = jet_order(t, n) - 1
    if order < 0:
        raise CapabilityError("tensor jet has order 0; cannot differentiate")
    gam = truncate(gamma, n, order)
    tt = truncate(t, n, order)
    out = jgrad(t, n)
    letters = string.ascii_letters[:rank]
    s, p = "y", "x"
    for q in range(rank):
        src = letters[:q] + p + letters[q + 1:]
        out = out - jeinsum(f"{p}{letters[q]}{s},{src}->{letters}{s}", gam, tt, n, order)
    return out


def norm_sq_jet(t: np.ndarray, ginv: np.ndarray, n: int, rank: int) -> np.ndarray:
    """Jet of the full metric contraction |T|^2."""
    letters = string.ascii_letters[:rank]
    up = t
    for q in range(rank):
        src = letters[:q] + "x" + letters[q + 1:]
        up = jeinsum(f"{letters[q]}x,{src}->{letters}", ginv, up, n)
    return jeinsum(f"{letters},{letters}->", up, t, n)


@dataclass
class CurvatureJets:
    """Jets of every curvature quantity; each has the highest order the input allows."""

    n: int
    order: int
    g: np.ndarray
    ginv: np.ndarray
    gamma: np.ndarray
    riem: np.ndarray
    ric: np.ndarray
    scal: np.ndarray
    schouten: np.ndarray
    weyl: np.ndarray
    cotton: np.ndarray | None = None
    bach: np.ndarray | None = None

    def value(self, name: str) -> np.ndarray:
        return getattr(self, name)[..., 0]


_NEEDS = {"riemann": 2, "weyl": 2, "cotton": 3, "bach": 4}


def curvature_jets(taylor: np.ndarray, n: int, upto: str = "weyl") -> CurvatureJets:
    """Run the chain on a metric jet array ``(N, n, n, M)`` up to ``upto``."""
    k = jet_order(taylor, n)
    if k < _NEEDS[upto]:
        raise CapabilityError(f"{upto} needs metric jets of order {_NEEDS[upto]}, got {k}")
    g = taylor
    ginv = jinv_matrix(g, n, k - 1)
    dg = jgrad(g, n)  # [a, b, c] = d_c g_ab
    lower = 0.5 * (_perm(dg, "jpi->pij") + _perm(dg, "ipj->pij") - _perm(dg, "ijp->pij"))
    gamma = jeinsum("kp,pij->kij", ginv, lower, n)
    dgam = jgrad(gamma, n)  # [l, a, b, s] = d_s Gamma^l_ab
    quad = jeinsum("mki,ljm->lijk", gamma, gamma, n, k - 2)
    rup = (_perm(dgam, "lkij->lijk") - _perm(dgam, "ljik->lijk")
           + quad - _perm(quad, "likj->lijk"))
    riem = jeinsum("im,mjkl->ijkl", g, rup, n, k - 2)
    gk = truncate(g, n, k - 2)
    ric = jeinsum("jl,ijkl->ik", ginv, riem, n, k - 2)
    scal = jeinsum("ik,ik->", ginv, ric, n, k - 2)
    scal_g = jmul(scal[..., None, None, :], gk, n)
    schouten = ric - scal_g / (2 * (n - 1))
    if n == 3:
        weyl = np.zeros_like(riem)
    else:
        weyl = (riem - kulkarni_nomizu_jet(ric, gk, n) / (n - 2)
                + kulkarni_nomizu_jet(scal_g, gk, n) / (2 * (n - 1) * (n - 2)))
    cj = CurvatureJets(n, k, g, ginv, gamma, riem, ric, scal, schouten, weyl)
    if upto in ("cotton", "bach"):
        da = covariant_derivative_jet(schouten, gamma, n, 2)
        cj.cotton = da - _perm(da, "ikj->ijk")
    if upto == "bach":
        dc = covariant_derivative_jet(cj.cotton, gamma, n, 3)  # [j, i, k, s] = C_jik,s
        g0 = ginv[..., 0]
        div = np.einsum("...ks,...jiks->...ij", g0, dc[..., 0])
        ric_up = np.einsum("...ks,...lt,...kl->...st", g0, g0, ric[..., 0])
        rw = np.einsum("...st,...isjt->...ij", ric_up, weyl[..., 0])
        cj.bach = ((div + rw) / (n - 2))[..., None]
    return cj


# ---------------------------------------------------------------------------
# pointwise operations on MetricJet values


def _require(mj: MetricJet, order: int, what: str) -> None:
    if mj.order < order:
        raise CapabilityError(f"{what} needs metric order >= {order}, got {mj.order}")


def christoffel(mj: MetricJet) -> np.ndarray:
    """Gamma^k_ij at each point, array ``(N, n, n, n)`` indexed [k, i, j]."""
    _require(mj, 1, "christoffel")
    n = mj.n
    dg = mj.dg
    lower = 0.5 * (np.einsum("...jpi->...pij", dg) + np.einsum("...ipj->...pij", dg)
                   - np.einsum("...ijp->...pij", dg))
    return np.einsum("...kp,...pij->...kij", mj.ginv, lower)


def riemann(mj: MetricJet) -> np.ndarray:
    """R_ijkl, shape ``(N, n, n, n, n)``."""
    _require(mj, 2, "riemann")
    return curvature_jets(truncate(mj.taylor, mj.n, 2), mj.n, "riemann").riem[..., 0]


def ricci_scalar(rm: np.ndarray, mj: MetricJet) -> tuple[np.ndarray, np.ndarray]:
    ric = np.einsum("...jl,...ijkl->...ik", mj.ginv, rm)
    return ric, np.einsum("...ik,...ik->...", mj.ginv, ric)


def kulkarni_nomizu(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """(a KN b)_ijkl = a_ik b_jl - a_il b_jk + a_jl b_ik - a_jk b_il."""
    return (np.einsum("...ik,...jl->...ijkl", a, b) - np.einsum("...il,...jk->...ijkl", a, b)
            + np.einsum("...jl,...ik->...ijkl", a, b) - np.einsum("...jk,...il->...ijkl", a, b))


def schouten(ric: np.ndarray, scal: np.ndarray, mj: MetricJet) -> np.ndarray:
    return ric - scal[..., None, None] * mj.g / (2 * (mj.n - 1))


def weyl(rm: np.ndarray, ric: np.ndarray, scal: np.ndarray, mj: MetricJet) -> np.ndarray:
    n = mj.n
    if n == 3:
        return np.zeros_like(rm)
    g = mj.g
    return (rm - kulkarni_nomizu(ric, g) / (n - 2)
            + scal[..., None, None, None, None] * kulkarni_nomizu(g, g) / (2 * (n - 1) * (n - 2)))


def _field_jets(field: MetricField, p, order: int, upto: str) -> CurvatureJets:
    mj = eval_metric_jet(field, p, order)
    return curvature_jets(mj.taylor, mj.n, upto)


def cotton(field: MetricField, p) -> np.ndarray:
    """C_ijk = A_ij,k - A_ik,j at each point, shape ``(N, n, n, n)``."""
    return _field_jets(field, p, 3, "cotton").cotton[..., 0]


def weyl_divergence_from_jets(cj: CurvatureJets) -> np.ndarray:
    """(delta W)_ijk = W_tijk,t (contracted with g^ts); needs order-1 Weyl jets."""
    dw = covariant_derivative_jet(cj.weyl, cj.gamma, cj.n, 4)
    return np.einsum("...ts,...tijks->...ijk", cj.ginv[..., 0], dw[..., 0])


def weyl_divergence(field: MetricField, p) -> np.ndarray:
    if field.dim == 3:
        raise DomainError("Weyl divergence identity needs n >= 4")
    return weyl_divergence_from_jets(_field_jets(field, p, 3, "weyl"))


def bach(field: MetricField, p) -> np.ndarray:
    """B_ij = (g^ks C_jik,s + g^ks g^lt R_kl W_isjt) / (n - 2), shape ``(N, n, n)``."""
    return _field_jets(field, p, 4, "bach").bach[..., 0]


def tensor_norm_sq(t: np.ndarray, ginv: np.ndarray) -> np.ndarray:
    """Full contraction of a covariant tensor with the inverse metric on every slot.

    ``t`` has shape ``(N, n, ..., n)`` and ``ginv`` has shape ``(N, n, n)``
    (a MetricJet is accepted in place of ``ginv``).
    """
    if isinstance(ginv, MetricJet):
        ginv = ginv.ginv
    rank = t.ndim - ginv.ndim + 2
    letters = string.ascii_letters[:rank]
    up = t
    for q in range(rank):
        src = letters[:q] + "x" + letters[q + 1:]
        up = np.einsum(f"...{letters[q]}x,...{src}->...{letters}", ginv, up)
    return np.einsum(f"...{letters},...{letters}->...", up, t)


def conformal_rescale(field: MetricField, u: ScalarField) -> MetricField:
    """The metric e^{2u} g with jets composed to the requested order."""

    def jet_fn(points, order):
        g = field.jets(points, order)
        e2u = jexp(2.0 * u.jets(points, order), field.dim)
        return jmul(e2u[..., None, None, :], g, field.dim)

    return MetricField(jet_fn, field.dim, min(field.max_order, u.max_order), f"e^2u {field.name}")


@dataclass
class CurvatureBundle:
    """Every curvature tensor of a metric at a batch of points (values only)."""

    g: np.ndarray
    ginv: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: np.ndarray
    schouten: np.ndarray
    weyl: np.ndarray
    cotton: np.ndarray | None
    bach: np.ndarray | None

    def norms(self) -> dict[str, np.ndarray]:
        out = {}
        for name in ("riemann", "ricci", "weyl", "cotton", "bach"):
            t = getattr(self, name)
            if t is not None:
                out[name] = tensor_norm_sq(t, self.ginv)
        return out


def curvature_bundle(field: MetricField, p, upto: str = "bach") -> CurvatureBundle:
    cj = _field_jets(field, p, _NEEDS[upto], upto)
    return bundle_from_jets(cj)


def bundle_from_jets(cj: CurvatureJets) -> CurvatureBundle:
    return CurvatureBundle(
        g=cj.g[..., 0], ginv=cj.ginv[..., 0], riemann=cj.riem[..., 0], ricci=cj.ric[..., 0],
        scalar=cj.scal[..., 0], schouten=cj.schouten[..., 0], weyl=cj.weyl[..., 0],
        cotton=None if cj.cotton is None else cj.cotton[..., 0],
        bach=None if cj.bach is None else cj.bach[..., 0],
    )


def bach_divergence(field: MetricField, p, step: float = 2e-2) -> tuple[np.ndarray, np.ndarray]:
    """nabla^i B_ij from Bach values at offset points, Richardson-extrapolated.

    Returns ``(divergence, dB)`` where dB[..., i, j, s] = d_s B_ij.  Uses the
    degree-4 central stencil at steps h and h/2 combined to cancel the h^4
    error term, so the estimate is O(h^6).
    """
    pts = as_points(p)
    n = field.dim
    if n != 4:
        raise DomainError("Bach divergence identity is specific to n = 4")

    def d_stencil(h):
        offs = np.array([-2, -1, 1, 2]) * h
        wts = np.array([1, -8, 8, -1]) / (12 * h)
        shifted = pts[:, None, None, :] + offs[None, :, None, None] * np.eye(n)[None, None, :, :]
        b = bach(field, shifted.reshape(-1, n)).reshape(len(pts), 4, n, n, n)
        return np.einsum("o,Nosij->Nijs", wts, b)

    d1, d2 = d_stencil(step), d_stencil(step / 2)
    db = (16 * d2 - d1) / 15
    mj = eval_metric_jet(field, pts, 1)
    gam = christoffel(mj)
    b0 = bach(field, pts)
    cov = (db - np.einsum("...psi,...pj->...ijs", gam, b0) - np.einsum("...psj,...ip->...ijs", gam, b0))
    return np.einsum("...is,...ijs->...j", mj.ginv, cov), db
