"""The bump deformation g~ = g + dphi (x) dphi, its closed forms and principal parts.

The bump profile is f(y) = -exp(-b / (1 - y)) on [0, 1) and 0 beyond, and
phi = (lambda r^2 / 2) f(sum_i alpha_i x_i^2 / r^2) in coordinates centred at
``params.center``.  Derivatives of f are kept in the factored form
f^(k)(y) = exp(-b s) P_k(s), s = 1 / (1 - y), so that quantities far out in
the tail can be evaluated relative to the exponential scale without
underflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
from numpy.polynomial import Polynomial

from .curvature import (CurvatureJets, covariant_derivative_jet, curvature_jets, kulkarni_nomizu,
                        norm_sq_jet, tensor_norm_sq)
from .errors import DomainError, PreconditionError
from .jets import (MetricField, JetScalar, as_points, coordinate_jets, jcompose, jeinsum, jet_order,
                   jgrad, jmul, jpow, truncate)

DEFAULT_B = 10.0
REFERENCE_ALPHA4 = (Fraction(1), Fraction(5, 4), Fraction(3, 2), Fraction(2))


def reference_alpha(n: int) -> tuple[Fraction, ...]:
    """The reference coefficient choice: (1, 5/4, 3/2, 2) for n = 4, (2, 2, 1, ..., 1) above."""
    if n == 4:
        return REFERENCE_ALPHA4
    if n < 4:
        raise DomainError("bump coefficients are defined for n >= 4")
    return (Fraction(2), Fraction(2)) + (Fraction(1),) * (n - 2)


# ---------------------------------------------------------------------------
# bump profile


@lru_cache(maxsize=None)
def _profile_polys(b: float, order: int) -> tuple[Polynomial, ...]:
    s = Polynomial([0.0, 1.0])
    polys = [Polynomial([-1.0])]
    for _ in range(order):
        p = polys[-1]
        polys.append(s * s * (p.deriv() - b * p))
    return tuple(polys)


def bump_derivs(y, b: float = DEFAULT_B, order: int = 4, scaled: bool = False) -> np.ndarray:
    """Array ``(..., order + 1)`` of f, f', ..., f^(order) at ``y``.

    With ``scaled`` the common factor exp(-b / (1 - y)) is divided out
    (zero is returned outside the support either way).
    """
    y = np.asarray(y, dtype=float)
    if np.any(y < 0):
        raise DomainError("bump profile is defined for y >= 0")
    inside = y < 1.0
    s = np.where(inside, 1.0 / np.where(inside, 1.0 - y, 1.0), 0.0)
    out = np.stack([p(s) for p in _profile_polys(float(b), order)], axis=-1)
    if not scaled:
        with np.errstate(under="ignore"):
            out = out * np.exp(-b * s)[..., None]
    return np.where(inside[..., None], out, 0.0)


def bump_log_scale(y, b: float = DEFAULT_B) -> np.ndarray:
    """log of the factor divided out by ``bump_derivs(..., scaled=True)`` (-inf outside)."""
    y = np.asarray(y, dtype=float)
    inside = y < 1.0
    return np.where(inside, -b / np.where(inside, 1.0 - y, 1.0), -np.inf)


def bump_f(y: float, b: float = DEFAULT_B) -> JetScalar:
    """Value and derivatives to order 4 of the profile at ``y``."""
    if b < 4:
        raise DomainError("bump steepness b must be >= 4")
    d = bump_derivs(y, b, 4)
    return JetScalar(float(d[0]), {(0,) * k: float(d[k]) for k in range(1, 5)}, 4)


def check_bump_signs(b: float = DEFAULT_B, count: int = 10001, eps: float = 1e-6) -> bool:
    """f < 0, f' > 0, f'' < 0, f''' > 0, f'''' < 0 on a grid of [0, 1 - eps]."""
    y = np.linspace(0.0, 1.0 - eps, count)
    d = bump_derivs(y, b, 4, scaled=True)
    want = np.array([-1, 1, -1, 1, -1])
    return bool(np.all(np.sign(d) == want))


@dataclass(frozen=True)
class DerivCombos:
    """A = f'f'', B = f'f''' + f''^2, C = f'f'''' + 3 f''f'''."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray

    @classmethod
    def at(cls, y, b: float = DEFAULT_B, scaled: bool = False) -> "DerivCombos":
        d = bump_derivs(y, b, 4, scaled)
        return cls(d[..., 1] * d[..., 2], d[..., 1] * d[..., 3] + d[..., 2] ** 2,
                   d[..., 1] * d[..., 4] + 3 * d[..., 2] * d[..., 3])


# ---------------------------------------------------------------------------
# parameters and phi


@dataclass(frozen=True)
class BumpParams:
    lam: float
    r: float
    alpha: tuple
    b: float = DEFAULT_B
    center: tuple | None = None

    def __post_init__(self):
        alpha = tuple(Fraction(a).limit_denominator(10**6) if not isinstance(a, Fraction) else a
                      for a in self.alpha)
        object.__setattr__(self, "alpha", alpha)
        if not 1 <= self.lam <= 2:
            raise DomainError(f"lambda must lie in [1, 2], got {self.lam}")
        if not self.r > 0:
            raise DomainError("radius must be positive")
        if not self.b > 0:
            raise DomainError("bump steepness must be positive")
        if any(not (1 <= a <= 2) for a in alpha):
            raise DomainError(f"alpha entries must lie in [1, 2], got {alpha}")
        if self.center is None:
            object.__setattr__(self, "center", (0.0,) * len(alpha))
        if len(self.center) != len(alpha):
            raise DomainError("center and alpha have different dimensions")

    @property
    def n(self) -> int:
        return len(self.alpha)

    @property
    def alpha_f(self) -> np.ndarray:
        return np.array([float(a) for a in self.alpha])

    @property
    def distinct(self) -> bool:
        return len(set(self.alpha)) == len(self.alpha)

    def local(self, points) -> np.ndarray:
        return as_points(points) - np.asarray(self.center, dtype=float)

    def argument(self, points) -> np.ndarray:
        x = self.local(points)
        return (x**2 @ self.alpha_f) / self.r**2

    def inside(self, points) -> np.ndarray:
        return self.argument(points) < 1.0


def phi_jets(points, params: BumpParams, order: int, scaled: bool = False) -> np.ndarray:
    """Taylor jets of phi at each point (``scaled`` divides out the profile's exponential)."""
    pts = as_points(points)
    xs = coordinate_jets(params.local(pts), order)
    q = sum((float(a) / params.r**2) * x * x for a, x in zip(params.alpha, xs))
    d = bump_derivs(q.value, params.b, order, scaled)
    return 0.5 * params.lam * params.r**2 * jcompose(q.c, d, params.n)


def phi(p, params: BumpParams) -> JetScalar:
    return JetScalar.from_coeffs(phi_jets(p, params, 4)[0], params.n)


@dataclass
class PhiFormulas:
    """Closed-form partial derivatives of phi in flat coordinates."""

    d1: np.ndarray
    d2: np.ndarray
    d3: np.ndarray
    d4: np.ndarray
    lap: np.ndarray
    dlap: np.ndarray
    hesslap: np.ndarray
    bilap: np.ndarray


def phi_formulas(points, params: BumpParams, scaled: bool = False) -> PhiFormulas:
    x = params.local(points)
    a = params.alpha_f
    lam, r = params.lam, params.r
    y = params.argument(points)
    f = bump_derivs(y, params.b, 4, scaled)
    f1, f2, f3, f4 = (f[..., k] for k in range(1, 5))
    n = params.n
    eye = np.eye(n)
    ax = a * x
    s1 = a.sum()
    s2 = (a**2 * x**2).sum(-1)
    e = lambda *t: np.einsum(*t)  # noqa: E731
    d1 = lam * f1[:, None] * ax
    d2 = lam * (e("i,ij,N->Nij", a, eye, f1) + 2 / r**2 * e("Ni,Nj,N->Nij", ax, ax, f2))
    # phi_ijk
    t2 = (e("Nk,ij->Nijk", ax, eye) + e("Nj,ik->Nijk", ax, eye) + e("j,Ni,jk->Nijk", a, x, eye))
    d3 = 2 * lam / r**2 * a[None, :, None, None] * (
        t2 * f2[:, None, None, None]
        + 2 / r**2 * e("Nj,Nk,Ni,N->Nijk", ax, ax, x, f3))
    # phi_ijkt
    dd = (e("k,kt,ij->ijkt", a, eye, eye) + e("j,jt,ik->ijkt", a, eye, eye)
          + e("j,it,jk->ijkt", a, eye, eye))
    third = (e("Nj,Nk,it->Nijkt", ax, ax, eye) + e("j,Nk,Ni,jt->Nijkt", a, ax, x, eye)
             + e("k,Nj,Ni,kt->Nijkt", a, ax, x, eye)
             + e("Nt,Nk,ij->Nijkt", ax, ax, eye) + e("Nt,Nj,ik->Nijkt", ax, ax, eye)
             + e("Nt,j,Ni,jk->Nijkt", ax, a, x, eye))
    d4 = 2 * lam / r**2 * a[None, :, None, None, None] * (
        4 / r**4 * e("Nj,Nk,Nt,Ni,N->Nijkt", ax, ax, ax, x, f4)
        + dd[None] * f2[:, None, None, None, None]
        + 2 / r**2 * third * f3[:, None, None, None, None])
    lap = lam * (f1 * s1 + 2 / r**2 * f2 * s2)
    dlap = 2 * lam / r**2 * ((2 * a**2 * x + ax * s1) * f2[:, None]
                             + 2 / r**2 * (f3 * s2)[:, None] * ax)
    hesslap = 2 * lam / r**2 * a[None, :, None] * (
        e("j,jk,N->Njk", 2 * a + s1, eye, f2)
        + 2 / r**2 * (e("k,j,Nj,Nk,N->Njk", a, 2 * a + s1, x, x, f3)
                      + 2 * e("k,Nj,Nk,N->Njk", a**2, x, x, f3)
                      + e("N,jk,N->Njk", s2, eye, f3))
        + 4 / r**4 * e("k,N,Nj,Nk,N->Njk", a, s2, x, x, f4))
    bilap = 2 * lam / r**2 * ((2 * (a**2).sum() + s1**2) * f2
                              + 4 / r**2 * (2 * (a**3 * x**2).sum(-1) + s1 * s2) * f3
                              + 4 / r**4 * s2**2 * f4)
    return PhiFormulas(d1, d2, d3, d4, lap, dlap, hesslap, bilap)


# ---------------------------------------------------------------------------
# the deformed metric


def deform_metric(g: MetricField, params: BumpParams) -> MetricField:
    """g~ = g + dphi (x) dphi as a metric field with jets up to g's order."""
    if g.dim != params.n:
        raise DomainError("bump and metric dimensions differ")
    n = g.dim

    def jet_fn(points, order):
        base = g.jets(points, order)
        dphi = jgrad(phi_jets(points, params, order + 1), n)
        return base + jeinsum("i,j->ij", dphi, dphi, n, order)

    return MetricField(jet_fn, n, g.max_order, f"{g.name}+bump")


def flat_metric(n: int) -> MetricField:
    from .jets import jconst

    def jet_fn(points, order):
        pts = as_points(points)
        return jconst(np.broadcast_to(np.eye(n), pts.shape[:-1] + (n, n)), n, order)

    return MetricField(jet_fn, n, 8, f"flat{n}")


@dataclass
class ScaledCurvature:
    """Curvature of the flat-background deformation with a per-point log scale.

    For points deep in the tail the deformation is replaced by a smaller
    one with the same shape; tensors are linear in that amplitude to leading
    order, so the true tensors are ``jets.<tensor> * exp(log_ratio)``.
    """

    jets: CurvatureJets
    log_ratio: np.ndarray

    def log_norm_sq(self, tensor: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(tensor_norm_sq(tensor, self.jets.ginv[..., 0])) + 2 * self.log_ratio


def deformed_curvature_flat(points, params: BumpParams, upto: str = "weyl",
                            floor: float = 1e-100) -> ScaledCurvature:
    """Deformed curvature on a flat background, robust to underflow near the edge of the ball."""
    n = params.n
    order = {"riemann": 2, "weyl": 2, "cotton": 3, "bach": 4}[upto]
    pts = as_points(points)
    y = params.argument(pts)
    logE = bump_log_scale(y, params.b)
    # amplitude of dphi (x) dphi is exp(2 logE) times the scaled outer product
    log_amp = np.maximum(2 * logE, math.log(floor))
    dphi = jgrad(phi_jets(pts, params, order + 1, scaled=True), n)
    outer = jeinsum("i,j->ij", dphi, dphi, n, order)
    amp = np.exp(log_amp)
    outer = outer * amp[:, None, None, None]
    outer[..., 0] += np.eye(n)
    cj = curvature_jets(outer, n, upto)
    ratio = np.where(np.isfinite(logE), 2 * logE - log_amp, -np.inf)
    return ScaledCurvature(cj, ratio)


# ---------------------------------------------------------------------------
# closed forms on an arbitrary background


@dataclass
class ClosedFormInputs:
    """Background curvature and covariant phi derivatives at a batch of points."""

    n: int
    g: np.ndarray
    ginv: np.ndarray
    riem: np.ndarray
    ric: np.ndarray
    scal: np.ndarray
    weyl: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray
    cotton: np.ndarray | None = None
    phi3: np.ndarray | None = None
    d_riem: np.ndarray | None = None
    d_ric: np.ndarray | None = None
    d_scal: np.ndarray | None = None


def closed_form_inputs(g: MetricField, params: BumpParams, points, family: str = "weyl") -> ClosedFormInputs:
    n = g.dim
    k = 3 if family == "cotton" else 2
    cj = curvature_jets(g.jets(as_points(points), k), n, "cotton" if family == "cotton" else "weyl")
    ph = phi_jets(points, params, k)
    d1 = jgrad(ph, n)
    d2 = covariant_derivative_jet(d1, cj.gamma, n, 1)
    inp = ClosedFormInputs(n, cj.g[..., 0], cj.ginv[..., 0], cj.riem[..., 0], cj.ric[..., 0],
                           cj.scal[..., 0], cj.weyl[..., 0], d1[..., 0], d2[..., 0])
    if family == "cotton":
        inp.cotton = cj.cotton[..., 0]
        inp.phi3 = covariant_derivative_jet(d2, cj.gamma, n, 2)[..., 0]
        inp.d_riem = covariant_derivative_jet(cj.riem, cj.gamma, n, 4)[..., 0]
        inp.d_ric = covariant_derivative_jet(cj.ric, cj.gamma, n, 2)[..., 0]
        inp.d_scal = jgrad(cj.scal, n)[..., 0]
    return inp


def _e(subs, *ops):
    return np.einsum(subs, *ops)


def deformed_weyl_closed_form(inp: ClosedFormInputs, variant: str = "literal") -> np.ndarray:
    """Weyl tensor of g + dphi (x) dphi from background data.

    ``variant="literal"`` evaluates the classical expression exactly as it is
    usually printed.  ``variant="corrected"`` flips the sign of the Ricci
    block and of the last Riemann term; the two agree whenever the background
    is flat.
    """
    if variant not in ("literal", "corrected"):
        raise ValueError(f"unknown variant {variant!r}")
    n = inp.n
    g, gi, Rm, Ric, S = inp.g, inp.ginv, inp.riem, inp.ric, inp.scal
    p1, H = inp.phi1, inp.phi2
    up = _e("...ip,...p->...i", gi, p1)
    w = 1.0 + _e("...i,...i->...", up, p1)
    Hm = _e("...kq,...qp->...kp", H, gi)  # phi_k^p
    lap = _e("...ij,...ij->...", gi, H)
    hsq = _e("...ij,...ia,...jb,...ab->...", H, gi, gi, H)
    pp = _e("...i,...j->...ij", p1, p1)
    G = g + pp
    W = lambda s: s[..., None, None, None, None]  # noqa: E731
    kn = kulkarni_nomizu
    half_gg = 0.5 * kn(g, g)
    bracket = half_gg + kn(g, pp)
    sign_ric = -1.0 if variant == "corrected" else 1.0

    out = inp.weyl + (_e("...ik,...jt->...ijkt", H, H) - _e("...it,...jk->...ijkt", H, H)) / W(w)
    out = out + sign_ric / (n - 2) * kn(Ric, pp)
    out = out + W(S) / ((n - 1) * (n - 2)) * kn(g, pp)
    rpp = _e("...ipkq,...p,...q->...ik", Rm, up, up)
    riem_block = (_e("...ik,...jt->...ijkt", rpp, G) - _e("...it,...jk->...ijkt", rpp, G)
                  + _e("...jt,...ik->...ijkt", rpp, G))
    last_g = G if variant == "corrected" else g - pp
    riem_block = riem_block - _e("...jk,...it->...ijkt", rpp, last_g)
    out = out + riem_block / W(w * (n - 2))
    ricpp = _e("...pq,...p,...q->...", Ric, up, up)
    out = out - W(2 * ricpp / (w * (n - 1) * (n - 2))) * bracket
    Q = lap[..., None, None] * H - _e("...ip,...kp->...ik", H, Hm)
    out = out - kn(Q, G) / W(w * (n - 2))
    out = out + W((lap**2 - hsq) / (w * (n - 1) * (n - 2))) * bracket
    hpp = _e("...pq,...p,...q->...", H, up, up)
    hp = _e("...ip,...p->...i", H, up)
    P = hpp[..., None, None] * H - _e("...i,...k->...ik", hp, hp)
    out = out + kn(P, G) / W(w**2 * (n - 2))
    quad = lap * hpp - _e("...p,...pq,...q->...", hp, gi, hp)
    out = out - W(2 * quad / (w**2 * (n - 1) * (n - 2))) * (half_gg + kn(g, pp))
    return out


def cotton_deformed_closed_form(inp: ClosedFormInputs, variant: str = "literal") -> np.ndarray:
    """Cotton tensor C~_ijk of g + dphi (x) dphi from background data, block by block.

    ``variant="literal"`` follows the classical printed expression.  In
    ``"corrected"`` the group d_k(lap phi^p phi^q phi_pq - |phi^p phi_pk|^2) in
    the 1/w^2 scalar blocks enters with weight -2 instead of +1 and the 1/w^3
    block changes sign; that is what differentiating the exact flat-background
    Schouten tensor produces.  Both agree to second order in phi.
    """
    if variant not in ("literal", "corrected"):
        raise ValueError(f"unknown variant {variant!r}")
    if inp.phi3 is None:
        raise PreconditionError("cotton closed form needs third phi derivatives (family='cotton')")
    n = inp.n
    g, gi, R, Ric = inp.g, inp.ginv, inp.riem, inp.ric
    dR, dRic, dS = inp.d_riem, inp.d_ric, inp.d_scal
    p1, H, T = inp.phi1, inp.phi2, inp.phi3
    up = _e("...ip,...p->...i", gi, p1)
    w = 1.0 + _e("...i,...i->...", up, p1)
    Hm = _e("...kq,...qt->...kt", H, gi)  # phi_k^t
    Hu = _e("...pa,...ab->...pb", gi, Hm)  # phi^{pq}
    lap = _e("...ij,...ij->...", gi, H)
    dlap = _e("...ij,...ijk->...k", gi, T)
    hsq = _e("...pq,...pq->...", H, Hu)
    ak = _e("...p,...kp->...k", up, H)  # phi^p phi_kp
    h2 = _e("...k,...k->...", ak, up)  # phi^p phi^q phi_pq
    G = g + _e("...i,...j->...ij", p1, p1)
    e3 = lambda s: s[..., None, None, None]  # noqa: E731
    e2 = lambda s: s[..., None, None]  # noqa: E731
    e1 = lambda s: s[..., None]  # noqa: E731

    out = inp.cotton.copy()
    # block 1
    X = _e("...kt,...s->...kts", Hm, up) + _e("...ks,...t->...kts", Hm, up)
    out -= (_e("...kts,...itjs->...ijk", X, R) - _e("...jts,...itks->...ijk", X, R)) / e3(w)
    # blocks 2, 3
    rpts = _e("...ptjs,...t,...s->...pj", R, up, up)
    inner = (rpts + e2(h2) * H - _e("...p,...j->...pj", ak, ak)
             - e2(lap) * H + _e("...pt,...jt->...pj", H, Hm))
    V = _e("...p,...jp->...j", up, Ric) - _e("...p,...pj->...j", up, inner) / e1(w)
    out += (-_e("...ik,...j->...ijk", H, V) + _e("...ij,...k->...ijk", H, V)) / e3(w)
    # block 4
    b4 = (_e("...k,...ij->...ijk", dlap, H) - _e("...j,...ik->...ijk", dlap, H)
          + e3(lap) * _e("...s,...sijk->...ijk", up, R)
          - _e("...it,...s,...stjk->...ijk", Hm, up, R)
          + _e("...kt,...itj->...ijk", Hm, T) - _e("...jt,...itk->...ijk", Hm, T)
          + _e("...t,...s,...itjsk->...ijk", up, up, dR) - _e("...t,...s,...itksj->...ijk", up, up, dR))
    out += b4 / e3(w)
    # block 5
    rpp = _e("...itjs,...t,...s->...ij", R, up, up)
    Q = e2(lap) * H - _e("...it,...kt->...ik", H, Hm)
    b5 = (_e("...k,...ij->...ijk", ak, rpp) - _e("...j,...ik->...ijk", ak, rpp)
          + _e("...j,...ik->...ijk", ak, Q) - _e("...k,...ij->...ijk", ak, Q))
    out += 2 * b5 / e3(w**2)
    # block 6
    b6 = (_e("...ks,...ij,...s->...ijk", Hm, H, ak) - _e("...ks,...is,...j->...ijk", Hm, H, ak)
          - _e("...jt,...ik,...t->...ijk", Hm, H, ak) + _e("...jt,...it,...k->...ijk", Hm, H, ak))
    out -= b6 / e3(w**2)
    # block 7
    b7 = (_e("...ks,...ij,...s->...ijk", Hm, H, ak) - _e("...ks,...i,...js->...ijk", Hm, ak, H)
          - _e("...jt,...ik,...t->...ijk", Hm, H, ak) + _e("...jt,...i,...kt->...ijk", Hm, ak, H))
    out -= b7 / e3(w**2)
    # block 8
    Tpp = _e("...tsk,...t,...s->...k", T, up, up)
    Tp = _e("...itk,...t->...ik", T, up)
    b8 = (e3(h2) * _e("...r,...rijk->...ijk", up, R)
          - _e("...r,...s,...rsjk,...i->...ijk", up, up, R, ak)
          + _e("...k,...ij->...ijk", Tpp, H) - _e("...j,...ik->...ijk", Tpp, H)
          - _e("...ik,...j->...ijk", Tp, ak) + _e("...ij,...k->...ijk", Tp, ak))
    out -= b8 / e3(w**2)
    # block 9
    M = e2(h2) * H - _e("...i,...j->...ij", ak, ak)
    b9 = _e("...k,...ij->...ijk", ak, M) - _e("...j,...ik->...ijk", ak, M)
    out += (4 if variant == "corrected" else -4) * b9 / e3(w**3)
    # blocks 10, 11
    Y = (_e("...p,...q,...pqk->...k", up, up, dRic) + 2 * _e("...pq,...p,...kq->...k", Ric, up, Hm)
         + 2 * e1(lap) * dlap - 2 * _e("...pq,...pqk->...k", Hu, T))
    out += (-_e("...k,...ij->...ijk", Y, G) + _e("...j,...ik->...ijk", Y, G)) / e3(2 * w * (n - 1))
    # blocks 12, 13
    ricpp = _e("...st,...s,...t->...", Ric, up, up)
    akak = _e("...s,...st,...t->...", ak, gi, ak)
    bracket = 2 * ricpp - lap**2 + hsq + 4 / w * (lap * h2 - akak)
    dY = (dlap * e1(h2) + e1(lap) * Tpp
          + 2 * e1(lap) * _e("...kq,...q->...k", Hm, ak)
          - 2 * _e("...p,...q,...ps,...sqk->...k", up, up, Hm, T)
          - 2 * _e("...q,...qs,...sk->...k", ak, Hu, H))
    Z = 2 * ak * e1(bracket) + (-2 if variant == "corrected" else 1) * dY
    out += (-_e("...k,...ij->...ijk", Z, G) + _e("...j,...ik->...ijk", Z, G)) / e3(2 * w**2 * (n - 1))
    # block 14
    out -= 2 / (n - 1) * (_e("...k,...i,...j->...ijk", dS, p1, p1) - _e("...j,...i,...k->...ijk", dS, p1, p1))
    return out


# ---------------------------------------------------------------------------
# exact principal coefficients


@dataclass(frozen=True)
class PrincipalCoeffs:
    """Exact coefficients of a principal-part family.

    ``a2[i, j]`` and ``a3[i, j, k]`` are rationals and ``b2[i, j]`` is the tuple
    of coefficients of x_1^2 ... x_n^2; each family multiplies them by the
    powers of 1/r listed in ``r_power``.
    """

    family: str
    n: int
    alpha: tuple
    a2: dict
    b2: dict
    a3: dict
    r_power: dict = field(default_factory=dict)

    @property
    def distinct(self) -> bool:
        return len(set(self.alpha)) == len(self.alpha)

    def b_value(self, i: int, j: int, x: np.ndarray) -> np.ndarray:
        c = np.array([float(v) for v in self.b2[i, j]])
        return np.asarray(x) ** 2 @ c

    def table(self) -> dict:
        fmt = lambda q: str(q)  # noqa: E731
        return {
            "family": self.family, "n": self.n, "alpha": [fmt(a) for a in self.alpha],
            "r_power": self.r_power,
            "a_ij": {f"{i + 1}{j + 1}": fmt(v) for (i, j), v in sorted(self.a2.items())},
            "a_ijk": {f"{i + 1}{j + 1}{k + 1}": fmt(v) for (i, j, k), v in sorted(self.a3.items())},
            "b_ij": {f"{i + 1}{j + 1}": [fmt(c) for c in v] for (i, j), v in sorted(self.b2.items())},
        }


def _as_fracs(alpha) -> tuple[Fraction, ...]:
    return tuple(Fraction(a) for a in alpha)


def weyl_coeffs(alpha: Sequence, n: int | None = None) -> PrincipalCoeffs:
    al = _as_fracs(alpha)
    n = len(al) if n is None else n
    if n != len(al):
        raise DomainError("alpha length must equal n")
    if n < 4:
        raise DomainError("Weyl principal coefficients need n >= 4")
    pair_sum = sum(al[k] * al[l] for k in range(n) for l in range(k + 1, n))
    a2, b2, a3 = {}, {}, {}
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            rest = sum(al[k] for k in range(n) if k not in (i, j))
            a2[i, j] = ((n - 4) * al[i] * al[j] - (al[i] + al[j]) * rest
                        + Fraction(2, n - 1) * pair_sum) / (n - 2)
            coeff = [Fraction(0)] * n
            coeff[i] += (n - 4) * al[i] * al[i] * al[j] - al[i] ** 2 * rest
            coeff[j] += (n - 4) * al[j] * al[i] * al[j] - al[j] ** 2 * rest
            for k in range(n):
                if k not in (i, j):
                    coeff[k] -= (al[i] + al[j]) * al[k] ** 2
            for k in range(n):
                for l in range(n):
                    if l != k:
                        coeff[l] += Fraction(2, n - 1) * al[k] * al[l] ** 2
            b2[i, j] = tuple(Fraction(2, n - 2) * c for c in coeff)
            for k in range(n):
                if k in (i, j):
                    continue
                others = sum(al[l] for l in range(n) if l not in (i, j, k))
                a3[i, j, k] = Fraction(2, n - 2) * al[j] * al[k] * ((n - 3) * al[i] - others)
    return PrincipalCoeffs("weyl", n, al, a2, b2, a3, {"a_ij": 0, "b_ij": 2, "a_ijk": 2})


def cotton_coeffs(alpha: Sequence, n: int | None = None) -> PrincipalCoeffs:
    al = _as_fracs(alpha)
    n = len(al) if n is None else n
    if n != len(al):
        raise DomainError("alpha length must equal n")
    pair_sum = sum(al[k] * al[l] for k in range(n) for l in range(k + 1, n))
    a2, b2, a3 = {}, {}, {}
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            rest = sum(al[k] for k in range(n) if k not in (i, j))
            not_j = sum(al[k] for k in range(n) if k != j)
            a2[i, j] = 2 * al[j] * (-4 * al[i] * al[j] - al[i] * rest
                                    + Fraction(2, n - 1) * (al[j] * not_j + pair_sum))
            coeff = [Fraction(0)] * n
            coeff[i] -= al[i] * al[i] * al[j]
            for k in range(n):
                if k != i:
                    coeff[k] -= al[i] * al[k] ** 2
            for k in range(n):
                for l in range(n):
                    if l != k:
                        coeff[l] += Fraction(1, n - 1) * al[k] * al[l] ** 2
            b2[i, j] = tuple(4 * al[j] * c for c in coeff)
            for k in range(n):
                if k not in (i, j):
                    a3[i, j, k] = 4 * al[i] * al[j] * al[k] * (al[k] - al[j])
    return PrincipalCoeffs("cotton", n, al, a2, b2, a3, {"a_ij": 2, "b_ij": 4, "a_ijk": 4})


# ---------------------------------------------------------------------------
# principal parts


@dataclass
class PrincipalRecord:
    """Principal parts at a batch of points.

    ``tensor`` is the full principal tensor built from the closed-form phi
    derivatives; the component arrays come from the exact coefficient tables.
    """

    tensor: np.ndarray
    components: dict


def _fsc(params: BumpParams, points, scaled: bool):
    y = params.argument(points)
    return bump_derivs(y, params.b, 4, scaled)


def weyl_principal_tensor(params: BumpParams, points, scaled: bool = False) -> np.ndarray:
    n = params.n
    pf = phi_formulas(points, params, scaled)
    H, lap = pf.d2, pf.lap
    d = np.eye(n)
    hh = _e("...ip,...pk->...ik", H, H)
    out = _e("...ik,...jl->...ijkl", H, H) - _e("...il,...jk->...ijkl", H, H)
    out -= lap[:, None, None, None, None] * kulkarni_nomizu(H, np.broadcast_to(d, H.shape)) / (n - 2)
    out += kulkarni_nomizu(hh, np.broadcast_to(d, H.shape)) / (n - 2)
    hsq = _e("...ij,...ij->...", H, H)
    out += ((lap**2 - hsq) / ((n - 1) * (n - 2)))[:, None, None, None, None] * (
        0.5 * kulkarni_nomizu(d, d))[None]
    return out


def weyl_principal(params: BumpParams, points, scaled: bool = False) -> PrincipalRecord:
    """W~ - W at principal order: ijij = lam^2 [a_ij f'^2 + b_ij f'f'']; ijik = lam^2 a_ijk x_j x_k f'f''."""
    n = params.n
    co = weyl_coeffs(params.alpha)
    x = params.local(points)
    f = _fsc(params, points, scaled)
    lam2, r2 = params.lam**2, params.r**2
    ijij = np.zeros((len(x), n, n))
    ijik = np.zeros((len(x), n, n, n))
    for (i, j), a in co.a2.items():
        ijij[:, i, j] = lam2 * (float(a) * f[:, 1] ** 2 + co.b_value(i, j, x) / r2 * f[:, 1] * f[:, 2])
    for (i, j, k), a in co.a3.items():
        ijik[:, i, j, k] = lam2 * float(a) / r2 * x[:, j] * x[:, k] * f[:, 1] * f[:, 2]
    return PrincipalRecord(weyl_principal_tensor(params, points, scaled),
                           {"ijij": ijij, "ijik": ijik, "ijkl": 0.0})


def sd_principal(params: BumpParams, points, t: float, orientation: int = 1,
                 scaled: bool = False) -> PrincipalRecord:
    """Principal part of W~+ + t W~- from the coefficient tables and the duality sign table."""
    from .duality import complement, mixed_weyl, split_weyl

    if params.n != 4:
        raise DomainError("self-dual splitting needs n = 4")
    base = weyl_principal(params, points, scaled)
    pt = mixed_weyl(split_weyl(base.tensor, np.eye(4), orientation), t)
    ijij, ijik = base.components["ijij"], base.components["ijik"]
    N = len(ijij)
    c_ijij = np.zeros((N, 4, 4))
    c_ijik = np.zeros((N, 4, 4, 4))
    c_ijkl = np.zeros((N, 4, 4, 4, 4))
    for i in range(4):
        for j in range(4):
            if i == j:
                continue
            c_ijij[:, i, j] = 0.5 * (1 + t) * ijij[:, i, j]
            for k in range(4):
                if k in (i, j):
                    continue
                l = 6 - i - j - k
                (a, b), s = complement(i, k, orientation)
                sigma = -1 if (a, b) == (j, l) else 1  # W_ij(ab) = sigma W_jijl
                c_ijik[:, i, j, k] = 0.5 * ((1 + t) * ijik[:, i, j, k] + s * sigma * (1 - t) * ijik[:, j, i, l])
                (a, b), s = complement(k, l, orientation)
                c_ijkl[:, i, j, k, l] = 0.5 * (1 - t) * s * (ijij[:, i, j] if (a, b) == (i, j) else -ijij[:, i, j])
    return PrincipalRecord(pt, {"ijij": c_ijij, "ijik": c_ijik, "ijkl": c_ijkl})


def cotton_principal_tensor(params: BumpParams, points, scaled: bool = False) -> np.ndarray:
    n = params.n
    pf = phi_formulas(points, params, scaled)
    H, T, lap, dl = pf.d2, pf.d3, pf.lap, pf.dlap
    d = np.eye(n)
    out = (_e("...k,...ij->...ijk", dl, H) - _e("...j,...ik->...ijk", dl, H)
           + _e("...tk,...itj->...ijk", H, T) - _e("...tj,...itk->...ijk", H, T))
    v = lap[:, None] * dl - _e("...pq,...pqk->...k", H, T)
    out -= (_e("...k,ij->...ijk", v, d) - _e("...j,ik->...ijk", v, d)) / (n - 1)
    return out


def cotton_principal(params: BumpParams, points, scaled: bool = False) -> PrincipalRecord:
    """C~ - C at principal order: iji = lam^2 {a_ij f'f'' + b_ij B} x_j; ijk = lam^2 a_ijk x_i x_j x_k B."""
    if not params.distinct:
        raise PreconditionError("Cotton principal coefficients need pairwise distinct alpha")
    n = params.n
    co = cotton_coeffs(params.alpha)
    x = params.local(points)
    f = _fsc(params, points, scaled)
    A = f[:, 1] * f[:, 2]
    B = f[:, 1] * f[:, 3] + f[:, 2] ** 2
    lam2, r2 = params.lam**2, params.r**2
    iji = np.zeros((len(x), n, n))
    ijk = np.zeros((len(x), n, n, n))
    for (i, j), a in co.a2.items():
        iji[:, i, j] = lam2 * (float(a) / r2 * A + co.b_value(i, j, x) / r2**2 * B) * x[:, j]
    for (i, j, k), a in co.a3.items():
        ijk[:, i, j, k] = lam2 * float(a) / r2**2 * x[:, i] * x[:, j] * x[:, k] * B
    return PrincipalRecord(cotton_principal_tensor(params, points, scaled), {"iji": iji, "ijk": ijk})


# ---------------------------------------------------------------------------
# Bach principal part


Poly = dict  # exponent tuple -> Fraction


def _quad(coeffs) -> Poly:
    n = len(coeffs)
    out = {}
    for k, c in enumerate(coeffs):
        c = Fraction(c)
        if c:
            e = [0] * n
            e[k] = 2
            out[tuple(e)] = out.get(tuple(e), 0) + c
    return out


def _pmul(p: Poly, q: Poly) -> Poly:
    out = {}
    for e1, c1 in p.items():
        for e2, c2 in q.items():
            e = tuple(a + b for a, b in zip(e1, e2))
            out[e] = out.get(e, 0) + c1 * c2
    return {e: c for e, c in out.items() if c}


def _padd(*ps: Poly) -> Poly:
    out = {}
    for p in ps:
        for e, c in p.items():
            out[e] = out.get(e, 0) + c
    return {e: c for e, c in out.items() if c}


def _pscale(p: Poly, s) -> Poly:
    s = Fraction(s)
    return {e: c * s for e, c in p.items() if c * s}


def _mono(n: int, *idx: int) -> Poly:
    e = [0] * n
    for i in idx:
        e[i] += 1
    return {tuple(e): Fraction(1)}


def _const(n: int, c) -> Poly:
    c = Fraction(c)
    return {(0,) * n: c} if c else {}


def peval(p: Poly, x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(x)
    out = np.zeros(len(x))
    for e, c in p.items():
        out += float(c) * np.prod(x ** np.array(e), axis=-1)
    return out


@dataclass(frozen=True)
class BachPrincipalTable:
    """B~_ij - B_ij = lam^2 [P^A_ij A / r^2 + P^B_ij B / r^4 + P^C_ij C / r^6] at principal order."""

    n: int
    alpha: tuple
    source: str
    entries: dict  # (i, j), i <= j -> {"A": Poly, "B": Poly, "C": Poly}

    def A_coeffs(self) -> tuple[Fraction, ...]:
        z = (0,) * self.n
        return tuple(self.entries[i, i]["A"].get(z, Fraction(0)) for i in range(self.n))

    def evaluate(self, lam: float, r: float, x: np.ndarray, combos: DerivCombos) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        xs = x / r  # polynomials are homogeneous: P^B(x)/r^4 = P^B(x/r)/r^2, P^C(x)/r^6 = P^C(x/r)/r^2
        out = np.zeros((len(x), self.n, self.n))
        for (i, j), e in self.entries.items():
            v = lam**2 / r**2 * (peval(e["A"], xs) * combos.A + peval(e["B"], xs) * combos.B
                                 + peval(e["C"], xs) * combos.C)
            out[:, i, j] = v
            out[:, j, i] = v
        return out


def bach_table_printed() -> BachPrincipalTable:
    """The explicit table for alpha = (1, 5/4, 3/2, 2), transcribed as exact rationals."""
    F = Fraction
    n = 4
    off = {
        (0, 1): (F(5, 3), [F(1), F(75, 32), F(9, 2), F(12)], 1, F(141, 8)),
        (0, 2): (F(2), [F(1, 4), F(75, 64), F(45, 16), F(9)], 1, F(189, 16)),
        (0, 3): (F(8, 3), [F(5, 4), F(75, 64), F(9, 16), F(-3)], -1, F(-9, 16)),
        (1, 2): (F(5, 2), [F(-1, 2), F(0), F(9, 8), F(6)], 1, F(19, 4)),
        (1, 3): (F(10, 3), [F(1), F(75, 32), F(9, 4), F(0)], -1, F(-73, 8)),
        (2, 3): (F(4), [F(11, 4), F(225, 64), F(63, 16), F(3)], -1, F(-287, 16)),
    }
    entries = {}
    for (i, j), (K, q, sgn, beta) in off.items():
        m = _mono(n, i, j)
        entries[i, j] = {"A": {}, "B": _pscale(m, K * beta), "C": _pscale(_pmul(_quad(q), m), 2 * sgn * K)}
    diag = {
        0: (F(-323, 12), (F(1, 3), [F(7, 2), F(-4175, 32), F(-2727, 16), F(-217)]),
            (F(8, 3), [F(1), F(25, 16), F(9, 4), F(4)], [F(-7, 4), F(-75, 32), F(-45, 16), F(-3)], 1,
             [F(7, 4), F(225, 64), F(99, 16), F(15)])),
        1: (F(-41, 6), (F(1), [F(-97, 6), F(75, 24), F(-21), F(2, 3)]),
            (F(1, 3), [F(8), F(25, 2), F(18), F(32)], [F(-1), F(-75, 64), F(-9, 8), F(0)], 1,
             [F(25, 8), F(1875, 128), F(1125, 32), F(225, 2)])),
        2: (F(53, 6), (F(1), [F(-43, 12), F(25, 24), F(39, 8), F(209, 3)]),
            (F(2), [F(4, 3), F(25, 12), F(3), F(16, 3)], [F(-1, 4), F(0), F(9, 16), F(3)], 1,
             [F(-15, 4), F(-225, 64), F(-27, 16), F(9)])),
        3: (F(299, 12), (F(1), [F(223, 12), F(3775, 96), F(1167, 16), F(2)]),
            (F(8, 3), [F(1), F(25, 16), F(9, 4), F(4)], [F(5, 4), F(75, 32), F(63, 16), F(9)], -1,
             [F(17), F(375, 16), F(117, 4), F(36)])),
    }
    for i, (a, (kb, qb), (kc, q1, q2, sgn, q3)) in diag.items():
        cpoly = _padd(_pmul(_quad(q1), _quad(q2)), _pscale(_pmul(_mono(n, i, i), _quad(q3)), sgn))
        entries[i, i] = {"A": _const(n, a), "B": _pscale(_quad(qb), kb), "C": _pscale(cpoly, kc)}
    return BachPrincipalTable(n, REFERENCE_ALPHA4, "printed", entries)


def bach_table_general(alpha: Sequence, offdiag_on_diagonal: bool = True) -> BachPrincipalTable:
    """Coefficients from the general-alpha principal expression for n = 4.

    The x_i x_j terms are added on the diagonal too when ``offdiag_on_diagonal``.
    """
    al = _as_fracs(alpha)
    n = len(al)
    F = Fraction
    s1 = sum(al)
    s2 = sum(a * a for a in al)
    s3 = sum(a**3 for a in al)
    S2 = _quad([a * a for a in al])
    S3 = _quad([a**3 for a in al])
    S4 = _quad([a**4 for a in al])
    entries = {}
    for i in range(n):
        for j in range(i, n):
            A, B, C = {}, {}, {}
            if i == j:
                ai = al[i]
                A = _const(n, F(2, 3) * (ai * (8 * s2 + 4 * s1 * (s1 - ai) - 8 * ai * ai)
                                         - s1 * (s2 + s1 * s1) + 2 * s3))
                B = _pscale(_padd(_pscale(S4, 4), _pscale(S3, 14 * ai - 3 * s1),
                                  _pscale(S2, ai * (7 * s1 - 6 * ai) + s2 - 2 * s1 * s1)), F(4, 3))
                C = _pscale(_pmul(S2, _padd(S3, _pscale(S2, 3 * ai - s1))), F(8, 3))
            if i != j or offdiag_on_diagonal:
                ai, aj = al[i], al[j]
                m = _mono(n, i, j)
                kb = F(4, 3) * ai * aj * (2 * s2 + s1 * s1 - 2 * (ai * ai + aj * aj + 6 * ai * aj) - (ai + aj) * s1)
                B = _padd(B, _pscale(m, kb))
                C = _padd(C, _pscale(_pmul(m, _padd(_pscale(S3, 2), _pscale(S2, -(3 * ai + 3 * aj - s1)))),
                                     F(8, 3) * ai * aj))
            entries[i, j] = {"A": A, "B": B, "C": C}
    return BachPrincipalTable(n, al, "general", entries)


def bach_principal_tensor(params: BumpParams, points, scaled: bool = False) -> np.ndarray:
    """Leading part of the deformed Bach tensor on a flat background, from phi derivatives.

    This is (1/(n-2)) d_k C~_jik with the principal Cotton part, i.e. the
    divergence term; the Ricci-Weyl contraction is of lower order.
    """
    n = params.n
    pf = phi_formulas(points, params, scaled)
    H, T, Q, lap, dl, hl, bl = pf.d2, pf.d3, pf.d4, pf.lap, pf.dlap, pf.hesslap, pf.bilap
    d = np.eye(n)
    # d_k of the principal Cotton part C_ijk, summed over k
    out = (bl[:, None, None] * H + _e("...k,...ijk->...ij", dl, T)
           - _e("...jk,...ik->...ij", hl, H) - _e("...j,...ikk->...ij", dl, T)
           + _e("...tkk,...itj->...ij", T, T) + _e("...tk,...itjk->...ij", H, Q)
           - _e("...tjk,...itk->...ij", T, T) - _e("...tj,...itkk->...ij", H, Q))
    scal = (_e("...k,...k->...", dl, dl) + lap * np.trace(hl, axis1=-2, axis2=-1)
            - _e("...pqk,...pqk->...", T, T) - _e("...pq,...pqkk->...", H, Q))
    mixed = (_e("...i,...j->...ij", dl, dl) + lap[:, None, None] * hl
             - _e("...pqi,...pqj->...ij", T, T) - _e("...pq,...pqji->...ij", H, Q))
    out -= (scal[:, None, None] * d - mixed) / (n - 1)
    return out / (n - 2)


def bach_principal(params: BumpParams, points, table: BachPrincipalTable | None = None,
                   scaled: bool = False) -> PrincipalRecord:
    """Bach principal part from the coefficient table and from phi derivatives.

    ``components["ij"]`` evaluates the table as given; it is twice
    ``tensor``, the leading term of the computed Bach tensor, because the
    tabulated expression omits the 1/(n - 2) = 1/2 normalisation.
    """
    if params.n != 4:
        raise DomainError("the Bach principal tables are for n = 4")
    if table is None:
        table = bach_table_printed() if params.alpha == REFERENCE_ALPHA4 else bach_table_general(params.alpha)
    x = params.local(points)
    combos = DerivCombos.at(params.argument(points), params.b, scaled)
    comp = table.evaluate(params.lam, params.r, x, combos)
    return PrincipalRecord(bach_principal_tensor(params, points, scaled), {"ij": comp})


def bach_center_constant(table: BachPrincipalTable | None = None) -> Fraction:
    """2 sum_i (A-coefficient_i)^2; |B~|^2 at the centre is this times lam^4 A^2 / r^4."""
    table = bach_table_printed() if table is None else table
    return 2 * sum(c * c for c in table.A_coeffs())


# ---------------------------------------------------------------------------
# conformal normalisation


def conformal_unit_normalize(g: MetricField, kind: str, region, tol: float = 1e-12,
                             bach_weight: int = 2) -> MetricField:
    """Rescale g conformally so that |W|^2 = 1 (kind 'weyl') or |B|^2 = 1 (kind 'bach').

    Weyl: g_bar = |W_g| g, since |W|^2 picks up the factor e^{-4u} under
    g -> e^{2u} g.  Bach (n = 4, componentwise weight ``bach_weight``):
    g_bar = |B_g|^{2 / (w + 2)} g.  The Bach-normalised field only carries
    value jets (its curvature would need eighth derivatives of g).
    """
    from .curvature import bach as bach_values

    pts = as_points(region)
    n = g.dim
    if kind == "weyl":
        cj = curvature_jets(g.jets(pts, 2), n, "weyl")
        norms = tensor_norm_sq(cj.weyl[..., 0], cj.ginv[..., 0])
    elif kind == "bach":
        if n != 4:
            raise DomainError("Bach normalisation relies on n = 4 conformal covariance")
        b = bach_values(g, pts)
        norms = tensor_norm_sq(b, np.linalg.inv(g.jets(pts, 0)[..., 0]))
    else:
        raise DomainError(f"unknown kind {kind!r}")
    scale = float(np.max(norms)) if len(norms) else 1.0
    bad = np.flatnonzero(~(norms > tol * scale) | (not scale > 0))
    if len(bad):
        raise PreconditionError(f"{kind} norm is not bounded away from zero on the region",
                                point=tuple(pts[bad[0]]))

    if kind == "weyl":
        def jet_fn(points, order):
            base = g.jets(points, order + 2)
            cj = curvature_jets(base, n, "weyl")
            nsq = norm_sq_jet(cj.weyl, cj.ginv, n, 4)
            factor = jpow(nsq, 0.5, n)
            return jmul(factor[..., None, None, :], truncate(base, n, order), n)

        return MetricField(jet_fn, n, max(g.max_order - 2, 0), f"|W|-normalised {g.name}")

    power = 2.0 / (bach_weight + 2)

    def jet_fn_b(points, order):
        if order > 0:
            from .errors import CapabilityError
            raise CapabilityError("Bach-normalised metric only provides value jets")
        pts_ = as_points(points)
        b = bach_values(g, pts_)
        base = g.jets(pts_, 0)
        nsq = tensor_norm_sq(b, np.linalg.inv(base[..., 0]))
        return base * (nsq ** (power / 2))[:, None, None, None]

    return MetricField(jet_fn_b, n, 0, f"|B|-normalised {g.name}")
