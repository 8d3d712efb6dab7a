"""Truncated multivariate Taylor jets (forward-mode differentiation).

A jet of order ``m`` in ``n`` variables is stored as a float array whose last
axis holds the Taylor coefficients ``c_alpha`` of ``f(p + h) = sum c_alpha h^alpha``
for every monomial of total degree ``<= m``.  Monomials are keyed by sorted
multi-indices (``(0, 0, 2)`` is ``h_0^2 h_2``) and laid out in graded order, so
truncating a jet to a lower order is a slice of the coefficient axis.

All leading axes are free: batches of points and tensor indices ride along and
broadcast like ordinary numpy arrays.  The partial derivative for a
multi-index ``alpha`` is ``alpha! * c_alpha``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Callable, Sequence

import numpy as np

from .errors import CapabilityError, DomainError, GeometryError

MAX_ORDER = 4
"""Largest jet order exposed on the public evaluation surface."""


# ---------------------------------------------------------------------------
# monomial bookkeeping


@lru_cache(maxsize=None)
def monomials(n: int, order: int) -> tuple[tuple[int, ...], ...]:
    """Sorted multi-indices of total degree <= order, in graded order."""
    out = []
    for d in range(order + 1):
        out.extend(itertools.combinations_with_replacement(range(n), d))
    return tuple(out)


def n_coeffs(n: int, order: int) -> int:
    return math.comb(n + order, order)


@lru_cache(maxsize=None)
def _index(n: int, order: int) -> dict[tuple[int, ...], int]:
    return {m: i for i, m in enumerate(monomials(n, order))}


@lru_cache(maxsize=None)
def _order_of(n: int, length: int) -> int:
    for m in range(64):
        size = n_coeffs(n, m)
        if size == length:
            return m
        if size > length:
            break
    raise ValueError(f"{length} is not a jet coefficient count for n={n}")


def jet_order(a: np.ndarray, n: int) -> int:
    return _order_of(n, a.shape[-1])


def _exponents(mi: tuple[int, ...], n: int) -> tuple[int, ...]:
    e = [0] * n
    for i in mi:
        e[i] += 1
    return tuple(e)


@lru_cache(maxsize=None)
def factorial_weights(n: int, order: int) -> np.ndarray:
    """alpha! for every monomial, turning Taylor coefficients into partials."""
    return np.array(
        [math.prod(math.factorial(k) for k in _exponents(m, n)) for m in monomials(n, order)],
        dtype=float,
    )


@lru_cache(maxsize=None)
def _mul_plan(n: int, order: int):
    """Index pairs (ia, ib) sorted by product monomial, with segment starts."""
    mons = monomials(n, order)
    index = _index(n, order)
    pairs = []
    for ia, a in enumerate(mons):
        for ib, b in enumerate(mons):
            if len(a) + len(b) <= order:
                pairs.append((index[tuple(sorted(a + b))], ia, ib))
    pairs.sort()
    t = np.array([p[0] for p in pairs])
    ia = np.array([p[1] for p in pairs])
    ib = np.array([p[2] for p in pairs])
    starts = np.flatnonzero(np.r_[True, t[1:] != t[:-1]])
    return ia, ib, starts


@lru_cache(maxsize=None)
def _grad_plan(n: int, order: int):
    """Source indices and factors for d/dh_i of an order-`order` jet."""
    if order < 1:
        raise CapabilityError("cannot differentiate an order-0 jet")
    index = _index(n, order)
    low = monomials(n, order - 1)
    idx = np.empty((n, len(low)), dtype=int)
    fac = np.empty((n, len(low)))
    for i in range(n):
        for k, m in enumerate(low):
            idx[i, k] = index[tuple(sorted(m + (i,)))]
            fac[i, k] = m.count(i) + 1
    return idx, fac


@lru_cache(maxsize=None)
def _full_index(n: int, order: int, k: int) -> np.ndarray:
    """Monomial index for every (unsorted) k-tuple of coordinate indices."""
    index = _index(n, order)
    out = np.empty((n,) * k, dtype=int)
    for tup in itertools.product(range(n), repeat=k):
        out[tup] = index[tuple(sorted(tup))]
    return out


# ---------------------------------------------------------------------------
# array-level jet algebra


def truncate(a: np.ndarray, n: int, order: int) -> np.ndarray:
    return a[..., : n_coeffs(n, order)]


def jmul(a: np.ndarray, b: np.ndarray, n: int, order: int | None = None) -> np.ndarray:
    """Elementwise product of two jet arrays (broadcasting leading axes)."""
    if order is None:
        order = min(jet_order(a, n), jet_order(b, n))
    ia, ib, starts = _mul_plan(n, order)
    return np.add.reduceat(a[..., ia] * b[..., ib], starts, axis=-1)


def jeinsum(subscripts: str, a: np.ndarray, b: np.ndarray, n: int,
            order: int | None = None) -> np.ndarray:
    """Tensor contraction of two jet-valued tensors.

    ``subscripts`` names only tensor axes (``"pij,pk->ijk"``); leading batch
    axes are broadcast and the coefficient axis is handled implicitly.
    """
    if order is None:
        order = min(jet_order(a, n), jet_order(b, n))
    ia, ib, starts = _mul_plan(n, order)
    lhs, out = subscripts.split("->")
    s1, s2 = lhs.split(",")
    prod = np.einsum(f"...{s1}z,...{s2}z->...{out}z", a[..., ia], b[..., ib], optimize=False)
    return np.add.reduceat(prod, starts, axis=-1)


def jgrad(a: np.ndarray, n: int) -> np.ndarray:
    """All first partials; the new axis sits just before the coefficient axis."""
    idx, fac = _grad_plan(n, jet_order(a, n))
    return a[..., idx] * fac


def jconst(value, n: int, order: int) -> np.ndarray:
    value = np.asarray(value, dtype=float)
    out = np.zeros(value.shape + (n_coeffs(n, order),))
    out[..., 0] = value
    return out


def jcompose(a: np.ndarray, derivs: np.ndarray, n: int) -> np.ndarray:
    """Jet of ``F(a)`` from ``derivs[..., k] = F^(k)(a_0)``, k = 0..order."""
    order = jet_order(a, n)
    h = a.copy()
    h[..., 0] = 0.0
    out = jconst(derivs[..., order] / math.factorial(order), n, order)
    for k in range(order - 1, -1, -1):
        out = jmul(out, h, n, order)
        out[..., 0] += derivs[..., k] / math.factorial(k)
    return out


def jexp(a: np.ndarray, n: int) -> np.ndarray:
    order = jet_order(a, n)
    e = np.exp(a[..., 0])
    return jcompose(a, np.repeat(e[..., None], order + 1, axis=-1), n)


def jpow(a: np.ndarray, p: float, n: int) -> np.ndarray:
    """Real power ``a**p``; requires a positive constant term unless p is a natural number."""
    order = jet_order(a, n)
    a0 = a[..., 0]
    derivs = np.empty(a0.shape + (order + 1,))
    coef = 1.0
    for k in range(order + 1):
        derivs[..., k] = coef * a0 ** (p - k) if coef != 0.0 else 0.0
        coef *= p - k
    return jcompose(a, derivs, n)


def jlog(a: np.ndarray, n: int) -> np.ndarray:
    order = jet_order(a, n)
    a0 = a[..., 0]
    if np.any(a0 <= 0):
        raise DomainError("logarithm of a non-positive jet")
    derivs = np.empty(a0.shape + (order + 1,))
    derivs[..., 0] = np.log(a0)
    for k in range(1, order + 1):
        derivs[..., k] = (-1) ** (k - 1) * math.factorial(k - 1) / a0**k
    return jcompose(a, derivs, n)


def jinv_matrix(a: np.ndarray, n: int, order: int | None = None) -> np.ndarray:
    """Jet of the matrix inverse of a jet-valued square matrix ``(..., d, d, M)``."""
    if order is None:
        order = jet_order(a, n)
    a = truncate(a, n, order)
    a0inv = np.linalg.inv(a[..., 0])
    h = a.copy()
    h[..., 0] = 0.0
    # inv(a0 + h) = sum_k (-a0^-1 h)^k a0^-1 ; Horner in the jet algebra
    x = -np.einsum("...ab,...bcz->...acz", a0inv, h)
    base = jconst(a0inv, n, order)
    out = base
    for _ in range(order):
        out = base + jeinsum("ab,bc->ac", x, out, n, order)
    return out


# ---------------------------------------------------------------------------
# operator-overloaded scalar jets for building fields


class Jet:
    """A scalar jet (possibly batched) supporting arithmetic and elementary functions."""

    __array_priority__ = 100
    __slots__ = ("c", "n")

    def __init__(self, c, n: int):
        self.c = np.asarray(c, dtype=float)
        self.n = n

    @property
    def order(self) -> int:
        return jet_order(self.c, self.n)

    @property
    def value(self) -> np.ndarray:
        return self.c[..., 0]

    @classmethod
    def constant(cls, value, n: int, order: int) -> "Jet":
        return cls(jconst(value, n, order), n)

    def _coerce(self, other):
        if isinstance(other, Jet):
            m = min(self.order, other.order)
            return truncate(self.c, self.n, m), truncate(other.c, self.n, m)
        return self.c, None

    def __add__(self, other):
        a, b = self._coerce(other)
        if b is None:
            out = a.copy()
            out[..., 0] += other
            return Jet(out, self.n)
        return Jet(a + b, self.n)

    __radd__ = __add__

    def __neg__(self):
        return Jet(-self.c, self.n)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        a, b = self._coerce(other)
        if b is None:
            return Jet(a * np.asarray(other, dtype=float)[..., None], self.n)
        return Jet(jmul(a, b, self.n), self.n)

    __rmul__ = __mul__

    def reciprocal(self) -> "Jet":
        return self.power(-1.0)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self * (1.0 / np.asarray(other, dtype=float))

    def __rtruediv__(self, other):
        return self.reciprocal() * other

    def __pow__(self, p):
        if isinstance(p, int) and p >= 0:
            out = Jet.constant(np.ones(self.value.shape), self.n, self.order)
            for _ in range(p):
                out = out * self
            return out
        return self.power(float(p))

    def power(self, p: float) -> "Jet":
        return Jet(jpow(self.c, p, self.n), self.n)

    def exp(self) -> "Jet":
        return Jet(jexp(self.c, self.n), self.n)

    def log(self) -> "Jet":
        return Jet(jlog(self.c, self.n), self.n)

    def sqrt(self) -> "Jet":
        return self.power(0.5)

    def compose(self, derivs) -> "Jet":
        """Apply a univariate function given its derivatives at the base value."""
        return Jet(jcompose(self.c, np.asarray(derivs, dtype=float), self.n), self.n)

    def __repr__(self):
        return f"Jet(n={self.n}, order={self.order}, value={self.value!r})"


def coordinate_jets(points: np.ndarray, order: int) -> list[Jet]:
    """Jets of the coordinate functions x_i at a batch of points ``(N, n)``."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    n = points.shape[-1]
    index = _index(n, order)
    out = []
    for i in range(n):
        c = np.zeros(points.shape[:-1] + (n_coeffs(n, order),))
        c[..., 0] = points[..., i]
        if order >= 1:
            c[..., index[(i,)]] = 1.0
        out.append(Jet(c, n))
    return out


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class ChartPoint:
    coords: tuple[float, ...]

    def __post_init__(self):
        coords = tuple(float(c) for c in self.coords)
        if not all(math.isfinite(c) for c in coords):
            raise DomainError(f"non-finite chart coordinates {coords}")
        object.__setattr__(self, "coords", coords)

    @property
    def dim(self) -> int:
        return len(self.coords)

    def array(self) -> np.ndarray:
        return np.array(self.coords)


def as_points(p) -> np.ndarray:
    """Normalize a ChartPoint, a single coordinate vector or a batch to ``(N, n)``."""
    if isinstance(p, ChartPoint):
        return p.array()[None, :]
    arr = np.asarray(p, dtype=float)
    return arr[None, :] if arr.ndim == 1 else arr


@dataclass(frozen=True)
class JetScalar:
    """Value and partial derivatives of a scalar field at one point."""

    value: float
    partials: dict[tuple[int, ...], float]
    order: int

    def partial(self, *idx: int) -> float:
        if not idx:
            return self.value
        return self.partials[tuple(sorted(idx))]

    @classmethod
    def from_coeffs(cls, c: np.ndarray, n: int) -> "JetScalar":
        order = jet_order(c, n)
        w = factorial_weights(n, order)
        mons = monomials(n, order)
        partials = {m: float(c[k] * w[k]) for k, m in enumerate(mons) if m}
        return cls(float(c[0]), partials, order)


@dataclass(frozen=True)
class ScalarField:
    """An analytic scalar field given as a function of coordinate jets."""

    fn: Callable[[Sequence[Jet]], object]
    dim: int
    max_order: int = MAX_ORDER
    name: str = "scalar"

    def jets(self, points, order: int) -> np.ndarray:
        if order > self.max_order:
            raise CapabilityError(f"{self.name}: order {order} exceeds declared max {self.max_order}")
        pts = as_points(points)
        out = self.fn(coordinate_jets(pts, order))
        if isinstance(out, Jet):
            return out.c
        return jconst(np.broadcast_to(np.asarray(out, dtype=float), pts.shape[:-1]), self.dim, order)

    def __call__(self, points) -> np.ndarray:
        return self.jets(points, 0)[..., 0]


@dataclass(frozen=True)
class MetricField:
    """A chart-local Riemannian metric producing jets ``(N, n, n, M)`` at point batches."""

    jet_fn: Callable[[np.ndarray, int], np.ndarray]
    dim: int
    max_order: int = MAX_ORDER
    name: str = "metric"

    @classmethod
    def from_components(cls, fn: Callable[[Sequence[Jet]], Sequence[Sequence[object]]], dim: int,
                        max_order: int = MAX_ORDER, name: str = "metric") -> "MetricField":
        """Build from a function returning the n x n matrix of component jets."""

        def jet_fn(points, order):
            xs = coordinate_jets(points, order)
            rows = fn(xs)
            shape = points.shape[:-1] + (n_coeffs(dim, order),)
            out = np.empty(points.shape[:-1] + (dim, dim, shape[-1]))
            for i in range(dim):
                for j in range(dim):
                    e = rows[i][j]
                    out[..., i, j, :] = e.c if isinstance(e, Jet) else jconst(
                        np.broadcast_to(float(e), shape[:-1]), dim, order)
            return out

        return cls(jet_fn, dim, max_order, name)

    def jets(self, points, order: int) -> np.ndarray:
        if order > self.max_order:
            raise CapabilityError(f"{self.name}: order {order} exceeds declared max {self.max_order}")
        return self.jet_fn(as_points(points), order)


@dataclass
class MetricJet:
    """Metric components and their partial derivatives at a batch of points."""

    taylor: np.ndarray  # (N, n, n, M)
    n: int
    order: int

    @cached_property
    def g(self) -> np.ndarray:
        return self.taylor[..., 0]

    @cached_property
    def ginv(self) -> np.ndarray:
        return np.linalg.inv(self.g)

    def derivative(self, k: int) -> np.ndarray:
        """Full array ``d^k g`` with axes (N, a, b, c1..ck), c's the differentiation slots."""
        if k > self.order:
            raise CapabilityError(f"metric jet has order {self.order} < {k}")
        if k == 0:
            return self.g
        idx = _full_index(self.n, self.order, k)
        w = factorial_weights(self.n, self.order)
        return self.taylor[..., idx] * w[idx]

    @property
    def dg(self):
        return self.derivative(1)

    @property
    def d2g(self):
        return self.derivative(2)

    @property
    def d3g(self):
        return self.derivative(3)

    @property
    def d4g(self):
        return self.derivative(4)

    def at(self, k: int) -> "MetricJet":
        return MetricJet(self.taylor[k:k + 1], self.n, self.order)


def eval_scalar_jet(field: ScalarField, p, order: int) -> JetScalar:
    """Value and all partials to ``order`` of a scalar field at one point."""
    if order > MAX_ORDER:
        raise CapabilityError(f"jet order {order} exceeds {MAX_ORDER}")
    c = field.jets(as_points(p), order)[0]
    if not np.all(np.isfinite(c)):
        raise DomainError(f"{field.name}: non-finite jet at {p}")
    return JetScalar.from_coeffs(c, field.dim)


def eval_metric_jet(field: MetricField, p, order: int) -> MetricJet:
    """Metric jets at one point or a batch, after verifying positive definiteness."""
    if order > MAX_ORDER:
        raise CapabilityError(f"jet order {order} exceeds {MAX_ORDER}")
    taylor = field.jets(as_points(p), order)
    if not np.all(np.isfinite(taylor)):
        raise DomainError(f"{field.name}: non-finite metric jet")
    mj = MetricJet(taylor, field.dim, order)
    check_metric(mj)
    return mj


def check_metric(mj: MetricJet, tol: float = 1e-12) -> None:
    g = mj.g
    if not np.allclose(g, np.swapaxes(g, -1, -2), rtol=0, atol=tol * max(1.0, np.abs(g).max())):
        raise GeometryError("metric is not symmetric")
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError as exc:
        raise GeometryError("metric is not positive definite") from exc
    resid = np.abs(mj.ginv @ g - np.eye(mj.n)).max()
    if resid > tol * max(1.0, float(np.linalg.cond(g).max())):
        raise GeometryError(f"inverse metric residual {resid:.2e}")


# ---------------------------------------------------------------------------
# finite-difference cross-check


@lru_cache(maxsize=None)
def central_weights(deriv: int, accuracy: int = 4) -> tuple[tuple[int, Fraction], ...]:
    """Exact central-difference weights (offset, weight) in units of the step."""
    half = (deriv + 1) // 2 - 1 + accuracy // 2
    offsets = list(range(-half, half + 1))
    size = len(offsets)
    # Solve sum_j w_j j^m = deriv! [m == deriv] exactly.
    rows = [[Fraction(o) ** m for o in offsets] + [Fraction(math.factorial(deriv) if m == deriv else 0)]
            for m in range(size)]
    for col in range(size):
        piv = next(r for r in range(col, size) if rows[r][col] != 0)
        rows[col], rows[piv] = rows[piv], rows[col]
        pv = rows[col][col]
        rows[col] = [v / pv for v in rows[col]]
        for r in range(size):
            if r != col and rows[r][col] != 0:
                f = rows[r][col]
                rows[r] = [a - f * b for a, b in zip(rows[r], rows[col])]
    return tuple((o, rows[k][-1]) for k, o in enumerate(offsets) if rows[k][-1] != 0)


@dataclass
class FDReport:
    step: float
    residual: dict[int, float] = field(default_factory=dict)

    @property
    def max_residual(self) -> float:
        return max(self.residual.values(), default=0.0)


def finite_difference_check(fld, p, order: int, step: float) -> FDReport:
    """Compare jet partials with tensor-product central differences (accuracy 4).

    Works for both ScalarField and MetricField (componentwise).
    """
    if step <= 0:
        raise DomainError("step must be positive")
    if order > MAX_ORDER or order > fld.max_order:
        raise CapabilityError(f"order {order} exceeds field capability")
    x0 = as_points(p)[0]
    n = fld.dim
    c = fld.jets(x0[None], order)[0]
    w = factorial_weights(n, order)
    index = _index(n, order)
    report = FDReport(step)
    for d in range(1, order + 1):
        worst = 0.0
        for mi in itertools.combinations_with_replacement(range(n), d):
            counts = _exponents(mi, n)
            stencils = [central_weights(k) if k else ((0, Fraction(1)),) for k in counts]
            offs, weights = [], []
            for combo in itertools.product(*stencils):
                offs.append([o for o, _ in combo])
                weights.append(float(math.prod(wt for _, wt in combo)))
            pts = x0 + step * np.array(offs, dtype=float)
            vals = fld.jets(pts, 0)[..., 0]
            est = np.tensordot(np.array(weights), vals, axes=(0, 0)) / step**d
            exact = c[..., index[mi]] * w[index[mi]]
            worst = max(worst, float(np.abs(est - exact).max()))
        report.residual[d] = worst
    return report
