"""Sampling, norm scans, closed-form cross-validation, convergence and covariance checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import qmc, norm as normal_dist

from ..aubin import (BumpParams, bach_principal, closed_form_inputs, cotton_deformed_closed_form,
                     cotton_principal, deform_metric, deformed_curvature_flat, deformed_weyl_closed_form,
                     weyl_principal)
from ..curvature import bach, curvature_bundle, curvature_jets, tensor_norm_sq
from ..duality import mixed_weyl, split_weyl
from ..errors import DomainError
from ..jets import MetricField, ScalarField, as_points
from .catalog import CatalogMetric

REGIONS = ("center", "inner", "outer")
ABS_FLOOR = 1e-12  # absolute slack for tensors that vanish identically


# ---------------------------------------------------------------------------
# sampling


@dataclass
class SampleSet:
    """Ball samples in local coordinates plus the region of each point.

    Regions follow the ellipsoidal radius rho = sqrt(sum alpha_i x_i^2) / r:
    ``center`` (rho = 0), ``inner`` (0 < rho < 1/2), ``outer`` (1/2 <= rho < 1).
    """

    points: np.ndarray
    region: np.ndarray
    axis_points: np.ndarray
    center: np.ndarray

    def fractions(self) -> dict:
        total = max(len(self.points), 1)
        return {k: float(np.sum(self.region == k)) / total for k in REGIONS}

    def select(self, *regions: str) -> np.ndarray:
        return self.points[np.isin(self.region, regions)]

    def all_points(self) -> np.ndarray:
        return np.concatenate([self.points, self.axis_points]) if len(self.points) else self.axis_points


def sample_ball(center, r: float, alpha, count: int, seed: int = 0, axis_levels=(0.25, 0.5, 0.75)) -> SampleSet:
    """Scrambled Sobol points in the ellipsoid sum alpha_i x_i^2 < r^2, half inner and half outer.

    The centre itself is included once (the epsilon stratum); the axis points sit on
    each coordinate axis at the given rho levels, both signs.
    """
    alpha = np.array([float(a) for a in alpha])
    n = len(alpha)
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    axes = []
    for lv in axis_levels:
        for i in range(n):
            for s in (1.0, -1.0):
                v = np.zeros(n)
                v[i] = s * lv * r / math.sqrt(alpha[i])
                axes.append(c + v)
    axis_points = np.array(axes).reshape(-1, n)
    if count <= 0:
        return SampleSet(np.zeros((0, n)), np.zeros(0, dtype="<U6"), axis_points, c)
    rest = count - 1
    n_in = rest // 2
    n_out = rest - n_in
    sob = qmc.Sobol(n + 1, scramble=True, seed=seed)
    m = max(1, int(math.ceil(math.log2(max(rest, 1)))))
    u = sob.random_base2(m)[:rest] if rest else np.zeros((0, n + 1))
    u = np.clip(u, 1e-12, 1 - 1e-12)
    dirs = normal_dist.ppf(u[:, :n])
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    t = u[:, n]
    # volume-uniform radius inside each shell
    rho = np.empty(rest)
    rho[:n_in] = 0.5 * t[:n_in] ** (1 / n)
    lo, hi = 0.5**n, 1.0
    rho[n_in:] = (lo + (hi - lo) * t[n_in:]) ** (1 / n)
    rho = np.minimum(rho, 1 - 1e-9)
    xs = rho[:, None] * r * dirs / np.sqrt(alpha)[None, :]
    pts = np.concatenate([c[None, :], c + xs])
    region = np.array(["center"] + ["inner"] * n_in + ["outer"] * n_out)
    keep = ((pts - c) ** 2 @ alpha) < r * r
    return SampleSet(pts[keep], region[keep], axis_points, c)


# ---------------------------------------------------------------------------
# norm scans


KINDS = ("riemann", "ricci", "weyl", "wplus", "wminus", "cotton", "bach")


@dataclass
class ScanResult:
    kind: str
    values: np.ndarray  # natural log of the squared norm (-inf where it vanishes)
    points: np.ndarray

    @property
    def log_min(self) -> float:
        return float(np.min(self.values)) if len(self.values) else math.inf

    @property
    def min(self) -> float:
        return math.exp(self.log_min) if np.isfinite(self.log_min) else (0.0 if self.log_min < 0 else math.inf)

    @property
    def argmin(self) -> np.ndarray:
        return self.points[int(np.argmin(self.values))]

    @property
    def positive(self) -> bool:
        return bool(len(self.values)) and bool(np.all(np.isfinite(self.values)))

    def histogram(self, bins: int = 12) -> dict:
        v = self.values[np.isfinite(self.values)] / math.log(10)
        zeros = int(np.sum(~np.isfinite(self.values)))
        if not len(v):
            return {"log10_edges": [], "counts": [], "zeros": zeros}
        counts, edges = np.histogram(v, bins=bins)
        return {"log10_edges": [float(e) for e in edges], "counts": [int(c) for c in counts], "zeros": zeros}

    def summary(self) -> dict:
        return {"kind": self.kind, "count": int(len(self.values)), "log_min": self.log_min,
                "min": self.min, "argmin": [float(v) for v in self.argmin] if len(self.values) else None,
                "positive": self.positive, "histogram": self.histogram()}


_UPTO = {"riemann": "riemann", "ricci": "riemann", "weyl": "weyl", "wplus": "weyl", "wminus": "weyl",
         "cotton": "cotton", "bach": "bach"}


def _tensor_of(kind: str, cj, orientation: int = 1) -> np.ndarray:
    if kind == "riemann":
        return cj.riem[..., 0]
    if kind == "ricci":
        return cj.ric[..., 0]
    if kind in ("weyl", "wplus", "wminus"):
        w = cj.weyl[..., 0]
        if kind == "weyl":
            return w
        if cj.n != 4:
            raise DomainError("self-dual splitting needs n = 4")
        pair = split_weyl(w, cj.g[..., 0], orientation)
        return pair.plus if kind == "wplus" else pair.minus
    if kind == "cotton":
        return cj.cotton[..., 0]
    return cj.bach


def min_norm_scan(metric: MetricField | CatalogMetric | None, kind: str, points,
                  params: BumpParams | None = None, chunk: int = 2000) -> ScanResult:
    """log |T|^2 pointwise for the metric, or for the bump deformation of it when ``params`` is given.

    A bump on a flat background is evaluated with the per-point exponential
    scale divided out, so the sign of the norm is resolved even where the
    bump is far below double precision.
    """
    if kind not in KINDS:
        raise DomainError(f"unknown tensor kind {kind!r}")
    if isinstance(metric, CatalogMetric):
        fld, flat = metric.field, metric.flag("flat")
    else:
        fld, flat = metric, metric is None
    pts = as_points(points)
    out = np.empty(len(pts))
    for s in range(0, len(pts), chunk):
        p = pts[s:s + chunk]
        if params is not None and flat:
            sc = deformed_curvature_flat(p, params, _UPTO[kind])
            t = _tensor_of(kind, sc.jets)
            out[s:s + chunk] = sc.log_norm_sq(t)
        else:
            g = fld if params is None else deform_metric(fld, params)
            order = {"riemann": 2, "weyl": 2, "cotton": 3, "bach": 4}[_UPTO[kind]]
            cj = curvature_jets(g.jets(p, order), g.dim, _UPTO[kind])
            t = _tensor_of(kind, cj)
            with np.errstate(divide="ignore"):
                out[s:s + chunk] = np.log(np.maximum(tensor_norm_sq(t, cj.ginv[..., 0]), 0.0))
    return ScanResult(kind, out, pts)


# ---------------------------------------------------------------------------
# closed forms vs pipeline


@dataclass
class CrossValidation:
    family: str
    variant: str
    max_residual: float
    median_residual: float
    scale: float
    worst_point: list
    tolerance: float | None
    diagnostic: bool

    @property
    def passed(self) -> bool | None:
        if self.diagnostic or self.tolerance is None:
            return None
        return self.max_residual <= self.tolerance

    def summary(self) -> dict:
        return {"family": self.family, "variant": self.variant, "max": self.max_residual,
                "median": self.median_residual, "scale": self.scale, "worst_point": self.worst_point,
                "tolerance": self.tolerance, "diagnostic": self.diagnostic, "passed": self.passed}


CROSS_TOL = {"weyl": 1e-8, "cotton": 1e-7}


def cross_validate(metric: MetricField | CatalogMetric, params: BumpParams, points, family: str = "weyl",
                   variant: str = "literal", tolerance: float | None = None,
                   diagnostic: bool | None = None) -> CrossValidation:
    """Componentwise |closed form - pipeline| for the deformed Weyl or Cotton tensor.

    On a non-flat background the comparison is diagnostic (no verdict) unless
    ``diagnostic=False`` is forced.
    """
    if family not in CROSS_TOL:
        raise DomainError(f"unknown family {family!r}")
    if isinstance(metric, CatalogMetric):
        fld, flat = metric.field, metric.flag("flat")
    else:
        fld, flat = metric, False
    if diagnostic is None:
        diagnostic = not flat
    pts = as_points(points)
    inp = closed_form_inputs(fld, params, pts, family)
    cb = curvature_bundle(deform_metric(fld, params), pts, family)
    if family == "weyl":
        closed, pipe = deformed_weyl_closed_form(inp, variant), cb.weyl
    else:
        closed, pipe = cotton_deformed_closed_form(inp, variant), cb.cotton
    res = np.abs(closed - pipe).reshape(len(pts), -1).max(axis=1)
    worst = int(np.argmax(res)) if len(res) else 0
    tol = CROSS_TOL[family] if tolerance is None else tolerance
    return CrossValidation(family, variant, float(res.max()) if len(res) else 0.0,
                           float(np.median(res)) if len(res) else 0.0, float(np.abs(pipe).max()) if len(res) else 0.0,
                           [float(v) for v in pts[worst]] if len(res) else [], tol, diagnostic)


# ---------------------------------------------------------------------------
# principal-part convergence


@dataclass
class ConvergenceResult:
    family: str
    radii: list
    residuals: list
    slope: float | None
    status: str  # pass, fail, skipped

    def summary(self) -> dict:
        return {"family": self.family, "radii": self.radii, "residuals": self.residuals,
                "slope": self.slope, "status": self.status}


_PRINCIPAL = {"weyl": weyl_principal, "cotton": cotton_principal, "bach": bach_principal}


def principal_residual(family: str, params: BumpParams, xi: np.ndarray) -> float:
    """|pipeline - principal| / |principal| over matched points x = xi r on a flat background."""
    from ..aubin import flat_metric

    x = np.asarray(xi) * params.r
    cb = curvature_bundle(deform_metric(flat_metric(params.n), params), x, family)
    pipe = getattr(cb, family)
    prin = _PRINCIPAL[family](params, x).tensor
    return float(np.linalg.norm(pipe - prin) / np.linalg.norm(prin))


def convergence_study(family, radii=(0.1, 0.05, 0.025), params: BumpParams | None = None,
                      xi: np.ndarray | None = None, min_slope: float = 1.0, floor: float = 1e-12,
                      seed: int = 0) -> ConvergenceResult:
    """Fit the log-log slope of the principal-part residual against r.

    ``family`` is weyl, cotton or bach, or a callable r -> residual for
    arbitrary quantities.  Residuals at the rounding floor skip the study.
    """
    from ..aubin import REFERENCE_ALPHA4

    if xi is None:
        rng = np.random.default_rng(seed)
        n = 4 if params is None else params.n
        base = BumpParams(1.3, 1.0, REFERENCE_ALPHA4 if params is None else params.alpha)
        xi = rng.uniform(-0.6, 0.6, (60, n))
        xi = xi[base.inside(xi)][:24]
        xi = np.concatenate([np.zeros((1, n)), xi])
    radii = [float(r) for r in radii]
    res = []
    for r in radii:
        if callable(family):
            res.append(float(family(r)))
        else:
            p = BumpParams(1.3 if params is None else params.lam, r,
                           params.alpha if params is not None else REFERENCE_ALPHA4,
                           b=10.0 if params is None else params.b)
            res.append(principal_residual(family, p, xi))
    name = family if isinstance(family, str) else getattr(family, "__name__", "quantity")
    if max(res) <= floor:
        return ConvergenceResult(name, radii, res, None, "skipped")
    slope = float(np.polyfit(np.log(radii), np.log(res), 1)[0])
    order = np.argsort(radii)
    monotone = bool(np.all(np.diff(np.array(res)[order]) > 0))
    status = "pass" if (monotone and slope >= min_slope) else "fail"
    return ConvergenceResult(name, radii, res, slope, status)


# ---------------------------------------------------------------------------
# Bach conformal covariance


@dataclass
class CovarianceResult:
    weight: int
    residual: float
    scale: float
    residuals: dict
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance * self.scale + ABS_FLOOR

    def summary(self) -> dict:
        return {"weight": self.weight, "residual": self.residual, "scale": self.scale,
                "residuals": self.residuals, "tolerance": self.tolerance, "passed": self.passed}


def bach_covariance_check(metric: MetricField | CatalogMetric, u: ScalarField, points,
                          tolerance: float = 1e-6) -> CovarianceResult:
    """Fit w in {2, 4} for |e^{w u} B~_ij - B_ij| with B~ the Bach tensor of e^{2u} g (n = 4)."""
    from ..curvature import conformal_rescale

    fld = metric.field if isinstance(metric, CatalogMetric) else metric
    if fld.dim != 4:
        raise DomainError("Bach conformal covariance needs n = 4")
    pts = as_points(points)
    b0 = bach(fld, pts)
    b1 = bach(conformal_rescale(fld, u), pts)
    uu = u(pts)
    residuals = {}
    for w in (2, 4):
        residuals[w] = float(np.abs(np.exp(w * uu)[:, None, None] * b1 - b0).max())
    best = min(residuals, key=lambda w: residuals[w])
    return CovarianceResult(best, residuals[best], float(np.abs(b0).max()),
                            {str(k): v for k, v in residuals.items()}, tolerance)
