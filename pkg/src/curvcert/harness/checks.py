"""The named checks run by the suite, one per acceptance criterion plus a few invariants.

Each check takes ``(tolerances, seed)`` and returns a :class:`CheckRecord`.
All tolerances live in :data:`TOLERANCES`; a config may override entries.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..aubin import (REFERENCE_ALPHA4, BumpParams, bach_center_constant, bach_table_printed,
                     conformal_unit_normalize, deform_metric, flat_metric, weyl_coeffs)
from ..curvature import bach_divergence, curvature_bundle, curvature_jets, tensor_norm_sq, weyl_divergence
from ..jets import ScalarField
from ..obstruction import (bach_system, certify_no_nonzero_solution, replay_certificate, spot_check,
                           wplus_system)
from . import catalog
from .operations import (bach_covariance_check, convergence_study, cross_validate, min_norm_scan,
                         sample_ball)

TOLERANCES = {
    "coeffs": 0.0,
    "sphere_scalar": 1e-8,
    "sphere_weyl": 1e-8,
    "sphere_cotton": 1e-8,
    "sphere_bach": 1e-6,
    "closed_weyl": 1e-8,
    "closed_cotton": 1e-7,
    "cotton_divergence": 1e-8,
    "cotton_center": 1e-10,
    "convergence_slope": 1.0,
    "bach_covariance": 1e-6,
    "unit_weyl": 1e-6,
    "bach_divergence": 1e-7,
    "flag": 1e-8,
}

# expected values, checked exactly
EXPECTED_A2 = {(0, 1): Fraction(5, 48), (2, 3): Fraction(5, 48), (0, 2): Fraction(-1, 48),
               (1, 3): Fraction(-1, 48), (0, 3): Fraction(-1, 12), (1, 2): Fraction(-1, 12)}
EXPECTED_A3 = {(0, 1, 2): Fraction(-15, 8), (1, 0, 3): Fraction(-1, 2), (0, 1, 3): Fraction(-5, 4),
               (1, 0, 2): Fraction(-9, 8), (0, 2, 3): Fraction(-3, 4), (2, 0, 1): Fraction(-5, 8)}
EXPECTED_BACH_CONSTANT = Fraction(105845, 36)
EXPECTED_BACH_A = (Fraction(-323, 12), Fraction(-41, 6), Fraction(53, 6), Fraction(299, 12))


@dataclass
class CheckRecord:
    name: str
    title: str
    basis: str
    passed: bool
    measured: dict
    tolerances: dict
    runtime: float = 0.0
    time_limit: float | None = None
    rows: list = field(default_factory=list)  # per-point rows for CSV output
    error: str | None = None

    @property
    def status(self) -> str:
        if self.error:
            return "error"
        return "pass" if self.passed else "fail"

    def body(self) -> dict:
        return {"name": self.name, "title": self.title, "basis": self.basis, "status": self.status,
                "measured": self.measured, "tolerances": self.tolerances, "time_limit": self.time_limit,
                "error": self.error}


def _rand_ball(rng, count, n, radius):
    p = rng.normal(size=(count, n))
    p *= (radius * rng.random(count) ** (1 / n) / np.linalg.norm(p, axis=1))[:, None]
    return p


# ---------------------------------------------------------------------------
# acceptance criteria


def check_coeffs(tol, seed):
    co = weyl_coeffs(REFERENCE_ALPHA4)
    bad = [f"a{i + 1}{j + 1}" for (i, j), v in EXPECTED_A2.items() if co.a2[i, j] != v]
    bad += [f"a{i + 1}{j + 1}{k + 1}" for (i, j, k), v in EXPECTED_A3.items() if co.a3[i, j, k] != v]
    measured = {"a_ij": {f"{i + 1}{j + 1}": str(co.a2[i, j]) for (i, j) in EXPECTED_A2},
                "a_ijk": {f"{i + 1}{j + 1}{k + 1}": str(co.a3[i, j, k]) for (i, j, k) in EXPECTED_A3},
                "mismatches": bad}
    return not bad, measured, {"exact": 0}


def check_bach_constant(tol, seed):
    table = bach_table_printed()
    coeffs = table.A_coeffs()
    const = bach_center_constant(table)
    ok = const == EXPECTED_BACH_CONSTANT and sum(coeffs) == 0 and coeffs == EXPECTED_BACH_A
    return ok, {"coefficients": [str(c) for c in coeffs], "two_sum_squares": str(const),
                "sum": str(sum(coeffs))}, {"exact": 0}


def check_sphere(tol, seed):
    rng = np.random.default_rng(seed)
    cm = catalog.load("sphere4")
    pts = _rand_ball(rng, 20, 4, 0.8)
    cb = curvature_bundle(cm.field, pts, "bach")
    nm = cb.norms()
    m = {"scalar_err": float(np.abs(cb.scalar - 12).max()),
         "weyl": float(np.sqrt(np.abs(nm["weyl"]).max())),
         "cotton": float(np.sqrt(np.abs(nm["cotton"]).max())),
         "bach": float(np.sqrt(np.abs(nm["bach"]).max()))}
    t = {"scalar_err": tol["sphere_scalar"], "weyl": tol["sphere_weyl"], "cotton": tol["sphere_cotton"],
         "bach": tol["sphere_bach"]}
    return all(m[k] <= t[k] for k in t), m, t


def check_closed_forms(tol, seed):
    rng = np.random.default_rng(seed)
    worst = {"weyl": 0.0, "cotton": 0.0}
    corrected = {"weyl": 0.0, "cotton": 0.0}
    scale = {"weyl": 0.0, "cotton": 0.0}
    for k in range(20):
        n = 4 if k % 2 == 0 else 5
        params = BumpParams(float(rng.uniform(1, 2)), float(rng.uniform(0.4, 1.2)),
                            tuple(float(a) for a in rng.uniform(1, 2, n)))
        pts = sample_ball(None, params.r, params.alpha, 100, seed=seed + k).points
        for fam in ("weyl", "cotton"):
            cv = cross_validate(catalog.load(f"flat{n}"), params, pts, fam, "literal")
            worst[fam] = max(worst[fam], cv.max_residual)
            scale[fam] = max(scale[fam], cv.scale)
            cc = cross_validate(catalog.load(f"flat{n}"), params, pts, fam, "corrected")
            corrected[fam] = max(corrected[fam], cc.max_residual)
    m = {"weyl_literal": worst["weyl"], "cotton_literal": worst["cotton"],
         "weyl_corrected": corrected["weyl"], "cotton_corrected": corrected["cotton"],
         "weyl_scale": scale["weyl"], "cotton_scale": scale["cotton"]}
    t = {"weyl_literal": tol["closed_weyl"], "cotton_literal": tol["closed_cotton"]}
    return m["weyl_literal"] <= t["weyl_literal"] and m["cotton_literal"] <= t["cotton_literal"], m, t


DIVERGENCE_METRICS = ("pert4", "pert5", "pert4b", "pert5b", "bump4")


def check_cotton_divergence(tol, seed):
    rng = np.random.default_rng(seed)
    m = {}
    for name in DIVERGENCE_METRICS:
        cm = catalog.load(name)
        n = cm.dim
        pts = _rand_ball(rng, 20, n, 0.8 * cm.safe_radius)
        cj = curvature_jets(cm.field.jets(pts, 3), n, "cotton")
        from ..curvature import weyl_divergence_from_jets
        dw = weyl_divergence_from_jets(cj)
        c = cj.cotton[..., 0]
        m[name] = float(np.abs(c + (n - 2) / (n - 3) * dw).max() / np.abs(c).max())
    return all(v <= tol["cotton_divergence"] for v in m.values()), m, {"relative": tol["cotton_divergence"]}


SCAN_LAMBDAS = (1.0, 1.3, 1.7, 2.0)


def check_scans(tol, seed, count=10**4):
    flat4 = catalog.load("flat4")
    sample = sample_ball(None, 1.0, REFERENCE_ALPHA4, count, seed)
    pts = sample.points
    annulus = pts[np.linalg.norm(pts, axis=1) >= 1.0 / 100]
    m, rows, ok = {}, [], True
    for lam in SCAN_LAMBDAS:
        params = BumpParams(lam, 1.0, REFERENCE_ALPHA4)
        for kind, where in (("weyl", pts), ("wplus", pts), ("bach", pts), ("cotton", annulus)):
            sc = min_norm_scan(flat4, kind, where, params)
            m[f"lam={lam}:{kind}:log_min"] = sc.log_min
            ok &= sc.positive
            if lam == SCAN_LAMBDAS[0]:
                rows.extend({"check": "scans", "lam": lam, "kind": kind,
                             **{f"x{i + 1}": float(v) for i, v in enumerate(p)}, "log_norm_sq": float(val)}
                            for p, val in zip(where[:200], sc.values[:200]))
        centre = min_norm_scan(flat4, "cotton", np.zeros((1, 4)), params).min
        m[f"lam={lam}:cotton:center"] = centre
        ok &= centre <= tol["cotton_center"]
    return ok, m, {"minimum": "> 0 (log finite)", "cotton_center": tol["cotton_center"]}, rows


def check_obstruction(tol, seed):
    t0 = time.perf_counter()
    ws = wplus_system(REFERENCE_ALPHA4)
    wcert = certify_no_nonzero_solution(ws, "all")
    wtime = time.perf_counter() - t0
    m = {"wplus_status": wcert.status, "wplus_seconds": wtime,
         "wplus_exponents": wcert.details.get("all_nonzero", {}).get("exponents")}
    ok = wcert.verified and replay_certificate(ws, wcert) and wtime < 1.0
    for source in ("printed", "general"):
        for mode in ("sign", "free"):
            sys = bach_system(REFERENCE_ALPHA4, source, mode)
            cert = certify_no_nonzero_solution(sys, "any", budget=10**6)
            replay = cert.verified and replay_certificate(sys, cert)
            spot = spot_check(sys, 10**5, seed)
            key = f"bach_{source}_{mode}"
            m[key] = {"status": cert.status, "boxes": cert.subdivisions, "replay": replay,
                      "spot_all_violate": spot["all_violate"], "spot_min_violation": spot["min_violation"]}
            ok &= replay and spot["all_violate"] and cert.subdivisions <= 10**6
    return ok, m, {"budget": 10**6, "wplus_seconds": 1.0}


def check_convergence(tol, seed):
    m, ok = {}, True
    for fam in ("weyl", "cotton", "bach"):
        res = convergence_study(fam, (0.1, 0.05, 0.025), min_slope=tol["convergence_slope"], seed=seed)
        m[fam] = res.summary()
        ok &= res.status == "pass"
    return ok, m, {"min_slope": tol["convergence_slope"]}


def check_conformal(tol, seed):
    rng = np.random.default_rng(seed)
    pts = _rand_ball(rng, 20, 4, 0.3)
    c = rng.uniform(-0.2, 0.2, 6)

    def u_fn(x):
        return (c[0] * x[0] * x[1] + c[1] * x[2] ** 2 + c[2] * x[3] ** 3 + c[3] * x[0] ** 4
                + c[4] * x[1] * x[2] * x[3] + c[5])

    u = ScalarField(u_fn, 4)
    cov = bach_covariance_check(catalog.load("pert4b"), u, pts, tol["bach_covariance"])
    # unit normalisation of |W|^2 for the bump deformation, on its inner region
    params = BumpParams(1.3, 1.0, REFERENCE_ALPHA4, b=4.0)
    gt = deform_metric(flat_metric(4), params)
    region = sample_ball(None, 0.7, REFERENCE_ALPHA4, 200, seed).points
    gbar = conformal_unit_normalize(gt, "weyl", region)
    cj = curvature_jets(gbar.jets(region, 2), 4, "weyl")
    wn = tensor_norm_sq(cj.weyl[..., 0], cj.ginv[..., 0])
    m = {"covariance": cov.summary(), "unit_weyl_max_dev": float(np.abs(wn - 1).max()), "samples": len(region)}
    t = {"covariance_relative": tol["bach_covariance"], "unit_weyl": tol["unit_weyl"]}
    return cov.passed and m["unit_weyl_max_dev"] <= tol["unit_weyl"], m, t


# ---------------------------------------------------------------------------
# extra invariants


def check_catalog_flags(tol, seed):
    m = {}
    for name in catalog.names():
        m[name] = catalog.verify_flags(catalog.load(name, verify=False), tol["flag"])
    return True, m, {"flag": tol["flag"]}


def check_bach_divergence(tol, seed):
    rng = np.random.default_rng(seed)
    cm = catalog.load("pert4b")
    pts = _rand_ball(rng, 5, 4, 0.2)
    div, db = bach_divergence(cm.field, pts)
    rel = float(np.abs(div).max() / np.abs(db).max())
    return rel <= tol["bach_divergence"], {"relative": rel}, {"relative": tol["bach_divergence"]}


@dataclass(frozen=True)
class CheckDef:
    title: str
    basis: str
    fn: object
    time_limit: float | None


CHECKS = {
    "coeffs": CheckDef("exact Weyl principal coefficients for alpha = (1, 5/4, 3/2, 2)",
                        "principal Weyl coefficient table", check_coeffs, 1.0),
    "bach-constant": CheckDef("Bach centre constant 105845/36 and traceless diagonal",
                               "diagonal principal Bach coefficients", check_bach_constant, 1.0),
    "sphere": CheckDef("round S^4 chart: R = 12, W = C = B = 0", "pipeline sanity", check_sphere, 10.0),
    "closed-forms": CheckDef("closed-form deformed Weyl and Cotton vs pipeline (flat background)",
                              "deformed Weyl and Cotton closed forms", check_closed_forms, 120.0),
    "cotton-divergence": CheckDef("C = -(n-2)/(n-3) div W on five catalog metrics",
                                   "Cotton / Weyl divergence identity", check_cotton_divergence, 60.0),
    "scans": CheckDef("non-vanishing of |W|^2, |W+|^2, |B|^2, |C|^2 after the bump",
                       "existence theorems (chart-local)", check_scans, 300.0),
    "obstruction": CheckDef("infeasibility of the W+ and Bach principal systems",
                             "Case-2 polynomial systems", check_obstruction, 300.0),
    "convergence": CheckDef("principal parts converge as r -> 0", "principal part / remainder split",
                             check_convergence, 180.0),
    "conformal": CheckDef("Bach covariance weight and |W|^2 = 1 normalisation", "conformal behaviour",
                           check_conformal, 120.0),
    "catalog-flags": CheckDef("catalog flags agree with pipeline", "plumbing", check_catalog_flags, None),
    "bach-divergence": CheckDef("Bach tensor is divergence free in n = 4", "Bach tensor identities",
                                 check_bach_divergence, None),
}

ACCEPTANCE = ("coeffs", "bach-constant", "sphere", "closed-forms", "cotton-divergence", "scans",
              "obstruction", "convergence", "conformal")


def run_check(name: str, tolerances: dict | None = None, seed: int = 0) -> CheckRecord:
    from ..errors import UsageError

    if name not in CHECKS:
        raise UsageError(f"unknown check {name!r}; available: {', '.join(CHECKS)}")
    chk = CHECKS[name]
    tol = dict(TOLERANCES)
    tol.update(tolerances or {})
    t0 = time.perf_counter()
    try:
        out = chk.fn(tol, seed)
    except Exception as exc:  # a crashing check is reported, not raised
        return CheckRecord(name, chk.title, chk.basis, False, {}, {}, time.perf_counter() - t0,
                           chk.time_limit, error=f"{type(exc).__name__}: {exc}")
    passed, measured, tols = out[:3]
    rows = out[3] if len(out) > 3 else []
    runtime = time.perf_counter() - t0
    if chk.time_limit is not None and runtime > chk.time_limit:
        passed = False
        measured = {**measured, "time_limit_exceeded": True}
    return CheckRecord(name, chk.title, chk.basis, bool(passed), _clean(measured), _clean(tols), runtime,
                       chk.time_limit, rows)


def _clean(obj):
    """JSON-friendly copy (numpy scalars to floats, non-finite floats to strings)."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj
