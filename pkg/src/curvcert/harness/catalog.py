"""Named background metrics with declared geometric flags, verified when loaded."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from ..aubin import BumpParams, deform_metric, flat_metric, reference_alpha
from ..curvature import curvature_jets, tensor_norm_sq
from ..errors import GeometryError, UsageError
from ..jets import MetricField

FLAG_NAMES = ("flat", "conformally_flat", "einstein", "normalized_at_origin")


@dataclass(frozen=True)
class CatalogMetric:
    name: str
    dim: int
    safe_radius: float
    field: MetricField
    flags: dict = field(default_factory=dict)
    note: str = ""

    def flag(self, key: str) -> bool:
        return bool(self.flags.get(key, False))


def _conformal(n: int, u, name: str, max_order: int = 8) -> MetricField:
    def comps(x):
        e = (2.0 * u(x)).exp()
        return [[e if i == j else 0.0 for j in range(n)] for i in range(n)]

    return MetricField.from_components(comps, n, max_order, name)


def _sphere(n: int) -> MetricField:
    # unit round sphere, stereographic chart scaled so that g(0) = identity
    return _conformal(n, lambda x: -1.0 * (1.0 + 0.25 * sum(xi * xi for xi in x)).log(), f"sphere{n}")


def _conf(n: int) -> MetricField:
    def u(x):
        return 0.3 * x[0] * x[0] - 0.2 * x[1] * x[2] + 0.1 * x[n - 1] ** 3 + 0.05 * x[0] * x[1] * x[n - 1]
    return _conformal(n, u, f"conf{n}")


def _s2xs2() -> MetricField:
    def comps(x):
        e1 = (1.0 + 0.25 * (x[0] * x[0] + x[1] * x[1])) ** -2.0
        e2 = (1.0 + 0.25 * (x[2] * x[2] + x[3] * x[3])) ** -2.0
        d = [e1, e1, e2, e2]
        return [[d[i] if i == j else 0.0 for j in range(4)] for i in range(4)]

    return MetricField.from_components(comps, 4, 8, "s2xs2")


def _pert(n: int, seed: int, eps: float, quartic: bool, name: str) -> MetricField:
    """delta + eps h with h a random symmetric polynomial matrix, h(0) = 0 and dh(0) = 0."""
    rng = np.random.default_rng(seed)
    pairs = [(a, b) for a in range(n) for b in range(a, n)]
    quad = rng.uniform(-1, 1, (n, n, len(pairs)))
    cub = rng.uniform(-1, 1, (n, n, n))
    qua = rng.uniform(-1, 1, (n, n, n)) if quartic else np.zeros((n, n, n))
    quad = 0.5 * (quad + quad.transpose(1, 0, 2))
    cub = 0.5 * (cub + cub.transpose(1, 0, 2))
    qua = 0.5 * (qua + qua.transpose(1, 0, 2))

    def comps(x):
        rows = [[0.0] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                h = sum(float(quad[i, j, k]) * x[a] * x[b] for k, (a, b) in enumerate(pairs))
                h = h + sum(float(cub[i, j, k]) * x[k] * x[k] * x[(k + 1) % n] for k in range(n))
                if quartic:
                    h = h + sum(float(qua[i, j, k]) * x[k] ** 4 for k in range(n))
                v = (1.0 if i == j else 0.0) + eps * h
                rows[i][j] = v
                rows[j][i] = v
        return rows

    return MetricField.from_components(comps, n, 8, name)


def _bump4() -> MetricField:
    params = BumpParams(1.3, 0.8, reference_alpha(4), b=4.0)
    return deform_metric(flat_metric(4), params)


_BUILDERS = {
    "flat4": lambda: (flat_metric(4), 10.0, dict(flat=True, conformally_flat=True, einstein=True,
                                                 normalized_at_origin=True), "Euclidean R^4"),
    "flat5": lambda: (flat_metric(5), 10.0, dict(flat=True, conformally_flat=True, einstein=True,
                                                 normalized_at_origin=True), "Euclidean R^5"),
    "sphere4": lambda: (_sphere(4), 1.0, dict(conformally_flat=True, einstein=True,
                                              normalized_at_origin=True), "unit round S^4, R = 12"),
    "sphere5": lambda: (_sphere(5), 1.0, dict(conformally_flat=True, einstein=True,
                                              normalized_at_origin=True), "unit round S^5, R = 20"),
    "conf4": lambda: (_conf(4), 0.5, dict(conformally_flat=True, normalized_at_origin=True),
                      "e^{2u} delta, polynomial u"),
    "conf5": lambda: (_conf(5), 0.5, dict(conformally_flat=True, normalized_at_origin=True),
                      "e^{2u} delta, polynomial u"),
    "s2xs2": lambda: (_s2xs2(), 1.0, dict(einstein=True, normalized_at_origin=True),
                      "product of unit 2-spheres"),
    "pert4": lambda: (_pert(4, 11, 0.1, False, "pert4"), 0.5, dict(normalized_at_origin=True),
                      "delta + eps h, quadratic/cubic h"),
    "pert5": lambda: (_pert(5, 12, 0.1, False, "pert5"), 0.5, dict(normalized_at_origin=True),
                      "delta + eps h, quadratic/cubic h"),
    "pert4b": lambda: (_pert(4, 21, 0.15, True, "pert4b"), 0.5, dict(normalized_at_origin=True),
                       "delta + eps h with quartic terms"),
    "pert5b": lambda: (_pert(5, 22, 0.15, True, "pert5b"), 0.5, dict(normalized_at_origin=True),
                       "delta + eps h with quartic terms"),
    "bump4": lambda: (_bump4(), 0.5, dict(normalized_at_origin=True),
                      "flat R^4 plus a bump deformation"),
}


def names() -> tuple[str, ...]:
    return tuple(_BUILDERS)


@lru_cache(maxsize=None)
def load(name: str, verify: bool = True) -> CatalogMetric:
    """Build a catalog metric; with ``verify`` its flags are checked against the pipeline."""
    if name not in _BUILDERS:
        raise UsageError(f"unknown metric {name!r}; choose from {', '.join(names())}")
    fld, radius, flags, note = _BUILDERS[name]()
    flags = {k: bool(flags.get(k, False)) for k in FLAG_NAMES}
    cm = CatalogMetric(name, fld.dim, radius, fld, flags, note)
    if verify:
        verify_flags(cm)
    return cm


def measure_flags(cm: CatalogMetric, count: int = 20, seed: int = 0) -> dict:
    """Pipeline deviations behind each flag at random points inside the safe radius."""
    n = cm.dim
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1, 1, (count, n))
    pts *= (0.9 * min(cm.safe_radius, 1.0) * rng.random(count) ** (1 / n)
            / np.linalg.norm(pts, axis=1))[:, None]
    cj = curvature_jets(cm.field.jets(pts, 2), n, "weyl")
    g, ginv = cj.g[..., 0], cj.ginv[..., 0]
    riem, ric, scal, w = cj.riem[..., 0], cj.ric[..., 0], cj.scal[..., 0], cj.weyl[..., 0]
    scale = 1.0 + np.abs(riem).max()
    traceless_ric = ric - scal[:, None, None] / n * g
    origin = cm.field.jets(np.zeros((1, n)), 1)
    g0 = origin[0, ..., 0]
    dg0 = origin[0, ..., 1:1 + n]
    return {
        "flat": float(np.sqrt(tensor_norm_sq(riem, ginv).max())),
        "conformally_flat": float(np.sqrt(np.abs(tensor_norm_sq(w, ginv)).max()) / scale) if n >= 4 else 0.0,
        "einstein": float(np.abs(traceless_ric).max() / scale),
        "normalized_at_origin": float(max(np.abs(g0 - np.eye(n)).max(), np.abs(dg0).max())),
    }


def verify_flags(cm: CatalogMetric, tol: float = 1e-8, absent: float = 1e-6) -> dict:
    """Raise GeometryError when a declared flag contradicts the measured geometry."""
    measured = measure_flags(cm)
    for key, dev in measured.items():
        declared = cm.flag(key)
        if declared and dev > tol:
            raise GeometryError(f"{cm.name}: flag {key} declared but deviation is {dev:.3e}")
        if not declared and key != "normalized_at_origin" and dev < absent:
            raise GeometryError(f"{cm.name}: flag {key} not declared but deviation is only {dev:.3e}")
    return measured
