"""Command-line entry point: ``curvcert {curvature,deform,coeffs,obstruction,validate}``.

Exit codes: 0 success, 1 check failure (or counterexample), 2 usage or
precondition error, 3 inconclusive.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import CurvCertError, DomainError, GeometryError, PreconditionError, UsageError

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_INCONCLUSIVE = 0, 1, 2, 3


@dataclass
class CliConfig:
    subcommand: str
    metric: str | None = None
    point: list | None = None
    lam: float = 1.3
    r: float | None = None  # default: a tenth of the metric's safe radius
    b: float = 10.0
    alpha: list | None = None
    kinds: list = field(default_factory=lambda: ["weyl"])
    region: str = "ball"
    count: int = 1000
    seed: int = 0
    output: str | None = None
    format: str = "json"
    tolerances: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)


def _fractions(text: str) -> list[Fraction]:
    try:
        return [Fraction(t.strip()) for t in text.split(",") if t.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"cannot parse rational list {text!r}") from exc


def _floats(text: str) -> list[float]:
    try:
        return [float(Fraction(t.strip())) for t in text.split(",")]
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"cannot parse point {text!r}") from exc


def _emit(cfg: CliConfig, payload: dict, csv_text: str | None = None) -> None:
    if not cfg.output:
        return
    with open(cfg.output, "w") as fh:
        if cfg.format == "csv":
            fh.write(csv_text if csv_text is not None else "")
        else:
            fh.write(json.dumps(payload, indent=1, sort_keys=True, default=str))


# ---------------------------------------------------------------------------
# subcommands


def cmd_curvature(cfg: CliConfig) -> int:
    from .curvature import curvature_bundle
    from .harness import catalog

    cm = catalog.load(cfg.metric or "flat4")
    pt = np.array([cfg.point if cfg.point is not None else [0.0] * cm.dim], dtype=float)
    if pt.shape[1] != cm.dim:
        raise UsageError(f"point has {pt.shape[1]} coordinates, metric {cm.name} has dimension {cm.dim}")
    cb = curvature_bundle(cm.field, pt, "bach")
    norms = {k: float(v[0]) for k, v in cb.norms().items()}
    payload = {"metric": cm.name, "point": pt[0].tolist(), "scalar": float(cb.scalar[0]), "norms_sq": norms,
               "ricci": cb.ricci[0].tolist(), "bach": cb.bach[0].tolist(),
               "max_abs": {k: float(np.abs(getattr(cb, k)[0]).max())
                           for k in ("riemann", "ricci", "weyl", "cotton", "bach")}}
    print(f"metric {cm.name} at {pt[0].tolist()}")
    print(f"  scalar curvature R = {payload['scalar']:.12g}")
    for k, v in norms.items():
        print(f"  |{k}|^2 = {v:.6e}")
    _emit(cfg, payload)
    return EXIT_OK


def cmd_deform(cfg: CliConfig) -> int:
    from .aubin import BumpParams, reference_alpha
    from .harness import catalog
    from .harness.operations import KINDS, min_norm_scan, sample_ball

    cm = catalog.load(cfg.metric or "flat4")
    alpha = cfg.alpha if cfg.alpha is not None else list(reference_alpha(cm.dim))
    if len(alpha) != cm.dim:
        raise UsageError("alpha length must match the metric dimension")
    r = cfg.r if cfg.r is not None else cm.safe_radius / 10
    params = BumpParams(cfg.lam, r, tuple(alpha), b=cfg.b)
    for kind in cfg.kinds:
        if kind not in KINDS:
            raise UsageError(f"unknown kind {kind!r}; choose from {', '.join(KINDS)}")
        if kind == "cotton" and not params.distinct:
            raise PreconditionError("kind cotton needs pairwise distinct alpha")
    sample = sample_ball(None, params.r, params.alpha, cfg.count, cfg.seed)
    pts = sample.all_points()
    if cfg.region == "annulus":
        pts = pts[np.linalg.norm(pts, axis=1) >= params.r / 100]
    elif cfg.region != "ball":
        raise UsageError("region must be 'ball' or 'annulus'")
    results, rows, ok = {}, [], True
    for kind in cfg.kinds:
        sc = min_norm_scan(cm, kind, pts, params)
        results[kind] = sc.summary()
        ok &= sc.positive
        print(f"{kind:7s} min |T|^2 = exp({sc.log_min:.6g})  positive={sc.positive}  points={len(pts)}")
        rows.extend({"kind": kind, **{f"x{i + 1}": float(v) for i, v in enumerate(p)},
                     "log_norm_sq": float(val)} for p, val in zip(sc.points, sc.values))
    csv_text = None
    if cfg.format == "csv":
        import csv
        import io

        buf = io.StringIO()
        if rows:
            w = csv.DictWriter(buf, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
        csv_text = buf.getvalue()
    _emit(cfg, {"metric": cm.name, "params": {"lam": params.lam, "r": params.r, "b": params.b,
                                              "alpha": [str(a) for a in params.alpha]},
                "region": cfg.region, "seed": cfg.seed, "scans": results}, csv_text)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_coeffs(cfg: CliConfig) -> int:
    from .aubin import (REFERENCE_ALPHA4, bach_table_general, bach_table_printed, cotton_coeffs, reference_alpha,
                        weyl_coeffs)

    family = cfg.extra.get("family", "weyl")
    alpha = tuple(cfg.alpha) if cfg.alpha is not None else reference_alpha(4)
    if family in ("weyl", "wplus"):
        table = weyl_coeffs(alpha).table()
    elif family == "cotton":
        co = cotton_coeffs(alpha)
        if not co.distinct:
            raise PreconditionError("cotton coefficients need pairwise distinct alpha")
        table = co.table()
    elif family == "bach":
        if len(alpha) != 4:
            raise DomainError("the Bach principal table is for n = 4")
        src = bach_table_printed() if tuple(Fraction(a) for a in alpha) == REFERENCE_ALPHA4 else \
            bach_table_general(alpha)
        table = {"family": "bach", "source": src.source, "alpha": [str(a) for a in src.alpha],
                 "A_diagonal": [str(c) for c in src.A_coeffs()],
                 "entries": {f"{i + 1}{j + 1}": {k: {"".join(map(str, e)): str(c) for e, c in sorted(p.items())}
                                                 for k, p in v.items()}
                             for (i, j), v in sorted(src.entries.items())}}
    else:
        raise UsageError(f"unknown family {family!r}")
    print(json.dumps(table, indent=1))
    _emit(cfg, table)
    return EXIT_OK


def cmd_obstruction(cfg: CliConfig) -> int:
    from .aubin import reference_alpha
    from .obstruction import bach_system, certify_no_nonzero_solution, spot_check, wplus_system

    system = cfg.extra.get("system", "wplus")
    alpha = tuple(cfg.alpha) if cfg.alpha is not None else reference_alpha(4)
    budget = int(cfg.extra.get("budget", 10**6))
    if budget < 1:
        raise UsageError("budget must be positive")
    if system == "wplus":
        sys_ = wplus_system(alpha)
        cert = certify_no_nonzero_solution(sys_, "any", budget, alpha=alpha)
    elif system == "bach":
        sys_ = bach_system(alpha, cfg.extra.get("source", "printed"), cfg.extra.get("mode", "sign"))
        cert = certify_no_nonzero_solution(sys_, "any", budget)
    else:
        raise UsageError(f"unknown system {system!r}")
    print(f"{sys_.name}: {cert.status} via {cert.method} ({cert.subdivisions} boxes, {cert.runtime:.2f}s)")
    if cert.verified and sys_.params and cfg.extra.get("spot", True):
        spot = spot_check(sys_, int(cfg.extra.get("spot_count", 10**5)), cfg.seed)
        print(f"spot check: {spot['count']} points, all violate = {spot['all_violate']}")
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(cert.to_json())
    return {"infeasible": EXIT_OK, "counterexample": EXIT_FAIL}.get(cert.status, EXIT_INCONCLUSIVE)


def cmd_validate(cfg: CliConfig) -> int:
    from .harness.checks import ACCEPTANCE
    from .harness.report import run_suite

    checks = cfg.extra.get("checks") or list(ACCEPTANCE)
    report = run_suite({"checks": checks, "seed": cfg.seed, "tolerances": cfg.tolerances})
    print("\n".join(report.lines()))
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(report.to_csv() if cfg.format == "csv" else report.to_json())
    return EXIT_OK if report.passed else EXIT_FAIL


COMMANDS = {"curvature": cmd_curvature, "deform": cmd_deform, "coeffs": cmd_coeffs,
            "obstruction": cmd_obstruction, "validate": cmd_validate}


# ---------------------------------------------------------------------------
# parsing


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="curvcert", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with option defaults (flags override it)")
    common.add_argument("--seed", type=int)
    common.add_argument("--output", help="write the JSON (or CSV) result here")
    common.add_argument("--format", choices=("json", "csv"))
    sub = p.add_subparsers(dest="subcommand", required=True)

    c = sub.add_parser("curvature", parents=[common], help="curvature bundle of a catalog metric at a point")
    c.add_argument("--metric")
    c.add_argument("--point", help="comma-separated coordinates, e.g. 0,0,0,0")

    def bump(sp):
        sp.add_argument("--lam", type=float)
        sp.add_argument("--r", type=float)
        sp.add_argument("--b", type=float)
        sp.add_argument("--alpha", help="comma-separated rationals, e.g. 1,5/4,3/2,2")

    d = sub.add_parser("deform", parents=[common], help="bump a catalog metric and scan tensor norms")
    d.add_argument("--metric")
    bump(d)
    d.add_argument("--kind", action="append", help="weyl, wplus, wminus, cotton, bach, ... (repeatable)")
    d.add_argument("--region", choices=("ball", "annulus"))
    d.add_argument("--count", type=int)

    k = sub.add_parser("coeffs", parents=[common], help="exact principal coefficient tables")
    k.add_argument("--family", choices=("weyl", "wplus", "cotton", "bach"))
    k.add_argument("--alpha")

    o = sub.add_parser("obstruction", parents=[common], help="certify a principal-part system infeasible")
    o.add_argument("--system", choices=("wplus", "bach"))
    o.add_argument("--source", choices=("printed", "general"))
    o.add_argument("--mode", choices=("sign", "free"))
    o.add_argument("--budget", type=int)
    o.add_argument("--alpha")
    o.add_argument("--no-spot", dest="spot", action="store_const", const=False)

    v = sub.add_parser("validate", parents=[common], help="run the acceptance suite")
    v.add_argument("--check", dest="checks", action="append", help="check name (repeatable)")
    v.add_argument("--tolerance", action="append", default=None, metavar="KEY=VALUE",
                   help="override one tolerance")
    return p


_EXTRA_KEYS = ("family", "system", "source", "mode", "budget", "checks", "spot", "spot_count")


def make_config(ns: argparse.Namespace) -> CliConfig:
    """Defaults, then the JSON config file, then explicit flags."""
    values: dict = {}
    if getattr(ns, "config", None):
        try:
            with open(ns.config) as fh:
                values.update(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {ns.config!r}: {exc}") from exc
    for key, val in vars(ns).items():
        if val is not None and key != "config":
            values[key] = val
    cfg = CliConfig(values.pop("subcommand"))
    if "point" in values:
        pt = values.pop("point")
        cfg.point = _floats(pt) if isinstance(pt, str) else [float(v) for v in pt]
    if "alpha" in values:
        al = values.pop("alpha")
        cfg.alpha = _fractions(al) if isinstance(al, str) else [Fraction(str(v)) for v in al]
    if "kind" in values:
        kinds = values.pop("kind")
        cfg.kinds = [k for item in ([kinds] if isinstance(kinds, str) else kinds) for k in item.split(",")]
    tol = values.pop("tolerance", None) or values.pop("tolerances", None)
    if isinstance(tol, dict):
        cfg.tolerances = {k: float(v) for k, v in tol.items()}
    elif tol:
        for item in tol:
            key, sep, val = item.partition("=")
            if not sep:
                raise UsageError(f"tolerance override must be KEY=VALUE, got {item!r}")
            try:
                cfg.tolerances[key] = float(val)
            except ValueError as exc:
                raise UsageError(f"tolerance {key!r} is not a number") from exc
    for key in _EXTRA_KEYS:
        if key in values:
            cfg.extra[key] = values.pop(key)
    for key, val in values.items():
        if not hasattr(cfg, key):
            raise UsageError(f"unknown option {key!r}")
        setattr(cfg, key, val)
    if cfg.count < 0:
        raise UsageError("count must be non-negative")
    return cfg


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with code 2
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        cfg = make_config(ns)
        return COMMANDS[cfg.subcommand](cfg)
    except (UsageError, DomainError, PreconditionError, GeometryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CurvCertError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
