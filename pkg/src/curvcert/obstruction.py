"""Exact certificates that the principal-part systems have no admissible nonzero solutions.

Systems are linear in a few sign-constrained parameters (A, B, C, ...) with
polynomial coefficients in x_1..x_n.  Coefficients are exact rationals.

Two certificate types are produced:

* sign-product: a product of powers of binomial equations whose monomial
  side is a perfect square while the coefficient side is negative;
* branch-and-bound: after fixing the support of x, dividing out monomial
  factors, substituting y_i = x_i^2 and normalising max y = 1, every box of
  the y-domain carries multipliers p, q >= 0 with p^T L - q^T U > 0, where
  [L, U] encloses the (orthant-signed) coefficient matrix on the box.  Then
  mu = p - q gives mu^T N(y) > 0 for every N(y) in the box, so N(y) u = 0 has
  no solution with u > 0.
"""

from __future__ import annotations

import itertools
import json
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .aubin import (REFERENCE_ALPHA4, BachPrincipalTable, Poly, bach_table_general, bach_table_printed,
                    weyl_coeffs, _mono, _padd, _pscale, peval)
from .duality import complement
from .errors import DomainError

CONST = "1"
DEFAULT_BUDGET = 10**6


# ---------------------------------------------------------------------------
# systems


@dataclass
class PolySystem:
    """Equations sum_param param * poly_param(x) = 0 with exact rational coefficients."""

    name: str
    n: int
    params: tuple[str, ...]
    equations: list[dict]  # param -> Poly
    labels: list[str]
    signs: dict = field(default_factory=dict)  # param -> -1 / +1 (declared sign) or 0 (free nonzero)

    def evaluate(self, x: np.ndarray, values: dict | None = None) -> np.ndarray:
        """Residuals ``(N, n_equations)`` at points x for parameter values (arrays or scalars)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        values = {} if values is None else values
        out = np.zeros((len(x), len(self.equations)))
        for e, eq in enumerate(self.equations):
            for p, poly in eq.items():
                v = 1.0 if p == CONST else values[p]
                out[:, e] += np.asarray(v) * peval(poly, x)
        return out

    def to_sympy(self):
        import sympy as sp

        xs = sp.symbols(f"x1:{self.n + 1}")
        ps = {p: sp.Symbol(p) for p in self.params}
        exprs = []
        for eq in self.equations:
            e = 0
            for p, poly in eq.items():
                term = sum(sp.Rational(c.numerator, c.denominator) * sp.Mul(*[x**k for x, k in zip(xs, ex)])
                           for ex, c in poly.items())
                e += term * (1 if p == CONST else ps[p])
            exprs.append(sp.expand(e))
        return xs, ps, exprs

    def primitive(self, index: int) -> dict:
        """Equation ``index`` scaled to coprime integers with a positive leading coefficient."""
        eq = self.equations[index]
        coeffs = [c for poly in eq.values() for c in poly.values()]
        den = math.lcm(*[c.denominator for c in coeffs])
        ints = [int(c * den) for c in coeffs]
        g = math.gcd(*ints)
        lead = sorted(((p, ex) for p, poly in eq.items() for ex in poly), key=str)[0]
        sign = 1 if eq[lead[0]][lead[1]] > 0 else -1
        s = Fraction(den, g) * sign
        return {p: {ex: c * s for ex, c in poly.items()} for p, poly in eq.items()}


def wplus_system(alpha: Sequence = REFERENCE_ALPHA4, orientation: int = 1) -> PolySystem:
    """Off-diagonal principal equations of W~+ = 0: a_ijk x_j x_k (+/-) a_jil x_i x_l = 0.

    One equation per unordered index pair {i, k} with i < k and j < l the
    remaining indices (the other choices reproduce the same equations up to
    scale); r is normalised to 1 and the common factor f'f'' is dropped.
    """
    co = weyl_coeffs(alpha)
    if co.n != 4:
        raise DomainError("the self-dual system is defined for n = 4")
    eqs, labels, seen = [], [], set()
    for i, j, k in itertools.permutations(range(4), 3):
        l = 6 - i - j - k
        (a, b), s = complement(i, k, orientation)
        sigma = -1 if (a, b) == (j, l) else 1
        poly = _padd(_pscale(_mono(4, j, k), co.a3[i, j, k]),
                     _pscale(_mono(4, i, l), s * sigma * co.a3[j, i, l]))
        key = _normal_key(poly)
        if key in seen or not poly:
            continue
        seen.add(key)
        eqs.append({CONST: poly})
        labels.append(f"W+_{i + 1}{j + 1}{i + 1}{k + 1}")
    # order as (1,2,3), (1,2,4), (1,3,4) first when available
    return PolySystem("wplus", 4, (), eqs, labels)


def _normal_key(poly: Poly):
    if not poly:
        return ()
    items = sorted(poly.items())
    lead = items[0][1]
    return tuple((e, c / lead) for e, c in items)


def bach_system(alpha: Sequence = REFERENCE_ALPHA4, source: str = "printed", mode: str = "sign") -> PolySystem:
    """Homogeneous principal Bach system B~_ij = 0 (all i <= j), r = 1, lambda dropped.

    ``source`` selects the explicit table (``printed``), the corrected
    table derived from the general-alpha expression (``general``).
    ``mode`` is ``sign`` (A < 0, B > 0, C < 0) or ``free`` (A, B, C nonzero).
    """
    if source == "printed":
        if tuple(Fraction(a) for a in alpha) != REFERENCE_ALPHA4:
            raise DomainError("the printed table exists only for alpha = (1, 5/4, 3/2, 2)")
        table = bach_table_printed()
    elif source == "general":
        table = bach_table_general(alpha)
    else:
        raise DomainError(f"unknown source {source!r}")
    return bach_system_from_table(table, mode)


def bach_system_from_table(table: BachPrincipalTable, mode: str = "sign") -> PolySystem:
    if mode not in ("sign", "free"):
        raise DomainError(f"unknown mode {mode!r}")
    eqs, labels = [], []
    for (i, j) in sorted(table.entries):
        e = table.entries[i, j]
        eqs.append({p: e[p] for p in "ABC" if e[p]})
        labels.append(f"B_{i + 1}{j + 1}")
    signs = {"A": -1, "B": 1, "C": -1} if mode == "sign" else {"A": 0, "B": 0, "C": 0}
    return PolySystem(f"bach-{table.source}-{mode}", table.n, ("A", "B", "C"), eqs, labels, signs)


# ---------------------------------------------------------------------------
# certificates


@dataclass
class InfeasibilityCertificate:
    """Outcome of a certification run; ``status`` is infeasible, counterexample or inconclusive."""

    system: str
    status: str
    method: str
    details: dict
    subdivisions: int = 0
    runtime: float = 0.0
    counterexample: dict | None = None

    @property
    def verified(self) -> bool:
        return self.status == "infeasible"

    def to_json(self) -> str:
        return json.dumps({
            "schema": "curvcert.certificate/1", "system": self.system, "status": self.status,
            "method": self.method, "subdivisions": self.subdivisions, "details": self.details,
            "counterexample": self.counterexample,
        }, indent=1, sort_keys=True, default=str)


def _is_binomial_constant_system(sys: PolySystem) -> bool:
    return not sys.params and all(len(eq[CONST]) == 2 for eq in sys.equations)


def sign_product_certificate(sys: PolySystem, max_power: int = 1) -> dict | None:
    """Search exponents e in {-p..p}^k with prod (m1/m2)^e a square and prod (-c2/c1)^e < 0."""
    if not _is_binomial_constant_system(sys):
        return None
    ratios = []
    for eq in sys.equations:
        (e1, c1), (e2, c2) = sorted(eq[CONST].items())
        ratios.append((np.array(e1) - np.array(e2), -c2 / c1))
    rng = range(-max_power, max_power + 1)
    for ex in itertools.product(rng, repeat=len(ratios)):
        if not any(ex):
            continue
        mono = sum(k * r[0] for k, r in zip(ex, ratios))
        if np.any(mono % 2):
            continue
        value = Fraction(1)
        for k, (_, q) in zip(ex, ratios):
            value *= q**k
        if value < 0:
            return {"exponents": list(ex), "monomial": [int(v) for v in mono], "value": str(value),
                    "equations": sys.labels}
    return None


def check_sign_product(sys: PolySystem, cert: dict) -> bool:
    """Replay a sign-product certificate in exact arithmetic."""
    ex = cert["exponents"]
    mono = np.zeros(sys.n, dtype=int)
    value = Fraction(1)
    for k, eq in zip(ex, sys.equations):
        (e1, c1), (e2, c2) = sorted(eq[CONST].items())
        mono += k * (np.array(e1) - np.array(e2))
        value *= (-c2 / c1) ** k
    return bool(np.all(mono % 2 == 0) and value < 0 and any(ex))


# ----- support reduction ---------------------------------------------------


def _reduce_on_support(sys: PolySystem, support: tuple[int, ...]):
    """Equations restricted to x_i = 0 off the support, monomial factors divided out.

    Returns a list of (label, {param: {y-exponent: coeff}}) with exponents in y = x^2
    over the support variables, or raises ValueError if an odd exponent remains.
    """
    out = []
    for label, eq in zip(sys.labels, sys.equations):
        kept = {}
        for p, poly in eq.items():
            q = {e: c for e, c in poly.items() if all(e[i] == 0 for i in range(sys.n) if i not in support)}
            if q:
                kept[p] = q
        if not kept:
            continue
        exps = [e for poly in kept.values() for e in poly]
        common = [min(e[i] for e in exps) for i in range(sys.n)]
        red = {}
        for p, poly in kept.items():
            rp = {}
            for e, c in poly.items():
                d = [a - b for a, b in zip(e, common)]
                if any(v % 2 for v in d):
                    raise ValueError("odd exponent after factoring; y-substitution not applicable")
                ye = tuple(d[i] // 2 for i in support)
                rp[ye] = rp.get(ye, 0) + c
            red[p] = {e: c for e, c in rp.items() if c}
        out.append((label, {p: v for p, v in red.items() if v}))
    return out


def _box_bounds(poly: dict, lo: Sequence[Fraction], hi: Sequence[Fraction]) -> tuple[Fraction, Fraction]:
    """Exact enclosure of a polynomial in y >= 0 over a box (monomials are monotone)."""
    L = U = Fraction(0)
    for e, c in poly.items():
        mlo = Fraction(1)
        mhi = Fraction(1)
        for v, k in enumerate(e):
            if k:
                mlo *= lo[v] ** k
                mhi *= hi[v] ** k
        if c > 0:
            L += c * mlo
            U += c * mhi
        else:
            L += c * mhi
            U += c * mlo
    return L, U


def _frac(v: float) -> Fraction:
    return Fraction(v).limit_denominator(10**9)


def _farkas(Lm: list[list[Fraction]], Um: list[list[Fraction]]):
    """Find p, q >= 0 with p^T L - q^T U >= 0 componentwise and not all zero, verified exactly.

    Any N in the box [L, U] with N u = 0 for some u > 0 gives L u <= 0 <= U u
    row by row, so such a combination contradicts u > 0.  The strictly positive
    version is tried first because it survives rounding of the multipliers.
    """
    from scipy.optimize import linprog

    m = len(Lm)
    k = len(Lm[0]) if m else 0
    if m == 0:
        return None
    Lf = np.array([[float(v) for v in row] for row in Lm])
    Uf = np.array([[float(v) for v in row] for row in Um])
    G = np.hstack([Lf.T, -Uf.T])  # column combinations, shape (k, 2m)
    norm = np.hstack([np.ones(2 * m), [0.0]])
    # strict: maximise t with G w >= t, sum w <= 1
    res = linprog(np.r_[np.zeros(2 * m), -1.0], A_ub=np.vstack([np.hstack([-G, np.ones((k, 1))]), norm]),
                  b_ub=np.r_[np.zeros(k), 1.0], bounds=[(0, None)] * (2 * m) + [(None, 1.0)], method="highs")
    candidates = []
    if res.status == 0 and -res.fun > 1e-12:
        candidates.append(res.x[:2 * m])
    # semipositive: G w >= 0, maximise the total
    res = linprog(-G.sum(axis=0), A_ub=np.vstack([-G, norm[:-1]]), b_ub=np.r_[np.zeros(k), 1.0],
                  bounds=[(0, None)] * (2 * m), method="highs")
    if res.status == 0 and -res.fun > 1e-12:
        candidates.append(res.x)
    for w in candidates:
        p = [max(_frac(v), Fraction(0)) for v in w[:m]]
        q = [max(_frac(v), Fraction(0)) for v in w[m:]]
        if _separates(Lm, Um, p, q):
            return p, q
    return None


def _separates(Lm, Um, p, q) -> bool:
    vals = [_combo(Lm, Um, p, q, col) for col in range(len(Lm[0]))]
    return all(v >= 0 for v in vals) and any(v > 0 for v in vals)


def _combo(Lm, Um, p, q, col) -> Fraction:
    return sum((pi * row[col] for pi, row in zip(p, Lm)), Fraction(0)) - \
        sum((qi * row[col] for qi, row in zip(q, Um)), Fraction(0))


def _orthants(sys: PolySystem) -> list[tuple[int, ...]]:
    free = [p for p in sys.params if sys.signs.get(p, 0) == 0]
    fixed = {p: sys.signs[p] for p in sys.params if sys.signs.get(p, 0) != 0}
    out = []
    for combo in itertools.product((1, -1), repeat=len(free)):
        sig = dict(fixed)
        sig.update(zip(free, combo))
        s = tuple(sig[p] for p in sys.params)
        # the system is homogeneous in the parameters: drop orthants equal up to global sign
        if tuple(-v for v in s) in out:
            continue
        out.append(s)
    return out


@dataclass
class _Region:
    support: tuple[int, ...]
    pivot: int
    orthant: tuple[int, ...]


def _region_matrix(reduced, sys: PolySystem, region: _Region, lo, hi):
    """Enclosure of the signed coefficient matrix for a y-box (pivot coordinate fixed at 1)."""
    Lm, Um = [], []
    for _, eq in reduced:
        rowL, rowU = [], []
        for p, s in zip(sys.params, region.orthant):
            poly = eq.get(p, {})
            a, b = _box_bounds(poly, lo, hi)
            if s < 0:
                a, b = -b, -a
            rowL.append(a)
            rowU.append(b)
        Lm.append(rowL)
        Um.append(rowU)
    return Lm, Um


def _full_box(region: _Region):
    lo, hi = [], []
    for v in region.support:
        if v == region.pivot:
            lo.append(Fraction(1))
            hi.append(Fraction(1))
        else:
            lo.append(Fraction(0))
            hi.append(Fraction(1))
    return lo, hi


def _bnb(reduced, sys, region, budget_left: int, max_depth: int = 40):
    """Depth-first branch and bound.

    Returns (tree | None, boxes used, witness); on failure the witness is
    "budget" or the unclosed box followed by its ancestors.
    """
    count = 0
    witness = None

    path = []

    def solve(lo, hi, depth):
        nonlocal count, witness
        if count >= budget_left:
            raise _Budget()
        count += 1
        Lm, Um = _region_matrix(reduced, sys, region, lo, hi)
        cert = _farkas(Lm, Um)
        if cert is not None:
            p, q = cert
            return {"lo": [str(v) for v in lo], "hi": [str(v) for v in hi],
                    "p": [str(v) for v in p], "q": [str(v) for v in q]}
        widths = [h - l for l, h in zip(lo, hi)]
        d = max(range(len(widths)), key=lambda i: widths[i]) if widths else None
        if d is None or widths[d] == 0 or depth >= max_depth:
            witness = [(lo, hi)] + path[::-1]
            return None
        mid = (lo[d] + hi[d]) / 2
        lo2, hi1 = list(lo), list(hi)
        hi1[d] = mid
        lo2[d] = mid
        path.append((lo, hi))
        left = solve(lo, hi1, depth + 1)
        right = None if left is None else solve(lo2, hi, depth + 1)
        path.pop()
        if right is None:
            return None
        return {"split": d, "at": str(mid), "children": [left, right]}

    lo, hi = _full_box(region)
    try:
        tree = solve(lo, hi, 0)
    except _Budget:
        return None, count, "budget"
    return tree, count, witness


class _Budget(Exception):
    pass


def _point_solution(reduced, sys, region, lo, hi):
    """Try to exhibit an actual solution in a box that could not be closed."""
    from scipy.optimize import linprog

    k = len(sys.params)
    for y in ([float(l + h) / 2 for l, h in zip(lo, hi)], [float(v) for v in hi], [float(v) for v in lo]):
        rows = []
        for _, eq in reduced:
            rows.append([s * sum(float(c) * np.prod([yv**e_ for yv, e_ in zip(y, e)])
                                 for e, c in eq.get(p, {}).items())
                         for p, s in zip(sys.params, region.orthant)])
        N = np.array(rows)
        # maximise t subject to N u = 0, u >= t, sum u = 1
        A_eq = np.vstack([np.hstack([N, np.zeros((len(N), 1))]), np.r_[np.ones(k), 0.0]])
        res = linprog(np.r_[np.zeros(k), -1.0], A_ub=np.hstack([-np.eye(k), np.ones((k, 1))]), b_ub=np.zeros(k),
                      A_eq=A_eq, b_eq=np.r_[np.zeros(len(N)), 1.0], bounds=[(0, None)] * k + [(None, None)],
                      method="highs")
        if res.status != 0 or -res.fun <= 1e-9:
            continue
        u = res.x[:k] / res.x[:k].max()
        resid = float(np.abs(N @ u).max())
        if resid <= 1e-12:
            x = np.zeros(sys.n)
            for v, yy in zip(region.support, y):
                x[v] = math.sqrt(yy)
            return {"x": x.tolist(), "params": dict(zip(sys.params, (np.array(region.orthant) * u).tolist())),
                    "residual": resid}
    return None


def _single_wplus_support(alpha, s: int) -> dict | None:
    """Exactly one nonzero coordinate: a pair with a_ij * beta_ij,s < 0, else a rank-2 minor."""
    co = weyl_coeffs(alpha)
    for (i, j), a in sorted(co.a2.items()):
        if i < j:
            beta = co.b2[i, j][s]
            if a * beta < 0:
                return {"support": [s], "pair": [i, j], "a_ij": str(a), "beta": str(beta),
                        "reason": "a_ij f' + beta x_s^2 f'' = 0 forces f'/f'' > 0"}
    rank = weyl_single_support_certificate(alpha, s)
    if rank["infeasible"]:
        return {"support": [s], **rank, "reason": "W+_ijij = W_ijij / 2 here; rank 2 forces f' = 0"}
    return None


def certify_no_nonzero_solution(sys: PolySystem, nonzero: str = "any", budget: int = DEFAULT_BUDGET,
                                alpha: Sequence | None = None) -> InfeasibilityCertificate:
    """Certify that ``sys`` has no admissible solution with x != 0.

    ``nonzero="all"`` restricts to all coordinates nonzero; ``"any"`` covers
    every support of x.  Parameter signs are taken from ``sys.signs``.
    """
    t0 = time.perf_counter()
    if nonzero not in ("all", "any"):
        raise DomainError("nonzero must be 'all' or 'any'")
    if _is_binomial_constant_system(sys):
        return _certify_binomial(sys, nonzero, alpha, t0)
    supports = [tuple(range(sys.n))] if nonzero == "all" else [
        s for k in range(1, sys.n + 1) for s in itertools.combinations(range(sys.n), k)]
    details = {"regions": [], "orthants": [list(o) for o in _orthants(sys)]}
    used = 0
    for support in supports:
        reduced = _reduce_on_support(sys, support)
        for pivot in support:
            for orth in _orthants(sys):
                region = _Region(support, pivot, orth)
                tree, cnt, witness = _bnb(reduced, sys, region, budget - used)
                used += cnt
                if tree is None:
                    cx = None
                    if witness not in (None, "budget"):
                        for lo, hi in witness:
                            cx = _point_solution(reduced, sys, region, lo, hi)
                            if cx:
                                break
                    status = "counterexample" if cx else "inconclusive"
                    return InfeasibilityCertificate(sys.name, status, "interval-branch-and-bound",
                                                    {**details, "failed_region": _region_json(region),
                                                     "reason": "budget" if witness == "budget" else "unclosed box"},
                                                    used, time.perf_counter() - t0, cx)
                details["regions"].append({**_region_json(region), "boxes": cnt, "tree": tree})
    return InfeasibilityCertificate(sys.name, "infeasible", "interval-branch-and-bound", details, used,
                                    time.perf_counter() - t0)


def _region_json(region: _Region) -> dict:
    return {"support": list(region.support), "pivot": region.pivot, "orthant": list(region.orthant)}


def _certify_binomial(sys: PolySystem, nonzero: str, alpha, t0) -> InfeasibilityCertificate:
    cert = sign_product_certificate(sys)
    if cert is None:
        return InfeasibilityCertificate(sys.name, "inconclusive", "sign-product", {}, 0, time.perf_counter() - t0)
    details = {"all_nonzero": cert}
    if nonzero == "any":
        partial = []
        for k in range(1, sys.n):
            for support in itertools.combinations(range(sys.n), k):
                hit = None
                for label, eq in zip(sys.labels, sys.equations):
                    alive = {e: c for e, c in eq[CONST].items()
                             if all(e[i] == 0 for i in range(sys.n) if i not in support)}
                    if len(alive) == 1:
                        hit = {"support": list(support), "equation": label,
                               "monomial": [list(e) for e in alive]}
                        break
                if hit is None and k == 1 and alpha is not None:
                    hit = _single_wplus_support(alpha, support[0])
                if hit is None:
                    return InfeasibilityCertificate(sys.name, "inconclusive", "sign-product",
                                                    {**details, "open_support": list(support)}, 0,
                                                    time.perf_counter() - t0)
                partial.append(hit)
        details["partial_supports"] = partial
    return InfeasibilityCertificate(sys.name, "infeasible", "sign-product", details, 0, time.perf_counter() - t0)


# ----- replay ---------------------------------------------------------------


def replay_certificate(sys: PolySystem, cert: InfeasibilityCertificate | dict, alpha=None) -> bool:
    """Re-check a certificate from its stored data (exact arithmetic only)."""
    data = json.loads(cert.to_json()) if isinstance(cert, InfeasibilityCertificate) else cert
    if data["status"] != "infeasible":
        return False
    if data["method"] == "sign-product":
        d = data["details"]
        if not check_sign_product(sys, d["all_nonzero"]):
            return False
        for hit in d.get("partial_supports", []):
            if "equation" in hit:
                eq = sys.equations[sys.labels.index(hit["equation"])][CONST]
                alive = [e for e in eq if all(e[i] == 0 for i in range(sys.n) if i not in hit["support"])]
                if len(alive) != 1:
                    return False
            else:
                if alpha is None or _single_wplus_support(alpha, hit["support"][0]) is None:
                    return False
        return True
    covered = set()
    for reg in data["details"]["regions"]:
        region = _Region(tuple(reg["support"]), reg["pivot"], tuple(reg["orthant"]))
        reduced = _reduce_on_support(sys, region.support)
        lo, hi = _full_box(region)
        if not _replay_tree(reg["tree"], reduced, sys, region, lo, hi):
            return False
        covered.add((region.support, region.pivot, region.orthant))
    return True


def _replay_tree(node, reduced, sys, region, lo, hi) -> bool:
    if [str(v) for v in lo] != node.get("lo", [str(v) for v in lo]) or \
            [str(v) for v in hi] != node.get("hi", [str(v) for v in hi]):
        return False
    if "children" in node:
        d = node["split"]
        mid = Fraction(node["at"])
        if mid != (lo[d] + hi[d]) / 2:
            return False
        hi1, lo2 = list(hi), list(lo)
        hi1[d] = mid
        lo2[d] = mid
        return (_replay_tree(node["children"][0], reduced, sys, region, lo, hi1)
                and _replay_tree(node["children"][1], reduced, sys, region, lo2, hi))
    Lm, Um = _region_matrix(reduced, sys, region, lo, hi)
    p = [Fraction(v) for v in node["p"]]
    q = [Fraction(v) for v in node["q"]]
    if any(v < 0 for v in p + q):
        return False
    return _separates(Lm, Um, p, q)


# ----- sampling check -------------------------------------------------------


def spot_check(sys: PolySystem, count: int = 10**5, seed: int = 0, nonzero: str = "any") -> dict:
    """Random admissible points (normalised box, signed parameters) must violate some equation."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1.0, 1.0, (count, sys.n))
    if nonzero == "any":
        mask = rng.random((count, sys.n)) < 0.25
        x[mask] = 0.0
        dead = ~np.any(x != 0, axis=1)
        x[dead, 0] = 1.0
    x /= np.abs(x).max(axis=1, keepdims=True)
    values = {}
    for p in sys.params:
        s = sys.signs.get(p, 0)
        mag = np.exp(rng.uniform(-8, 8, count))
        values[p] = mag * (s if s else rng.choice([-1.0, 1.0], count))
    res = np.abs(sys.evaluate(x, values)).max(axis=1)
    return {"count": count, "min_violation": float(res.min()), "all_violate": bool(np.all(res > 0))}


# ----- the Weyl single-nonzero-coordinate subcase ----------------------------


def weyl_single_support_certificate(alpha: Sequence, s: int) -> dict:
    """With only x_s nonzero, W~_ijij = 0 reads a_ij f' + beta_ij z = 0 for all pairs (z = x_s^2 f'' / r^2).

    If the rational matrix [a_ij, beta_ij] has rank 2 the only solution is
    f' = 0, contradicting f' > 0.
    """
    co = weyl_coeffs(alpha)
    rows = [(co.a2[i, j], co.b2[i, j][s]) for (i, j) in sorted(co.a2) if i < j]
    for (a1, b1), (a2, b2) in itertools.combinations(rows, 2):
        det = a1 * b2 - a2 * b1
        if det != 0:
            return {"coordinate": s, "rank": 2, "minor": [[str(a1), str(b1)], [str(a2), str(b2)]],
                    "det": str(det), "infeasible": True}
    return {"coordinate": s, "rank": 1 if any(a or b for a, b in rows) else 0, "infeasible": False}
