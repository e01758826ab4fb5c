"""Intersection numbers across a parameter family ``g(x, lambda)``.

A family is scanned on a finite product grid.  Every grid point gets an
immersion certificate and, when it passes, an intersection number from
the pair route and the degree route.  The resulting table can be checked
for generic constancy modulo 2 and fitted by ``c * sgn(h(lambda))`` with
a low-degree polynomial ``h``.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd, lcm

import numpy as np
from scipy.optimize import linprog
from scipy.sparse.csgraph import connected_components
from scipy.sparse import coo_matrix

from .degree import DegreeRouteConfig, degree_route
from .errors import DimensionError, SphereImmError
from .immersion import ImmersionConfig, check_immersion_small_spheres, specialize_family
from .polycore import Polynomial, PolynomialMap
from .selfint import SelfIntConfig, radius_stability_check

log = logging.getLogger(__name__)

STATUS_OK = "I"
STATUS_IMMERSION = "immersion-failed"
STATUS_SOLVER = "solver-failed"


@dataclass
class FamilySpec:
    """``g`` in ``n + 1 + p`` variables, the last ``p`` being parameters.

    ``axes`` holds one value list per parameter; the grid is their product.
    """

    n: int
    p: int
    g: PolynomialMap
    axes: tuple[tuple, ...] = ()
    lambda_names: tuple[str, ...] = ()

    def __post_init__(self):
        if self.n < 1 or self.n % 2:
            raise DimensionError(f"n = {self.n} must be a positive even integer")
        if self.g.domain_dim != self.n + 1 + self.p:
            raise DimensionError(
                f"family map has {self.g.domain_dim} variables, expected n + 1 + p = "
                f"{self.n + 1 + self.p}")
        if self.g.codomain_dim != 2 * self.n:
            raise DimensionError(f"family map needs {2 * self.n} components")
        if self.axes and len(self.axes) != self.p:
            raise DimensionError(f"expected {self.p} grid axes, got {len(self.axes)}")

    def with_axes(self, *axes) -> "FamilySpec":
        return FamilySpec(self.n, self.p, self.g, tuple(tuple(a) for a in axes),
                          self.lambda_names)

    def grid(self) -> list[tuple]:
        return list(itertools.product(*self.axes))

    def member(self, lam) -> PolynomialMap:
        return specialize_family(self.g, list(lam), self.p)


def scaled_family(g: PolynomialMap, component_index: int, axes=()) -> FamilySpec:
    """Family ``g_s`` multiplying component ``component_index`` (1-based) by ``s``."""
    m = g.codomain_dim
    if not 1 <= component_index <= m:
        raise IndexError(f"component index {component_index} outside 1..{m}")
    k = g.domain_dim
    s = Polynomial.variable(k, k + 1)
    comps = [c.embed(k + 1, range(k)) for c in g.components]
    comps[component_index - 1] = comps[component_index - 1] * s
    fam = FamilySpec(k - 1, 1, PolynomialMap(k + 1, tuple(comps)), (), ("s",))
    return fam.with_axes(*axes) if axes else fam


@dataclass
class ScanConfig:
    method: str = "both"                       # pairs | degree | both
    stability_factors: tuple[float, ...] = (1.0, 0.1)
    immersion: ImmersionConfig = field(default_factory=ImmersionConfig)
    selfint: SelfIntConfig = field(default_factory=SelfIntConfig)
    degree: DegreeRouteConfig = field(default_factory=DegreeRouteConfig)


@dataclass
class PointResult:
    lam: tuple
    status: str
    I: int | None = None
    radius: float | None = None
    pairs_value: int | None = None
    degree_value: int | None = None
    cross_validated: bool = False
    detail: str = ""

    def to_dict(self) -> dict:
        return {"lambda": [_num(v) for v in self.lam], "status": self.status, "I": self.I,
                "radius": self.radius, "pairs_value": self.pairs_value,
                "degree_value": self.degree_value, "cross_validated": self.cross_validated,
                "detail": self.detail}


@dataclass
class SignFit:
    h: Polynomial
    c: int
    mismatches: int

    def to_dict(self, names=None) -> dict:
        return {"h": self.h.to_string(names), "c": self.c, "mismatches": self.mismatches}


@dataclass
class FamilyReport:
    grid: list[tuple]
    values: list[PointResult]
    strata: list[dict] = field(default_factory=list)
    mod2_generic: bool | None = None
    exceptional: list[tuple] = field(default_factory=list)
    sign_fit: SignFit | None = None
    shape: tuple[int, ...] = ()

    def defined(self) -> list[tuple[tuple, int]]:
        return [(v.lam, v.I) for v in self.values if v.status == STATUS_OK]

    def table(self) -> list[int | str]:
        return [v.I if v.status == STATUS_OK else v.status for v in self.values]

    def to_dict(self, names=None) -> dict:
        return {"grid": [[_num(v) for v in lam] for lam in self.grid],
                "values": [v.to_dict() for v in self.values],
                "strata": self.strata,
                "mod2_generic": self.mod2_generic,
                "exceptional": [[_num(v) for v in lam] for lam in self.exceptional],
                "sign_fit": None if self.sign_fit is None else self.sign_fit.to_dict(names)}


def _num(v):
    if isinstance(v, Fraction):
        return str(v) if v.denominator != 1 else int(v)
    return v


# -- scanning ---------------------------------------------------------------------

def evaluate_point(g: PolynomialMap, cfg: ScanConfig, lam=()) -> PointResult:
    """Certificate plus intersection number(s) for a single map."""
    cert = check_immersion_small_spheres(g, cfg.immersion)
    if not cert.passed:
        return PointResult(tuple(lam), STATUS_IMMERSION,
                           detail=f"certificate {cert.verdict}: {cert.reason}")
    r = cert.r0_estimate
    res = PointResult(tuple(lam), STATUS_SOLVER, radius=r)
    notes = []
    if cfg.method in ("pairs", "both"):
        try:
            stable, vals = radius_stability_check(g, [r * f for f in cfg.stability_factors],
                                                  cfg.selfint)
            if stable:
                res.pairs_value = vals[0]
            else:
                notes.append(f"pair route unstable or irregular across radii: {vals}")
        except SphereImmError as exc:
            notes.append(f"pair route: {exc}")
    if cfg.method in ("degree", "both"):
        try:
            res.degree_value = degree_route(g, cfg.degree).value
        except SphereImmError as exc:
            notes.append(f"degree route: {type(exc).__name__}")
    vals = [v for v in (res.pairs_value, res.degree_value) if v is not None]
    if cfg.method == "both" and len(vals) == 2 and vals[0] != vals[1]:
        notes.append(f"routes disagree: pairs={vals[0]} degree={vals[1]}")
    elif vals:
        res.status, res.I = STATUS_OK, vals[0]
        res.cross_validated = len(vals) == 2
    res.detail = "; ".join(notes)
    return res


def scan(f: FamilySpec, cfg: ScanConfig | None = None) -> FamilyReport:
    """Tabulate ``lambda -> I(g_lambda)`` over the grid of ``f``."""
    cfg = cfg or ScanConfig()
    if not f.axes:
        raise ValueError("family has no grid axes")
    grid = f.grid()
    values = []
    for lam in grid:
        log.info("scanning lambda=%s", lam)
        values.append(evaluate_point(f.member(lam), cfg, lam))
    report = FamilyReport(grid, values, shape=tuple(len(a) for a in f.axes))
    report.strata = _strata(report)
    report.mod2_generic, report.exceptional = check_mod2_generic(report)
    return report


def _strata(report: FamilyReport) -> list[dict]:
    """Maximal grid-connected groups of points sharing the same defined value."""
    shape = report.shape or (len(report.grid),)
    idx = list(itertools.product(*(range(s) for s in shape)))
    pos = {ix: k for k, ix in enumerate(idx)}
    rows, cols = [], []
    for k, ix in enumerate(idx):
        if report.values[k].status != STATUS_OK:
            continue
        for ax in range(len(shape)):
            nb = ix[:ax] + (ix[ax] + 1,) + ix[ax + 1:]
            j = pos.get(nb)
            if j is not None and report.values[j].status == STATUS_OK \
                    and report.values[j].I == report.values[k].I:
                rows.append(k)
                cols.append(j)
    n = len(idx)
    graph = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    out, seen = [], {}
    for k in range(n):
        if report.values[k].status != STATUS_OK:
            continue
        if labels[k] not in seen:
            seen[labels[k]] = len(out)
            out.append({"value": report.values[k].I, "points": []})
        out[seen[labels[k]]]["points"].append(k)
    return out


def check_mod2_generic(report: FamilyReport) -> tuple[bool | None, list[tuple]]:
    """Whether defined values share one parity; the minority parity is exceptional.

    Returns ``(None, [])`` when no grid point has a defined value.
    """
    defined = report.defined()
    if not defined:
        return None, []
    odd = [lam for lam, v in defined if v % 2]
    even = [lam for lam, v in defined if not v % 2]
    if not odd or not even:
        return True, []
    # ties: the parity seen first is taken as the generic one
    first_odd = defined[0][1] % 2 == 1
    minority = even if (len(odd) > len(even) or (len(odd) == len(even) and first_odd)) else odd
    return False, minority


# -- sign representation ------------------------------------------------------------

def _monomials(p: int, degree: int) -> list[tuple[int, ...]]:
    out = []
    for d in range(degree + 1):
        for combo in itertools.combinations_with_replacement(range(p), d):
            e = [0] * p
            for i in combo:
                e[i] += 1
            out.append(tuple(e))
    return out


def _primitive(coefs: list[Fraction]) -> list[Fraction]:
    den = 1
    for c in coefs:
        den = lcm(den, c.denominator)
    ints = [int(c * den) for c in coefs]
    g = 0
    for v in ints:
        g = gcd(g, abs(v))
    return [Fraction(v, g or 1) for v in ints]


def _sign_mismatches(h: Polynomial, points, targets) -> int:
    bad = 0
    for lam, s in zip(points, targets):
        v = h.evaluate([Fraction(x) if not isinstance(x, float) else Fraction(x) for x in lam])
        sv = (v > 0) - (v < 0)
        bad += sv != s
    return bad


def _lp(A, t):
    """Least-L1 coefficients ``a`` with ``t h >= 1`` where ``t != 0`` and ``h = 0`` where ``t = 0``."""
    k = A.shape[1]
    nz, z = t != 0, t == 0
    kw = {}
    if nz.any():
        kw["A_ub"] = -(t[nz, None] * np.hstack([A[nz], -A[nz]]))
        kw["b_ub"] = -np.ones(int(nz.sum()))
    if z.any():
        kw["A_eq"] = np.hstack([A[z], -A[z]])
        kw["b_eq"] = np.zeros(int(z.sum()))
    res = linprog(np.ones(2 * k), bounds=[(0, None)] * (2 * k), method="highs", **kw)
    return res.x[:k] - res.x[k:] if res.success else None


def _fit_at_degree(points, targets, p: int, degree: int):
    mons = _monomials(p, degree)
    A = np.array([[float(np.prod([float(l) ** e for l, e in zip(lam, mon)])) for mon in mons]
                  for lam in points])
    t = np.array(targets, dtype=float)
    coef = _lp(A, t)
    if coef is None:
        return None
    # greedy pruning toward a sparse representative among the optimal fits
    support = [j for j in np.argsort(np.abs(coef), kind="stable") if abs(coef[j]) > 1e-12]
    for j in list(support):
        trial = [i for i in support if i != j]
        if not trial:
            continue
        sub = _lp(A[:, trial], t)
        if sub is not None:
            support = trial
    sub = _lp(A[:, support], t)
    coef = np.zeros(len(mons))
    coef[support] = sub
    scale = np.abs(coef).max()
    if scale == 0:
        return None
    for limit in (10, 100, 10 ** 4, 10 ** 6):
        fr = [Fraction(float(c / scale)).limit_denominator(limit) for c in coef]
        if not any(fr):
            continue
        h = Polynomial(p, {mon: c for mon, c in zip(mons, _primitive(fr)) if c})
        bad = _sign_mismatches(h, points, targets)
        if bad == 0:
            return h, 0
    return h, bad


def fit_sign_representation(report: FamilyReport, degree_bound: int = 3,
                            num_params: int | None = None) -> SignFit | None:
    """Find ``h`` of degree ``<= degree_bound`` and integer ``c`` with ``I = c sgn(h)``.

    The lowest degree that separates the table is used; within it the
    coefficient vector of least L1 norm is found by linear programming and
    then rationalised and made primitive.  Returns ``None`` when the
    table's values cannot be written as ``c * sgn`` or no ``h`` fits.
    """
    defined = report.defined()
    if not defined:
        return None
    p = num_params if num_params is not None else len(defined[0][0])
    vals = sorted({v for _, v in defined})
    points = [lam for lam, _ in defined]
    if len(vals) == 1:
        return SignFit(Polynomial.constant(1, p), vals[0], 0)
    if len(vals) != 2:
        return None
    a, b = vals
    if a == -b:
        c = b
    elif a == 0 or b == 0:
        c = a or b
    else:
        return None
    targets = [v // c if v else 0 for _, v in defined]
    for d in range(1, degree_bound + 1):
        out = _fit_at_degree(points, targets, p, d)
        if out is not None and out[1] == 0:
            return SignFit(out[0], c, 0)
    return None
