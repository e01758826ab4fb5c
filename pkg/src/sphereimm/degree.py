"""Topological degree of polynomial maps on spheres and at isolated zeros.

Two independent estimators are provided:

``preimage_count``
    Pick a small regular value ``z``, find all solutions of ``H(x) = z``
    inside the ball by seeded multi-start Newton and add up the signs of
    ``det DH`` at them.
``kronecker_integral``
    Integrate the pullback of the normalised volume form of the sphere
    under ``x -> H(x)/|H(x)|`` and snap to the nearest integer.

Both operate on a copy of ``H`` whose components are divided by their RMS
size on the sphere; positive rescaling does not change the degree.

The module also assembles the auxiliary map
``H(x, y) = (|x|^2 - |y|^2, |x - y|^2 - t |(x, y)|^(2 alpha), g(x) - g(y))``
whose local degree at the origin is twice the intersection number of ``g``
on small spheres (``t > 0``) and zero for ``t < 0``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import (ClusterAmbiguityError, DimensionError, NoStabilizationError,
                     QuadratureError, SphereImmError, ZeroOnSphereError)
from .kernels import CompiledMap
from .numerics import (ball_points, cluster, minimize_on_sphere, newton_batch,
                       sphere_directions)
from .polycore import Polynomial, PolynomialMap, variables

log = logging.getLogger(__name__)

METHODS = ("preimage_count", "kronecker_integral")


@dataclass
class DegreeConfig:
    # Newton preimage search
    newton_starts: int = 512
    newton_rounds: int = 4
    newton_tol: float = 1e-12
    newton_max_iter: int = 200
    cluster_radius: float = 1e-6          # relative to the sphere radius
    regular_value_factor: float = 1e-3    # |z| / min|H| on the sphere
    regular_value_attempts: int = 5
    det_threshold: float = 1e-10          # Hadamard-normalised |det DH|
    # sphere scan for min |H|
    sphere_samples: int = 4096
    sphere_local_starts: int = 16
    zero_tol: float = 1e-9
    # Kronecker quadrature
    gauss_order: int = 24                 # nodes per angle, m <= 4
    gauss_max_order: int = 768
    gauss_refine_tol: float = 1e-3
    mc_log2_min: int = 14                 # per replicate, m >= 5
    mc_log2_max: int = 18
    mc_replicates: int = 4
    snap_tol: float = 0.25
    # radius schedule for local degrees
    radii: tuple[float, ...] | None = None
    r_max: float | None = None
    search_radius: float | None = None
    radius_fraction: float = 0.8
    radius_ratio: float = 0.9
    max_radii: int = 5
    zero_search_starts: int = 512
    zero_relative_tol: float = 1e-10
    seed: int = 0
    threads: int | None = None


@dataclass
class DegreeResult:
    value: int
    method: str
    radius: float
    evidence: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"value": self.value, "method": self.method, "radius": self.radius,
                "evidence": self.evidence}


# -- auxiliary map -------------------------------------------------------------

@dataclass(frozen=True)
class AuxiliaryMapSpec:
    t: Fraction
    alpha: int
    g: PolynomialMap
    H: PolynomialMap

    @property
    def natural_radius(self) -> float:
        """Radius at which ``|t| d^alpha`` is comparable to ``|x - y|^2``."""
        return float(abs(self.t)) ** (-1.0 / (2 * self.alpha - 2))


def build_H(g: PolynomialMap, t, alpha: int) -> AuxiliaryMapSpec:
    """Assemble ``(F1, delta - t d^alpha, g(x) - g(y))`` in ``2n + 2`` variables."""
    n = g.domain_dim - 1
    if n < 1 or g.codomain_dim != 2 * n:
        raise DimensionError(
            f"expected a map R^(n+1) -> R^(2n), got R^{g.domain_dim} -> R^{g.codomain_dim}")
    if n % 2:
        raise DimensionError(f"n = {n} must be even")
    if not isinstance(alpha, int) or alpha < 2 or alpha % 2:
        raise ValueError(f"alpha must be an even integer >= 2, got {alpha!r}")
    t = Fraction(t) if not isinstance(t, float) else Fraction(t).limit_denominator(10 ** 12)
    if t == 0:
        raise ValueError("t must be nonzero")
    k = n + 1
    v = variables(2 * k)
    xs, ys = v[:k], v[k:]
    zero = Polynomial.zero(2 * k)
    sq = lambda ps: sum((p * p for p in ps), zero)
    F1 = sq(xs) - sq(ys)
    delta = sq([a - b for a, b in zip(xs, ys)])
    d = sq(v)
    F2 = delta - (d ** alpha) * t
    gx = [c.embed(2 * k, range(k)) for c in g.components]
    gy = [c.embed(2 * k, range(k, 2 * k)) for c in g.components]
    H = PolynomialMap(2 * k, (F1, F2) + tuple(a - b for a, b in zip(gx, gy)))
    return AuxiliaryMapSpec(t, alpha, g, H)


# -- helpers ---------------------------------------------------------------------

def _compiled(H) -> CompiledMap:
    if isinstance(H, AuxiliaryMapSpec):
        H = H.H
    if isinstance(H, PolynomialMap):
        if H.domain_dim != H.codomain_dim:
            raise DimensionError("degree needs a square map R^m -> R^m")
        return H.compiled
    if isinstance(H, CompiledMap):
        return H
    raise TypeError(f"cannot compute a degree of {type(H).__name__}")


@dataclass
class _SphereScan:
    scale: np.ndarray
    min_norm: float
    argmin: np.ndarray


def _scan_sphere(cm: CompiledMap, r: float, cfg: DegreeConfig, seed: int) -> _SphereScan:
    """Component scales (RMS on the sphere) and the minimum of the scaled ``|H|``."""
    m = cm.m
    pts = r * sphere_directions(m, cfg.sphere_samples, seed)
    vals = cm.values(pts, cfg.threads)
    rms = np.sqrt(np.mean(vals ** 2, axis=0))
    if np.any(rms == 0):
        raise ZeroOnSphereError(f"a component of H vanishes identically on S(r={r:g})")
    scale = 1.0 / rms
    norms = np.linalg.norm(vals * scale, axis=1)
    worst = np.argsort(norms, kind="stable")[:cfg.sphere_local_starts]

    def resid(x):
        v, J = cm.values_and_jacobian(x, cfg.threads)
        return v * scale, J * scale[None, :, None]

    refined = minimize_on_sphere(resid, pts[worst], r, max_iter=30)
    rn = np.linalg.norm(cm.values(refined, cfg.threads) * scale, axis=1)
    allp = np.vstack([pts, refined])
    alln = np.concatenate([norms, rn])
    k = int(np.argmin(alln))
    if alln[k] < cfg.zero_tol:
        raise ZeroOnSphereError(f"H has a zero on S(r={r:g}) near {allp[k].tolist()}",
                                point=allp[k])
    return _SphereScan(scale, float(alln[k]), allp[k])


def _hadamard_ratio(J: np.ndarray) -> np.ndarray:
    det = np.linalg.det(J)
    rows = np.prod(np.linalg.norm(J, axis=2), axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(rows > 0, np.abs(det) / rows, 0.0), np.sign(det)


# -- preimage counting -------------------------------------------------------------

def _solve_preimages(cm, scale, z, r, cfg, seed):
    def system(X):
        v, J = cm.values_and_jacobian(X, cfg.threads)
        return v * scale - z, J * scale[None, :, None]

    roots = np.zeros((0, cm.m))
    stats = {"starts": 0, "converged": 0, "rounds": 0}
    complete = False
    for rnd in range(cfg.newton_rounds):
        starts = ball_points(cm.m, cfg.newton_starts, r, seed + 104729 * rnd)
        res = newton_batch(system, starts, tol=cfg.newton_tol,
                           max_iter=cfg.newton_max_iter, bound=4 * r)
        ok = res.converged & (np.linalg.norm(res.x, axis=1) < r)
        stats["starts"] += len(starts)
        stats["converged"] += int(ok.sum())
        stats["rounds"] = rnd + 1
        before = len(_dedupe(roots, cfg.cluster_radius * r))
        roots = np.vstack([roots, res.x[ok]])
        after = len(_dedupe(roots, cfg.cluster_radius * r))
        if rnd > 0 and after == before:
            complete = True
            break
    return roots, stats, complete, system


def _dedupe(points, radius):
    if len(points) == 0:
        return points
    labels = cluster(points, radius)
    return np.array([points[labels == k][0] for k in range(labels.max() + 1)])


def _preimage_degree(cm, r, cfg, seed, scan):
    rng = np.random.default_rng(seed)
    last_err = None
    for attempt in range(cfg.regular_value_attempts):
        d = rng.normal(size=cm.m)
        z = cfg.regular_value_factor * scan.min_norm * d / np.linalg.norm(d)
        roots, stats, complete, system = _solve_preimages(cm, scan.scale, z, r, cfg,
                                                          seed + 31 * attempt + 1)
        if len(roots) == 0:
            return 0, {"regular_value": z.tolist(), "preimages": [], "complete": complete,
                       "solver": stats, "attempt": attempt}
        labels = cluster(roots, cfg.cluster_radius * r)
        F, J = system(roots)
        ratio, sgn = _hadamard_ratio(J)
        reps, signs, ratios = [], [], []
        for k in range(labels.max() + 1):
            members = np.flatnonzero(labels == k)
            s = set(sgn[members].astype(int).tolist())
            if len(s) > 1 and min(ratio[members]) >= cfg.det_threshold:
                raise ClusterAmbiguityError(
                    f"roots within {cfg.cluster_radius * r:g} carry opposite signs")
            best = members[np.argmin(np.linalg.norm(F[members], axis=1))]
            reps.append(roots[best])
            signs.append(int(sgn[best]))
            ratios.append(float(ratio[best]))
        if min(ratios) < cfg.det_threshold:
            last_err = f"near-singular preimage (|det| ratio {min(ratios):.2e}); redrawing z"
            log.debug(last_err)
            continue
        order = np.lexsort(np.array(reps).T[::-1])
        pre = [{"point": reps[i].tolist(), "sign": signs[i], "det_ratio": ratios[i]}
               for i in order]
        return int(sum(signs)), {"regular_value": z.tolist(), "preimages": pre,
                                 "complete": complete, "solver": stats, "attempt": attempt}
    raise SphereImmError(f"no regular value found after {cfg.regular_value_attempts} draws: "
                         f"{last_err}")


# -- Kronecker integral ------------------------------------------------------------

def _sphere_area(m: int) -> float:
    return 2 * math.pi ** (m / 2) / math.gamma(m / 2)


def _product_rule(m: int, k: int):
    """Product Gauss rule on ``S^{m-1}`` (m = 2, 3, 4) with ``k`` nodes per polar angle."""
    phi = 2 * math.pi * np.arange(2 * k) / (2 * k)
    wphi = np.full(2 * k, 2 * math.pi / (2 * k))
    if m == 2:
        return np.stack([np.cos(phi), np.sin(phi)], axis=1), wphi
    c, wc = np.polynomial.legendre.leggauss(k)          # c = cos(theta)
    if m == 3:
        C, P = np.meshgrid(c, phi, indexing="ij")
        S = np.sqrt(1 - C ** 2)
        pts = np.stack([S * np.cos(P), S * np.sin(P), C], axis=-1).reshape(-1, 3)
        w = np.outer(wc, wphi).ravel()
        return pts, w
    if m == 4:
        a, wa = np.polynomial.legendre.leggauss(k)
        psi = (a + 1) * math.pi / 2
        wpsi = wa * math.pi / 2 * np.sin(psi) ** 2
        Ps, Cc, Ph = np.meshgrid(psi, c, phi, indexing="ij")
        Sc = np.sqrt(1 - Cc ** 2)
        pts = np.stack([np.cos(Ps), np.sin(Ps) * Cc, np.sin(Ps) * Sc * np.cos(Ph),
                        np.sin(Ps) * Sc * np.sin(Ph)], axis=-1).reshape(-1, 4)
        w = (wpsi[:, None, None] * wc[None, :, None] * wphi[None, None, :]).ravel()
        return pts, w
    raise ValueError("product rules are provided for m <= 4")


def _kronecker_degree(cm, r, cfg, seed, scan):
    m = cm.m
    area = _sphere_area(m)
    if m == 1:
        v = cm.values(np.array([[r], [-r]]))[:, 0]
        est = (np.sign(v[0]) - np.sign(v[1])) / 2
        return int(est), {"estimate": float(est), "distance": 0.0, "rule": "two-point"}
    if m <= 4:
        k = cfg.gauss_order
        pts, w = _product_rule(m, k)
        prev = float(np.dot(w, cm.kronecker_integrand(pts, r, scan.scale, cfg.threads)) / area)
        while True:
            k *= 2
            pts, w = _product_rule(m, k)
            est = float(np.dot(w, cm.kronecker_integrand(pts, r, scan.scale, cfg.threads)) / area)
            change = abs(est - prev)
            if change < cfg.gauss_refine_tol or 2 * k > cfg.gauss_max_order:
                break
            prev = est
        err = change
        rule = f"gauss-product(k={k})"
    else:
        # double the replicate size until the replicate spread is small
        q = cfg.mc_log2_min
        while True:
            means = []
            for rep in range(cfg.mc_replicates):
                dirs = sphere_directions(m, 1 << q, seed + 7 * rep + 3)
                means.append(float(np.mean(
                    cm.kronecker_integrand(dirs, r, scan.scale, cfg.threads))))
            est = float(np.mean(means))
            err = float(np.std(means, ddof=1) / math.sqrt(len(means)))
            if (abs(est - round(est)) < cfg.snap_tol and 4 * err < cfg.snap_tol) \
                    or q >= cfg.mc_log2_max:
                break
            q += 1
        rule = f"rqmc-sobol({cfg.mc_replicates}x2^{q})"
    value = int(round(est))
    dist = abs(est - value)
    ev = {"estimate": est, "distance": dist, "error_estimate": err, "rule": rule}
    if dist >= cfg.snap_tol or 3 * err >= cfg.snap_tol:
        raise QuadratureError(
            f"degree integral {est:.4f} (+/- {err:.3f}) is not within {cfg.snap_tol} of an integer",
            estimate=ev)
    return value, ev


# -- public operations ---------------------------------------------------------------

def degree_on_sphere(H, r: float, method: str = "preimage_count",
                     cfg: DegreeConfig | None = None) -> DegreeResult:
    """Degree of ``x -> H(x)/|H(x)|`` on the sphere of radius ``r`` about 0."""
    cfg = cfg or DegreeConfig()
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    cm = _compiled(H)
    scan = _scan_sphere(cm, r, cfg, cfg.seed + 17)
    if method == "preimage_count":
        value, ev = _preimage_degree(cm, r, cfg, cfg.seed + 1, scan)
    else:
        value, ev = _kronecker_degree(cm, r, cfg, cfg.seed + 2, scan)
    ev["min_scaled_norm_on_sphere"] = scan.min_norm
    return DegreeResult(value, method, float(r), ev)


def nonorigin_zeros(H, search_radius: float, cfg: DegreeConfig | None = None,
                    origin_fraction: float = 1e-2) -> np.ndarray:
    """Zeros of ``H`` in the ball of ``search_radius`` away from the origin, by norm."""
    cfg = cfg or DegreeConfig()
    cm = _compiled(H)
    pts = search_radius * sphere_directions(cm.m, 1024, cfg.seed + 5)
    vals = cm.values(pts, cfg.threads)
    rms = np.sqrt(np.mean(vals ** 2, axis=0))
    scale = 1.0 / np.where(rms > 0, rms, 1.0)

    def system(X):
        v, J = cm.values_and_jacobian(X, cfg.threads)
        return v * scale, J * scale[None, :, None]

    starts = ball_points(cm.m, cfg.zero_search_starts, search_radius, cfg.seed + 11)
    res = newton_batch(system, starts, tol=cfg.newton_tol, max_iter=cfg.newton_max_iter,
                       bound=4 * search_radius)
    nrm = np.linalg.norm(res.x, axis=1)
    keep = res.converged & (nrm > origin_fraction * search_radius) & (nrm < search_radius)
    # a genuine zero is small relative to the size each term could have at |x|
    keep[keep] = _relative_residual(cm, res.x[keep]) < cfg.zero_relative_tol
    z = _dedupe(res.x[keep], 1e-6 * search_radius)
    if len(z) == 0:
        return np.zeros((0, cm.m))
    return z[np.argsort(np.linalg.norm(z, axis=1), kind="stable")]


def _relative_residual(cm: CompiledMap, pts: np.ndarray) -> np.ndarray:
    """``max_i |H_i(x)| / sum_terms |c| |x|^deg`` for each row of ``pts``."""
    if len(pts) == 0:
        return np.zeros(0)
    rho = np.linalg.norm(pts, axis=1)
    degs = cm.exps.sum(axis=1)
    T = len(degs)
    bound = np.zeros((len(pts), cm.m))
    for t in range(T):
        lo, hi = cm.term_ptr[t], cm.term_ptr[t + 1]
        for k in range(lo, hi):
            bound[:, cm.term_comp[k]] += abs(cm.term_coef[k]) * rho ** degs[t]
    vals = np.abs(cm.values(pts))
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(bound > 0, vals / bound, 0.0).max(axis=1)


def _radius_schedule(H, cfg: DegreeConfig):
    if cfg.radii:
        return list(cfg.radii), {"source": "configured"}
    info = {}
    if cfg.r_max is not None:
        r_max = cfg.r_max
        info["source"] = "configured r_max"
    else:
        if cfg.search_radius is not None:
            R = cfg.search_radius
        elif isinstance(H, AuxiliaryMapSpec):
            R = 2.0 * H.natural_radius
        else:
            R = 1.0
        zeros = nonorigin_zeros(H, R, cfg)
        info["search_radius"] = R
        if len(zeros):
            nearest = float(np.linalg.norm(zeros[0]))
            info["nearest_nonorigin_zero"] = nearest
            r_max = cfg.radius_fraction * nearest
        else:
            r_max = cfg.radius_fraction * R
        info["source"] = "zero scan"
    info["r_max"] = r_max
    return [r_max * cfg.radius_ratio ** k for k in range(cfg.max_radii)], info


def local_degree_at_origin(H, cfg: DegreeConfig | None = None,
                           methods: tuple[str, ...] = METHODS) -> DegreeResult:
    """Local degree at an isolated zero at the origin.

    Evaluates the degree on a decreasing radius schedule with every method
    in ``methods``; a radius counts only when all methods agree, and the
    result is the first value seen at two consecutive radii.
    """
    cfg = cfg or DegreeConfig()
    radii, info = _radius_schedule(H, cfg)
    history = []
    prev = None
    for r in radii:
        entry = {"radius": r}
        values = {}
        for meth in methods:
            try:
                res = degree_on_sphere(H, r, meth, cfg)
                values[meth] = res.value
                entry[meth] = res.evidence if meth == "kronecker_integral" else {
                    "value": res.value,
                    "preimage_count": len(res.evidence["preimages"]),
                    "complete": res.evidence["complete"]}
            except SphereImmError as exc:
                entry[meth] = {"error": f"{type(exc).__name__}: {exc}"}
        entry["values"] = values
        agreed = len(values) == len(methods) and len(set(values.values())) == 1
        if "preimage_count" in values and not entry["preimage_count"].get("complete", True):
            agreed = False
        entry["accepted"] = agreed
        history.append(entry)
        if not agreed:
            prev = None
            continue
        v = next(iter(values.values()))
        if prev is not None and prev == v:
            return DegreeResult(v, "+".join(methods), r,
                                {"schedule": info, "history": history})
        prev = v
    raise NoStabilizationError("local degree did not stabilise over the radius schedule "
                               "(the origin may not be an isolated zero)",
                               evidence={"schedule": info, "history": history})


# -- intersection number through the auxiliary map ----------------------------------

@dataclass
class DegreeRouteConfig:
    t_values: tuple[float, ...] = (1e-1, 1e-2, 1e-3)
    alphas: tuple[int, ...] = (2, 4)
    # t is applied as t / length_scale^(2 alpha - 2), so schedules follow the map's scale
    length_scale: float = 1.0
    degree: DegreeConfig = field(default_factory=DegreeConfig)


@dataclass
class DegreeRouteReport:
    value: int
    per_alpha: dict
    entries: list

    def to_dict(self) -> dict:
        return {"value": self.value, "per_alpha": {str(k): v for k, v in self.per_alpha.items()},
                "entries": self.entries}


def degree_route(g: PolynomialMap, cfg: DegreeRouteConfig | None = None) -> DegreeRouteReport:
    """``I = lim_{t->0} (deg0 H^t + deg0 H^-t) / 2`` with stabilisation in ``t`` and ``alpha``."""
    cfg = cfg or DegreeRouteConfig()
    entries = []
    per_alpha = {}
    for alpha in cfg.alphas:
        prev = None
        stable = None
        for t in cfg.t_values:
            t_eff = Fraction(t).limit_denominator(10 ** 9) / Fraction(cfg.length_scale).limit_denominator(10 ** 9) ** (2 * alpha - 2)
            entry = {"alpha": alpha, "t": float(t_eff)}
            try:
                dp = local_degree_at_origin(build_H(g, t_eff, alpha), cfg.degree)
                dm = local_degree_at_origin(build_H(g, -t_eff, alpha), cfg.degree)
            except SphereImmError as exc:
                entry["error"] = f"{type(exc).__name__}: {exc}"
                entries.append(entry)
                prev = None
                continue
            entry.update({"deg_plus": dp.value, "deg_minus": dm.value,
                          "radius_plus": dp.radius, "radius_minus": dm.radius})
            total = dp.value + dm.value
            if total % 2:
                entry["error"] = "odd degree sum"
                entries.append(entry)
                prev = None
                continue
            psi = total // 2
            entry["psi"] = psi
            entries.append(entry)
            if prev is not None and prev == psi:
                stable = psi
                break
            prev = psi
        per_alpha[alpha] = stable
    vals = set(per_alpha.values())
    if None in vals or len(vals) != 1:
        raise NoStabilizationError(f"degree route unstable across t/alpha: {per_alpha}",
                                   evidence={"per_alpha": per_alpha, "entries": entries})
    return DegreeRouteReport(vals.pop(), per_alpha, entries)


def intersection_number_via_degree(g: PolynomialMap, cfg: DegreeRouteConfig | None = None) -> int:
    """Intersection number of ``g`` on small spheres from local degrees of the auxiliary map."""
    return degree_route(g, cfg).value
