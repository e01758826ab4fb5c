"""Self-intersection pairs of ``g`` restricted to a sphere and their signs.

Pairs ``p != q`` on ``S^n(r)`` with ``g(p) = g(q)`` are found by Newton
on a deflated system.  Writing ``y = x - sigma u`` with ``|u| = 1``, the
divided differences ``h`` of ``g`` give

    sum_j h_ij(x, x - sigma u) u_j = 0,   2 x.u - sigma |u|^2 = 0,
    |x|^2 = r^2,   |u|^2 = 1,

which is square in ``(x, u, sigma)`` and, unlike ``g(x) = g(y)``, has no
solutions on the diagonal when ``g`` is an immersion of the sphere.  Each
solution is then polished on ``g(x) - g(y) = 0, |x|^2 = |y|^2 = r^2``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DimensionError
from .numerics import cluster, newton_batch, sphere_directions
from .polycore import Polynomial, PolynomialMap, telescoping_decomposition, variables

log = logging.getLogger(__name__)


@dataclass
class SelfIntConfig:
    starts: int = 256
    doublings: int = 3
    newton_tol: float = 1e-11
    polish_tol: float = 1e-12
    max_iter: int = 100
    separation: float = 1e-4          # |p - q| >= separation * r
    dedupe: float = 1e-6              # relative to r
    triple_tol: float = 1e-8          # image clustering, relative to |g| scale
    regularity: float = 1e-9          # relative smallest singular value
    seed: int = 0


@dataclass
class SelfIntersectionPair:
    p: np.ndarray
    q: np.ndarray
    residual: float
    regular: bool
    sign: int | None
    condition: float
    determinant: float

    def to_dict(self) -> dict:
        return {"p": self.p.tolist(), "q": self.q.tolist(), "residual": self.residual,
                "regular": self.regular, "sign": self.sign, "condition": self.condition,
                "determinant": self.determinant}


@dataclass
class IntersectionReport:
    radius: float
    pairs: list[SelfIntersectionPair]
    complete_regular: bool
    intersection_number: int | None
    solver_stats: dict = field(default_factory=dict)
    complete: bool = True
    triple_points: list = field(default_factory=list)
    near_diagonal: list = field(default_factory=list)
    reason: str = ""

    def to_dict(self) -> dict:
        return {"radius": self.radius, "pairs": [p.to_dict() for p in self.pairs],
                "complete_regular": self.complete_regular,
                "intersection_number": self.intersection_number,
                "complete": self.complete, "triple_points": self.triple_points,
                "near_diagonal": self.near_diagonal, "solver_stats": self.solver_stats,
                "reason": self.reason}


def _check_shape(g: PolynomialMap) -> int:
    n = g.domain_dim - 1
    if n < 1 or g.codomain_dim != 2 * n:
        raise DimensionError(
            f"expected a map R^(n+1) -> R^(2n), got R^{g.domain_dim} -> R^{g.codomain_dim}")
    if n % 2:
        raise DimensionError(f"n = {n} must be even")
    return n


# -- orientation ------------------------------------------------------------------

def tangent_basis(p) -> np.ndarray:
    """Orthonormal basis ``v_1..v_n`` of ``p``-perp with ``det[p, v_1, ..., v_n] > 0``.

    Gram-Schmidt on the standard basis, skipping the vector most aligned
    with ``p``; the last vector is flipped if the orientation is wrong.
    Returned as an ``(n, n+1)`` array of rows.
    """
    p = np.asarray(p, dtype=float)
    nrm = np.linalg.norm(p)
    if nrm == 0:
        raise ValueError("tangent basis undefined at the origin")
    k = len(p)
    u = p / nrm
    skip = int(np.argmax(np.abs(u)))
    basis = [u]
    for i in range(k):
        if i == skip:
            continue
        v = np.zeros(k)
        v[i] = 1.0
        for b in basis:
            v -= np.dot(v, b) * b
        basis.append(v / np.linalg.norm(v))
    V = np.array(basis[1:])
    if np.linalg.det(np.vstack([p, V])) < 0:
        V[-1] = -V[-1]
    return V


def pairing_matrix(g: PolynomialMap, p, q, bp=None, bq=None) -> np.ndarray:
    """``[Dg(p) v_1, ..., Dg(p) v_n, Dg(q) w_1, ..., Dg(q) w_n]`` as a ``2n x 2n`` array."""
    cm = g.compiled
    _, J = cm.values_and_jacobian(np.vstack([p, q]))
    bp = tangent_basis(p) if bp is None else np.asarray(bp, dtype=float)
    bq = tangent_basis(q) if bq is None else np.asarray(bq, dtype=float)
    return np.hstack([J[0] @ bp.T, J[1] @ bq.T])


def classify_pair(g: PolynomialMap, p, q, cfg: SelfIntConfig | None = None,
                  bases=None) -> tuple[bool, int | None, float]:
    """Return ``(regular, sign, condition)`` for the self-intersection ``{p, q}``.

    ``condition`` is the smallest singular value of the pairing matrix.
    The pair is reported irregular, with no sign, when it falls below
    ``cfg.regularity`` times the largest singular value.
    """
    cfg = cfg or SelfIntConfig()
    bp, bq = bases if bases is not None else (None, None)
    M = pairing_matrix(g, p, q, bp, bq)
    sv = np.linalg.svd(M, compute_uv=False)
    cond = float(sv[-1])
    if sv[0] == 0 or sv[-1] <= cfg.regularity * sv[0]:
        return False, None, cond
    return True, int(np.sign(np.linalg.det(M))), cond


# -- solving ---------------------------------------------------------------------

@dataclass
class _Systems:
    n: int
    deflated: PolynomialMap         # unknowns (X, u, S), unit sphere
    original: PolynomialMap         # unknowns (P, Q), unit sphere


def _build_systems(g: PolynomialMap, r: float) -> _Systems:
    """Polynomial systems for the rescaled map ``G(X) = g(r X)`` on the unit sphere."""
    n = _check_shape(g)
    k = n + 1
    rq = Fraction(r).limit_denominator(10 ** 15) if isinstance(r, float) else Fraction(r)
    base = variables(k)
    gr = g.compose([v * rq for v in base])
    # normalise components so equations are of unit size
    comps = []
    for c in gr.components:
        s = c.coefficient_scale()
        comps.append(c / s if s else c)
    gr = PolynomialMap(k, tuple(comps))
    h = telescoping_decomposition(gr)

    v = variables(2 * k + 1)
    X, U, S = v[:k], v[k:2 * k], v[2 * k]
    subs = X + [X[j] - S * U[j] for j in range(k)]
    eqs = []
    for i in range(2 * n):
        e = Polynomial.zero(2 * k + 1)
        for j in range(k):
            e = e + h[i, j].compose(subs) * U[j]
        eqs.append(e)
    one = Polynomial.constant(1, 2 * k + 1)
    xu = sum((X[j] * U[j] for j in range(k)), Polynomial.zero(2 * k + 1))
    uu = sum((u * u for u in U), Polynomial.zero(2 * k + 1))
    xx = sum((x * x for x in X), Polynomial.zero(2 * k + 1))
    eqs += [xu * 2 - S * uu, xx - one, uu - one]
    deflated = PolynomialMap(2 * k + 1, tuple(eqs))

    w = variables(2 * k)
    P, Q = w[:k], w[k:]
    one2 = Polynomial.constant(1, 2 * k)
    orig = [c.embed(2 * k, range(k)) - c.embed(2 * k, range(k, 2 * k)) for c in gr.components]
    orig += [sum((a * a for a in P), Polynomial.zero(2 * k)) - one2,
             sum((b * b for b in Q), Polynomial.zero(2 * k)) - one2]
    return _Systems(n, deflated, PolynomialMap(2 * k, tuple(orig)))


def _newton_system(pmap: PolynomialMap):
    cm = pmap.compiled
    return lambda X: cm.values_and_jacobian(X)


def _starts(k: int, count: int, seed: int) -> np.ndarray:
    """Seeded low-discrepancy starts ``(X, u, S)`` with ``X, u`` unit and ``|S| <= 2``."""
    d = sphere_directions(2 * k + 1, count, seed)
    X = d[:, :k] / np.linalg.norm(d[:, :k], axis=1, keepdims=True)
    U = d[:, k:2 * k] / np.linalg.norm(d[:, k:2 * k], axis=1, keepdims=True)
    rng = np.random.default_rng(seed)
    S = rng.uniform(-2.0, 2.0, size=(len(d), 1))
    return np.hstack([X, U, S])


def _canonical(P: np.ndarray, Q: np.ndarray):
    """Order each pair so the lexicographically smaller point comes first."""
    out = np.empty((len(P), 2 * P.shape[1]))
    for i, (a, b) in enumerate(zip(P, Q)):
        first, second = (a, b) if tuple(np.round(a, 9)) <= tuple(np.round(b, 9)) else (b, a)
        out[i] = np.concatenate([first, second])
    return out


def _solve_round(systems: _Systems, count: int, cfg: SelfIntConfig, seed: int):
    k = systems.n + 1
    starts = _starts(k, count, seed)
    res = newton_batch(_newton_system(systems.deflated), starts, tol=cfg.newton_tol,
                       max_iter=cfg.max_iter, bound=10.0)
    ok = res.converged
    sol = res.x[ok]
    X, U, S = sol[:, :k], sol[:, k:2 * k], sol[:, 2 * k]
    near = np.abs(S) * np.linalg.norm(U, axis=1) < cfg.separation
    Y = X - S[:, None] * U
    stats = {"starts": int(count), "converged": int(ok.sum()), "near_diagonal": int(near.sum())}
    return X[~near], Y[~near], X[near], stats


def _polish(systems: _Systems, P, Q, cfg: SelfIntConfig):
    if len(P) == 0:
        return P, Q, np.zeros(0)
    res = newton_batch(_newton_system(systems.original), np.hstack([P, Q]),
                       tol=cfg.polish_tol, max_iter=30)
    k = systems.n + 1
    keep = res.converged
    keep &= np.linalg.norm(res.x[:, :k] - res.x[:, k:], axis=1) >= cfg.separation
    return res.x[keep, :k], res.x[keep, k:], res.residual[keep]


def _distinct_pairs(P, Q, cfg: SelfIntConfig):
    if len(P) == 0:
        return np.zeros((0, 2 * (P.shape[1] if P.ndim == 2 else 0)))
    C = _canonical(P, Q)
    labels = cluster(C, cfg.dedupe)
    reps = np.array([C[labels == j][0] for j in range(labels.max() + 1)])
    order = np.lexsort(np.round(reps, 9).T[::-1])
    return reps[order]


def find_self_intersections(g: PolynomialMap, r: float, cfg: SelfIntConfig | None = None
                            ) -> IntersectionReport:
    """Locate all unordered self-intersection pairs of ``g`` on ``S^n(r)``.

    The start budget is doubled until the number of distinct pairs repeats;
    if it never does the report is marked incomplete.  Signs are attached
    but ``intersection_number`` is left unset (see
    :func:`intersection_number_via_pairs`).
    """
    cfg = cfg or SelfIntConfig()
    systems = _build_systems(g, r)
    k = systems.n + 1
    stats = {"starts": 0, "converged": 0, "near_diagonal": 0, "rounds": 0}
    P_all, Q_all, diag_all = np.zeros((0, k)), np.zeros((0, k)), np.zeros((0, k))
    previous, complete = None, False
    count = cfg.starts
    for rnd in range(cfg.doublings + 1):
        P, Q, D, st = _solve_round(systems, count, cfg, cfg.seed + 1009 * rnd)
        for key in ("starts", "converged", "near_diagonal"):
            stats[key] += st[key]
        stats["rounds"] = rnd + 1
        P, Q, _ = _polish(systems, P, Q, cfg)
        P_all, Q_all = np.vstack([P_all, P]), np.vstack([Q_all, Q])
        diag_all = np.vstack([diag_all, D])
        found = len(_distinct_pairs(P_all, Q_all, cfg))
        if previous is not None and found == previous:
            complete = True
            break
        previous = found
        count *= 2
    reps = _distinct_pairs(P_all, Q_all, cfg)
    stats["deduped"] = len(reps)

    pairs = []
    for row in reps:
        p, q = row[:k] * r, row[k:] * r
        res = float(np.linalg.norm(np.subtract(*g.compiled.values(np.vstack([p, q])))))
        regular, sign, cond = classify_pair(g, p, q, cfg)
        det = float(np.linalg.det(pairing_matrix(g, p, q)))
        pairs.append(SelfIntersectionPair(p, q, res, regular, sign, cond, det))

    triples = _triple_points(g, pairs, cfg)
    near = _dedupe_points(diag_all, cfg.dedupe) * r
    return IntersectionReport(
        radius=float(r), pairs=pairs,
        complete_regular=bool(complete and not triples and all(p.regular for p in pairs)),
        intersection_number=None, solver_stats=stats, complete=complete,
        triple_points=triples, near_diagonal=[x.tolist() for x in near])


def _dedupe_points(pts, radius):
    if len(pts) == 0:
        return pts
    labels = cluster(pts, radius)
    return np.array([pts[labels == j][0] for j in range(labels.max() + 1)])


def _triple_points(g: PolynomialMap, pairs, cfg: SelfIntConfig) -> list:
    """Image values attained by three or more distinct solution points."""
    if not pairs:
        return []
    pts = _dedupe_points(np.vstack([np.vstack([pr.p, pr.q]) for pr in pairs]),
                         cfg.dedupe * max(np.linalg.norm(pairs[0].p), 1e-300))
    img = g.compiled.values(pts)
    scale = max(float(np.abs(img).max()), 1e-300)
    labels = cluster(img / scale, cfg.triple_tol)
    out = []
    for j in range(labels.max() + 1):
        members = np.flatnonzero(labels == j)
        if len(members) >= 3:
            out.append({"value": img[members[0]].tolist(),
                        "points": pts[members].tolist()})
    return out


def intersection_number_via_pairs(g: PolynomialMap, r: float,
                                  cfg: SelfIntConfig | None = None) -> IntersectionReport:
    """Signed count of self-intersection pairs of ``g`` on ``S^n(r)``.

    The number is withheld (``None``) unless the pair set is complete and
    every pair is regular with no triple points.
    """
    rep = find_self_intersections(g, r, cfg)
    if rep.complete_regular:
        rep.intersection_number = int(sum(p.sign for p in rep.pairs))
        rep.reason = "complete and regular"
    elif not rep.complete:
        rep.reason = "pair count did not stabilise under doubling the start budget"
    elif rep.triple_points:
        rep.reason = "triple point detected"
    else:
        rep.reason = "irregular (non-transverse) pair"
    if rep.near_diagonal:
        log.info("%d near-diagonal solutions at r=%g", len(rep.near_diagonal), r)
    return rep


def radius_stability_check(g: PolynomialMap, radii, cfg: SelfIntConfig | None = None
                           ) -> tuple[bool, list[int | None]]:
    """Intersection numbers at each radius and whether they all agree."""
    values = [intersection_number_via_pairs(g, r, cfg).intersection_number for r in radii]
    stable = None not in values and len(set(values)) == 1
    return stable, values

