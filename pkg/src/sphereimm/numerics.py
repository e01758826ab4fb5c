"""Numerical plumbing shared by the solvers: sampling, batched Newton, clustering."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree
from scipy.special import ndtri
from scipy.stats import qmc


def sphere_directions(dim: int, count: int, seed: int) -> np.ndarray:
    """Quasi-uniform unit vectors in ``R^dim`` from a scrambled Sobol sequence.

    ``count`` is rounded up to a power of two.
    """
    m = max(1, int(np.ceil(np.log2(max(count, 2)))))
    u = qmc.Sobol(dim, scramble=True, seed=seed).random_base2(m)
    z = ndtri(np.clip(u, 1e-15, 1 - 1e-15))
    nrm = np.linalg.norm(z, axis=1, keepdims=True)
    nrm[nrm == 0] = 1.0
    return z / nrm


def ball_points(dim: int, count: int, radius: float, seed: int) -> np.ndarray:
    """Seeded points uniform in the open ball of the given radius."""
    rng = np.random.default_rng(seed)
    d = rng.normal(size=(count, dim))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    return d * radius * rng.random(count)[:, None] ** (1.0 / dim)


@dataclass
class NewtonResult:
    x: np.ndarray
    converged: np.ndarray
    residual: np.ndarray
    iterations: int


def _solve(J, F):
    try:
        return np.linalg.solve(J, -F[..., None])[..., 0]
    except np.linalg.LinAlgError:
        return -np.einsum("nij,nj->ni", np.linalg.pinv(J), F)


def newton_batch(system, x0, tol: float = 1e-12, max_iter: int = 200,
                 bound: float | None = None, max_halvings: int = 12) -> NewtonResult:
    """Damped Newton iterations run in lock step from every row of ``x0``.

    ``system(X)`` returns ``(F, J)`` with shapes ``(N, m)`` and ``(N, m, m)``.
    A step is halved until the residual norm decreases; starts that stall
    or leave the ``bound`` ball are abandoned.
    """
    x = np.array(x0, dtype=float, copy=True)
    N = x.shape[0]
    converged = np.zeros(N, dtype=bool)
    alive = np.ones(N, dtype=bool)
    resid = np.full(N, np.inf)
    it = 0
    for it in range(max_iter):
        idx = np.flatnonzero(alive & ~converged)
        if idx.size == 0:
            break
        F, J = system(x[idx])
        nf = np.linalg.norm(F, axis=1)
        resid[idx] = nf
        done = nf < tol
        converged[idx[done]] = True
        idx, F, J, nf = idx[~done], F[~done], J[~done], nf[~done]
        if idx.size == 0:
            break
        dx = _solve(J, F)
        bad = ~np.all(np.isfinite(dx), axis=1)
        dx[bad] = 0.0
        alive[idx[bad]] = False
        lam = np.ones(idx.size)
        pending = np.ones(idx.size, dtype=bool)
        trial = x[idx] + dx
        for _ in range(max_halvings):
            Ft, _ = system(trial[pending])
            ok = np.linalg.norm(Ft, axis=1) < nf[pending]
            sub = np.flatnonzero(pending)
            pending[sub[ok]] = False
            if not pending.any():
                break
            lam[pending] *= 0.5
            trial[pending] = x[idx[pending]] + lam[pending, None] * dx[pending]
        # no decrease even with the smallest step: the start has stalled
        alive[idx[pending]] = False
        x[idx] = trial
        if bound is not None:
            out = np.linalg.norm(x[idx], axis=1) > bound
            alive[idx[out]] = False
    else:
        idx = np.flatnonzero(alive & ~converged)
        if idx.size:
            F, _ = system(x[idx])
            resid[idx] = np.linalg.norm(F, axis=1)
            converged[idx[resid[idx] < tol]] = True
    return NewtonResult(x, converged, resid, it + 1)


def cluster(points: np.ndarray, radius: float) -> np.ndarray:
    """Label points so that any two within ``radius`` share a label (single linkage)."""
    points = np.asarray(points, dtype=float)
    n = len(points)
    if n == 0:
        return np.zeros(0, dtype=int)
    pairs = cKDTree(points).query_pairs(radius, output_type="ndarray")
    graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])) if len(pairs)
                       else (np.zeros(0), (np.zeros(0, int), np.zeros(0, int))),
                       shape=(n, n))
    _, labels = connected_components(graph, directed=False)
    # relabel in order of first appearance for determinism
    _, first = np.unique(labels, return_index=True)
    order = np.argsort(first)
    remap = np.empty_like(order)
    remap[order] = np.arange(len(order))
    return remap[labels]


def sphere_project(v: np.ndarray, radius: float) -> np.ndarray:
    return radius * v / np.linalg.norm(v, axis=-1, keepdims=True)


def minimize_on_sphere(residuals, x0: np.ndarray, radius: float, max_iter: int = 60):
    """Levenberg-Marquardt on ``|R(x)|^2`` over the sphere ``|x| = radius``.

    ``residuals(X)`` returns ``(R (N, k), JR (N, k, d))`` for a batch.  The
    sphere is handled by the parametrisation ``x = radius * v / |v|``, so
    every iterate stays on it.  Returns the final points.
    """
    v = sphere_project(np.array(x0, dtype=float), 1.0)
    mu = np.full(len(v), 1e-3)
    d = v.shape[1]
    eye = np.eye(d)
    for _ in range(max_iter):
        x = radius * v
        R, JR = residuals(x)
        cost = np.einsum("nk,nk->n", R, R)
        # chain rule: dx/dv = radius (I - v v^T) for |v| = 1
        P = radius * (eye[None] - v[:, :, None] * v[:, None, :])
        A = JR @ P
        g = np.einsum("nkd,nk->nd", A, R)
        H = np.einsum("nkd,nke->nde", A, A)
        improved = np.zeros(len(v), dtype=bool)
        for _ in range(8):
            step = _solve(H + mu[:, None, None] * (np.einsum("nii->ni", H).max(axis=1)[:, None, None] + 1e-300) * eye[None], g)
            vt = sphere_project(v + step, 1.0)
            Rt, _ = residuals(radius * vt)
            ct = np.einsum("nk,nk->n", Rt, Rt)
            ok = (ct < cost) & ~improved
            v[ok] = vt[ok]
            mu[ok] = np.maximum(mu[ok] / 3, 1e-12)
            improved |= ok
            mu[~improved] *= 4
            if improved.all():
                break
        if not improved.any() or np.all(cost < 1e-40):
            break
    return radius * v
