"""Floating-point evaluation of polynomial maps in batches.

The hot loops live in the compiled ``_ckernels`` extension.  When it is not
importable (or ``SPHEREIMM_PURE_PYTHON=1`` is set) the vectorised NumPy
versions below are used instead; both return identical shapes and agree to
rounding.  ``BACKEND`` names the active implementation.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass

import numpy as np

try:
    if os.environ.get("SPHEREIMM_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-Python backend forced by SPHEREIMM_PURE_PYTHON")
    from . import _ckernels
except ImportError as exc:  # pragma: no cover - depends on the build
    _ckernels = None
    if "SPHEREIMM_PURE_PYTHON" not in str(exc):
        warnings.warn(f"compiled kernels unavailable ({exc}); using NumPy fallback",
                      RuntimeWarning, stacklevel=2)

BACKEND = "cython" if _ckernels is not None else "numpy"

_CHUNK = 1 << 14


def default_threads() -> int:
    try:
        return max(1, int(os.environ.get("SPHEREIMM_THREADS", "1")))
    except ValueError:
        return 1


@dataclass(frozen=True)
class CompiledMap:
    """A polynomial map flattened to float arrays for batch evaluation."""

    n: int
    m: int
    exps: np.ndarray        # (T, n) int32, unique monomials
    term_ptr: np.ndarray    # (T+1,) int64 CSR offsets into the term arrays
    term_comp: np.ndarray   # (K,) int32 component index
    term_coef: np.ndarray   # (K,) float64
    dense: np.ndarray       # (T, m) float64, same data densely
    maxdeg: int

    @classmethod
    def from_map(cls, pmap) -> "CompiledMap":
        n, m = pmap.domain_dim, pmap.codomain_dim
        index: dict[tuple, int] = {}
        entries: list[tuple[int, int, float]] = []
        for i, comp in enumerate(pmap.components):
            for e, c in comp.terms.items():
                t = index.setdefault(e, len(index))
                entries.append((t, i, float(c)))
        T = len(index)
        exps = np.zeros((max(T, 1), n), dtype=np.int32)
        for e, t in index.items():
            exps[t] = e
        if T == 0:
            # keep one dummy monomial so kernels never see empty tables
            T = 1
        entries.sort()
        counts = np.bincount([t for t, _, _ in entries], minlength=T) if entries else np.zeros(T, int)
        ptr = np.zeros(T + 1, dtype=np.int64)
        ptr[1:] = np.cumsum(counts)
        comp_idx = np.array([i for _, i, _ in entries] or [0], dtype=np.int32)
        coef = np.array([c for _, _, c in entries] or [0.0], dtype=np.float64)
        dense = np.zeros((T, m))
        for t, i, c in entries:
            dense[t, i] += c
        return cls(n, m, exps, ptr, comp_idx, coef, dense, int(exps.max(initial=0)))

    # -- evaluation ---------------------------------------------------------
    def values(self, pts, threads: int | None = None) -> np.ndarray:
        pts = self._points(pts)
        if _ckernels is not None:
            v, _ = _ckernels.eval_map(pts, self.exps, self.term_ptr, self.term_comp,
                                      self.term_coef, self.m, self.maxdeg, False,
                                      threads or default_threads())
            return v
        return _np_eval(self, pts, False)[0]

    def values_and_jacobian(self, pts, threads: int | None = None):
        """Return ``(values (N, m), jacobian (N, m, n))``."""
        pts = self._points(pts)
        if _ckernels is not None:
            return _ckernels.eval_map(pts, self.exps, self.term_ptr, self.term_comp,
                                      self.term_coef, self.m, self.maxdeg, True,
                                      threads or default_threads())
        return _np_eval(self, pts, True)

    def kronecker_integrand(self, dirs, radius: float, scale=None,
                            threads: int | None = None) -> np.ndarray:
        """Degree density at ``radius * dirs`` (unit directions); square maps only."""
        if self.n != self.m:
            raise ValueError("the degree integrand needs a square map")
        dirs = self._points(dirs)
        scale = np.ones(self.m) if scale is None else np.ascontiguousarray(scale, dtype=np.float64)
        if _ckernels is not None:
            return _ckernels.kronecker_integrand(dirs, float(radius), self.exps, self.term_ptr,
                                                 self.term_comp, self.term_coef, scale,
                                                 self.maxdeg, threads or default_threads())
        return _np_kronecker(self, dirs, float(radius), scale)

    def _points(self, pts) -> np.ndarray:
        pts = np.ascontiguousarray(np.atleast_2d(np.asarray(pts, dtype=np.float64)))
        if pts.shape[1] != self.n:
            raise ValueError(f"points have dimension {pts.shape[1]}, map expects {self.n}")
        return pts


# -- NumPy fallback -------------------------------------------------------------

def _np_monomials(cm: CompiledMap, pts: np.ndarray, want_grad: bool):
    n, D = cm.n, cm.maxdeg
    pw = np.ones((pts.shape[0], n, D + 1))
    for e in range(1, D + 1):
        pw[:, :, e] = pw[:, :, e - 1] * pts
    cols = np.arange(n)
    factors = pw[:, cols[None, :], cm.exps]          # (N, T, n)
    mono = factors.prod(axis=2)
    if not want_grad:
        return mono, None
    lower = pw[:, cols[None, :], np.maximum(cm.exps - 1, 0)] * cm.exps
    dmono = np.empty_like(factors)
    for j in range(n):
        others = np.delete(factors, j, axis=2).prod(axis=2) if n > 1 else 1.0
        dmono[:, :, j] = lower[:, :, j] * others
    return mono, dmono


def _np_eval(cm: CompiledMap, pts: np.ndarray, want_grad: bool):
    N = pts.shape[0]
    vals = np.empty((N, cm.m))
    jac = np.empty((N, cm.m, cm.n)) if want_grad else None
    for s in range(0, N, _CHUNK):
        mono, dmono = _np_monomials(cm, pts[s:s + _CHUNK], want_grad)
        vals[s:s + _CHUNK] = mono @ cm.dense
        if want_grad:
            jac[s:s + _CHUNK] = np.einsum("ptj,ti->pij", dmono, cm.dense, optimize=True)
    return vals, jac


def _np_kronecker(cm: CompiledMap, dirs: np.ndarray, radius: float, scale: np.ndarray):
    m = cm.m
    out = np.empty(dirs.shape[0])
    for s in range(0, dirs.shape[0], _CHUNK):
        u = dirs[s:s + _CHUNK]
        f, J = _np_eval(cm, radius * u, True)
        f = f * scale
        J = J * (scale * radius)[None, :, None]
        B = np.zeros((u.shape[0], m + 1, m + 1))
        B[:, :m, :m] = J
        B[:, :m, m] = f
        B[:, m, :m] = u
        nrm = np.linalg.norm(f, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = -np.linalg.det(B) / nrm ** m
        out[s:s + _CHUNK] = np.where(nrm > 0, val, 0.0)
    return out
