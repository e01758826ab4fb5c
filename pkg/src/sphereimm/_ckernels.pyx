# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batch kernels: polynomial-map values, Jacobians and the degree integrand.

Maps arrive as a monomial table ``exps`` (T x n, int32) plus a term list
sorted by monomial: ``term_ptr`` (T+1, CSR offsets), ``term_comp`` and
``term_coef``.  Every output row depends on its own input row only, so the
point loop is parallel without changing results.
"""

import numpy as np
cimport numpy as cnp
from cython.parallel cimport prange, parallel, threadid
from libc.stdlib cimport malloc, free
from libc.math cimport fabs, sqrt, pow

cnp.import_array()


cdef inline void _monomials(const double* x, Py_ssize_t n, Py_ssize_t T,
                            const int* exps, int maxdeg, double* pw,
                            double* mono, double* dmono, double* pre,
                            bint want_grad) noexcept nogil:
    cdef Py_ssize_t j, t, e
    cdef double acc, f
    cdef const int* et
    for j in range(n):
        pw[j * (maxdeg + 1)] = 1.0
        for e in range(1, maxdeg + 1):
            pw[j * (maxdeg + 1) + e] = pw[j * (maxdeg + 1) + e - 1] * x[j]
    for t in range(T):
        et = exps + t * n
        # pre[j] = product of factors before j
        acc = 1.0
        for j in range(n):
            pre[j] = acc
            acc = acc * pw[j * (maxdeg + 1) + et[j]]
        mono[t] = acc
        if want_grad:
            acc = 1.0
            j = n - 1
            while j >= 0:
                if et[j] > 0:
                    dmono[t * n + j] = et[j] * pw[j * (maxdeg + 1) + et[j] - 1] * pre[j] * acc
                else:
                    dmono[t * n + j] = 0.0
                acc = acc * pw[j * (maxdeg + 1) + et[j]]
                j -= 1


cdef inline void _accumulate(Py_ssize_t n, Py_ssize_t m, Py_ssize_t T,
                             const long* ptr, const int* comp, const double* coef,
                             const double* mono, const double* dmono,
                             double* val, double* jac, bint want_grad) noexcept nogil:
    cdef Py_ssize_t t, k, j, i
    cdef double c
    for i in range(m):
        val[i] = 0.0
    if want_grad:
        for i in range(m * n):
            jac[i] = 0.0
    for t in range(T):
        for k in range(ptr[t], ptr[t + 1]):
            i = comp[k]
            c = coef[k]
            val[i] += c * mono[t]
            if want_grad:
                for j in range(n):
                    jac[i * n + j] += c * dmono[t * n + j]


cdef inline double _det_inplace(double* a, Py_ssize_t k) noexcept nogil:
    """Determinant of the k x k row-major matrix ``a`` by partial pivoting (destroys ``a``)."""
    cdef Py_ssize_t i, j, r, piv
    cdef double det = 1.0, best, tmp, f
    for j in range(k):
        piv = j
        best = fabs(a[j * k + j])
        for i in range(j + 1, k):
            if fabs(a[i * k + j]) > best:
                best = fabs(a[i * k + j])
                piv = i
        if best == 0.0:
            return 0.0
        if piv != j:
            for r in range(k):
                tmp = a[j * k + r]
                a[j * k + r] = a[piv * k + r]
                a[piv * k + r] = tmp
            det = -det
        det *= a[j * k + j]
        for i in range(j + 1, k):
            f = a[i * k + j] / a[j * k + j]
            if f != 0.0:
                for r in range(j + 1, k):
                    a[i * k + r] -= f * a[j * k + r]
    return det


def eval_map(double[:, ::1] pts, int[:, ::1] exps, long[::1] ptr, int[::1] comp,
             double[::1] coef, Py_ssize_t m, int maxdeg, bint want_grad, int nthreads=1):
    cdef Py_ssize_t N = pts.shape[0], n = pts.shape[1], T = exps.shape[0]
    cdef Py_ssize_t p
    vals_np = np.zeros((N, m), dtype=np.float64)
    if want_grad:
        jac_np = np.zeros((N, m, n), dtype=np.float64)
    else:
        jac_np = np.zeros((1, 1, 1), dtype=np.float64)
    cdef double[:, ::1] vals = vals_np
    cdef double[:, :, ::1] jac = jac_np
    cdef double *pw
    cdef double *mono
    cdef double *dmono
    cdef double *pre
    if N == 0:
        return vals_np, (jac_np if want_grad else None)
    with nogil, parallel(num_threads=nthreads):
        pw = <double*> malloc(n * (maxdeg + 1) * sizeof(double))
        mono = <double*> malloc((T + 1) * sizeof(double))
        dmono = <double*> malloc((T * n + 1) * sizeof(double))
        pre = <double*> malloc((n + 1) * sizeof(double))
        for p in prange(N, schedule='static'):
            _monomials(&pts[p, 0], n, T, &exps[0, 0], maxdeg, pw, mono, dmono, pre, want_grad)
            if want_grad:
                _accumulate(n, m, T, &ptr[0], &comp[0], &coef[0], mono, dmono,
                            &vals[p, 0], &jac[p, 0, 0], True)
            else:
                _accumulate(n, m, T, &ptr[0], &comp[0], &coef[0], mono, dmono,
                            &vals[p, 0], &jac[0, 0, 0], False)
        free(pw)
        free(mono)
        free(dmono)
        free(pre)
    return vals_np, (jac_np if want_grad else None)


def kronecker_integrand(double[:, ::1] dirs, double radius, int[:, ::1] exps, long[::1] ptr,
                        int[::1] comp, double[::1] coef, double[::1] scale, int maxdeg,
                        int nthreads=1):
    """Pullback density ``u . adj(DH) H / |H|^m`` at ``radius * u`` for unit ``u``.

    ``scale`` rescales the components (positive factors leave the degree
    unchanged).  The adjugate contraction is evaluated as minus the bordered
    determinant ``det [[DH, H], [u^T, 0]]``.
    """
    cdef Py_ssize_t N = dirs.shape[0], m = dirs.shape[1], T = exps.shape[0]
    cdef Py_ssize_t p, i, j, k = m + 1
    out_np = np.zeros(N, dtype=np.float64)
    cdef double[::1] out = out_np
    cdef double *pw
    cdef double *mono
    cdef double *dmono
    cdef double *pre
    cdef double *x
    cdef double *val
    cdef double *jac
    cdef double *bord
    cdef double nrm
    if N == 0:
        return out_np
    with nogil, parallel(num_threads=nthreads):
        pw = <double*> malloc(m * (maxdeg + 1) * sizeof(double))
        mono = <double*> malloc((T + 1) * sizeof(double))
        dmono = <double*> malloc((T * m + 1) * sizeof(double))
        pre = <double*> malloc((m + 1) * sizeof(double))
        x = <double*> malloc(m * sizeof(double))
        val = <double*> malloc(m * sizeof(double))
        jac = <double*> malloc(m * m * sizeof(double))
        bord = <double*> malloc(k * k * sizeof(double))
        for p in prange(N, schedule='static'):
            for i in range(m):
                x[i] = radius * dirs[p, i]
            _monomials(x, m, T, &exps[0, 0], maxdeg, pw, mono, dmono, pre, True)
            _accumulate(m, m, T, &ptr[0], &comp[0], &coef[0], mono, dmono, val, jac, True)
            nrm = 0.0
            for i in range(m):
                val[i] = val[i] * scale[i]
                nrm = nrm + val[i] * val[i]
                for j in range(m):
                    bord[i * k + j] = jac[i * m + j] * scale[i] * radius
                bord[i * k + m] = val[i]
                bord[m * k + i] = dirs[p, i]
            bord[m * k + m] = 0.0
            nrm = sqrt(nrm)
            if nrm == 0.0:
                out[p] = 0.0
            else:
                out[p] = -_det_inplace(bord, k) / pow(nrm, <double> m)
        free(pw)
        free(mono)
        free(dmono)
        free(pre)
        free(x)
        free(val)
        free(jac)
        free(bord)
    return out_np
