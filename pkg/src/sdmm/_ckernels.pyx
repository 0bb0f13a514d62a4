# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot loops: deterministic complex matmul and share evaluation.

Complex values are handled as interleaved (re, im) doubles and multiplied
with explicit real arithmetic so results agree bit-for-bit with
:mod:`sdmm._kernels_py`.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


def cmatmul(a, b):
    a = np.ascontiguousarray(a, dtype=np.complex128)
    b = np.ascontiguousarray(b, dtype=np.complex128)
    cdef Py_ssize_t n = a.shape[0], k = a.shape[1], m = b.shape[1]
    out = np.zeros((n, m), dtype=np.complex128)
    cdef const double[:, ::1] av = a.view(np.float64)
    cdef const double[:, ::1] bv = b.view(np.float64)
    cdef double[:, ::1] cv = out.view(np.float64)
    cdef Py_ssize_t i, j, l
    cdef double ar, ai, br, bi
    with nogil:
        for i in range(n):
            for l in range(k):
                ar = av[i, 2 * l]
                ai = av[i, 2 * l + 1]
                for j in range(m):
                    br = bv[l, 2 * j]
                    bi = bv[l, 2 * j + 1]
                    cv[i, 2 * j] = cv[i, 2 * j] + (ar * br - ai * bi)
                    cv[i, 2 * j + 1] = cv[i, 2 * j + 1] + (ar * bi + ai * br)
    return out


def poly_eval(coeffs, exponents, points):
    coeffs = np.ascontiguousarray(coeffs, dtype=np.complex128)
    pts = np.ascontiguousarray(points, dtype=np.complex128)
    exps = np.ascontiguousarray(exponents, dtype=np.int64)
    cdef Py_ssize_t nterms = coeffs.shape[0]
    cdef Py_ssize_t rows = coeffs.shape[1], cols = coeffs.shape[2]
    cdef Py_ssize_t npts = pts.shape[0]
    cdef Py_ssize_t size = rows * cols
    out = np.zeros((npts, rows, cols), dtype=np.complex128)
    cdef const double[::1] cf = coeffs.reshape(-1).view(np.float64)
    cdef const double[::1] pv = pts.view(np.float64)
    cdef double[::1] ov = out.reshape(-1).view(np.float64)
    cdef const cnp.int64_t[::1] ev = exps
    cdef Py_ssize_t s, t, q, base_c, base_o
    cdef cnp.int64_t e
    cdef double wr, wi, xr, xi, tr, cr, ci
    with nogil:
        for s in range(npts):
            xr = pv[2 * s]
            xi = pv[2 * s + 1]
            wr = 1.0
            wi = 0.0
            e = 0
            base_o = 2 * s * size
            for t in range(nterms):
                while e < ev[t]:
                    tr = wr * xr - wi * xi
                    wi = wr * xi + wi * xr
                    wr = tr
                    e += 1
                base_c = 2 * t * size
                for q in range(size):
                    cr = cf[base_c + 2 * q]
                    ci = cf[base_c + 2 * q + 1]
                    ov[base_o + 2 * q] = ov[base_o + 2 * q] + (cr * wr - ci * wi)
                    ov[base_o + 2 * q + 1] = ov[base_o + 2 * q + 1] + (cr * wi + ci * wr)
    return out
