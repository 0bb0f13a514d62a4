"""Numpy fallback for the compiled kernels.

Every operation mirrors the compiled loop order and uses the same explicit
real arithmetic, so the two backends produce identical bits.
"""

import numpy as np


def cmatmul(a, b):
    a = np.ascontiguousarray(a, dtype=np.complex128)
    b = np.ascontiguousarray(b, dtype=np.complex128)
    n, k = a.shape
    m = b.shape[1]
    ar, ai = a.real.copy(), a.imag.copy()
    br, bi = b.real.copy(), b.imag.copy()
    cr = np.zeros((n, m))
    ci = np.zeros((n, m))
    for l in range(k):
        xr = ar[:, l, None]
        xi = ai[:, l, None]
        yr = br[None, l, :]
        yi = bi[None, l, :]
        cr = cr + (xr * yr - xi * yi)
        ci = ci + (xr * yi + xi * yr)
    return _pack(cr, ci)


def poly_eval(coeffs, exponents, points):
    coeffs = np.ascontiguousarray(coeffs, dtype=np.complex128)
    pts = np.ascontiguousarray(points, dtype=np.complex128)
    exps = np.asarray(exponents, dtype=np.int64)
    npts = pts.shape[0]
    _, rows, cols = coeffs.shape
    xr, xi = pts.real.copy(), pts.imag.copy()
    wr = np.ones(npts)
    wi = np.zeros(npts)
    accr = np.zeros((npts, rows, cols))
    acci = np.zeros((npts, rows, cols))
    e = 0
    for t, target in enumerate(exps):
        while e < target:
            tr = wr * xr - wi * xi
            wi = wr * xi + wi * xr
            wr = tr
            e += 1
        cr = coeffs[t].real[None, :, :]
        ci = coeffs[t].imag[None, :, :]
        pr = wr[:, None, None]
        pi = wi[:, None, None]
        accr = accr + (cr * pr - ci * pi)
        acci = acci + (cr * pi + ci * pr)
    return _pack(accr, acci)


def _pack(re, im):
    # avoid re + 1j*im: that multiplication can flip signed zeros
    out = np.empty(re.shape, dtype=np.complex128)
    out.real = re
    out.imag = im
    return out
