# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled versions of the numeric hot spots in ``_kernels_py``."""
import numpy as np

from . import _kernels_py

from libc.math cimport acos, sin, sqrt, log10, pow, exp, log1p, fabs, M_PI

cdef double CLAMP_TOL = 1e-9
cdef double LN2 = 0.6931471805599453


cdef double _clamped_acos(double arg) except? -1.0:
    if arg > 1.0:
        if arg - 1.0 > CLAMP_TOL:
            raise ValueError(f"arccos argument {arg!r} outside [-1, 1]")
        arg = 1.0
    elif arg < -1.0:
        if -1.0 - arg > CLAMP_TOL:
            raise ValueError(f"arccos argument {arg!r} outside [-1, 1]")
        arg = -1.0
    return acos(arg)


cpdef double hidden_area(double r, double x, double i) except? -1.0:
    cdef double alpha, beta, area
    if r <= x - i:
        return 0.0
    if r >= x + i:
        return M_PI * i * i
    if r <= i - x:
        return M_PI * (i * i - x * x)
    alpha = _clamped_acos((x * x + r * r - i * i) / (2.0 * r * x))
    beta = M_PI - _clamped_acos((i * i + r * r - x * x) / (2.0 * r * i))
    area = beta * i * i + r * x * fabs(sin(alpha)) - alpha * x * x
    return area if area > 0.0 else 0.0


cpdef double interference_root(double r, double eirp_dbw, double intercept,
                               double slope, double noise_w, double sinr_lin):
    cdef double signal_dbw = eirp_dbw - (intercept + slope * log10(r))
    cdef double budget = pow(10.0, signal_dbw / 10.0) / sinr_lin - noise_w
    cdef double loss
    if budget <= 0.0:
        return -1.0
    loss = eirp_dbw - 10.0 * log10(budget)
    return pow(10.0, (loss - intercept) / slope)


cpdef double hidden_integrand(double r, double cell_radius, double x, double eirp_dbw,
                              double intercept, double slope, double noise_w,
                              double sinr_lin) except? -1.0:
    cdef double rr, y, i
    if r <= 0.0:
        return 0.0
    rr = r if r >= 1.0 else 1.0
    y = interference_root(rr, eirp_dbw, intercept, slope, noise_w, sinr_lin)
    if y < 0.0:
        return 0.0
    i = y if y < cell_radius else cell_radius
    return hidden_area(r, x, i) * 2.0 * r / (cell_radius * cell_radius)


cdef inline double _softplus(double v):
    # log(1 + e^v) without overflow
    if v > 0.0:
        return v + log1p(exp(-v))
    return log1p(exp(v))


cpdef double bpsk_capacity(double snr, const double[:] nodes, const double[:] weights):
    cdef Py_ssize_t k, n = nodes.shape[0]
    cdef double acc = 0.0, root = sqrt(snr), z
    for k in range(n):
        z = nodes[k] * 1.4142135623730951
        acc += weights[k] * _softplus(-2.0 * snr - 2.0 * root * z)
    return 1.0 - acc / (sqrt(M_PI) * LN2)


# above this length the O(N log N) FFT path beats the direct sum
cdef Py_ssize_t DIRECT_MAX = 128


def xcorr_magnitudes(a, b):
    if len(a) > DIRECT_MAX:
        return _kernels_py.xcorr_magnitudes(a, b)
    cdef const double complex[:] av = np.ascontiguousarray(a, dtype=np.complex128)
    cdef const double complex[:] bv = np.ascontiguousarray(b, dtype=np.complex128)
    cdef Py_ssize_t n = av.shape[0], s, m, j
    cdef double complex acc, bb
    out = np.empty(n, dtype=np.float64)
    cdef double[:] ov = out
    for s in range(n):
        acc = 0.0
        for m in range(n):
            j = m + s
            if j >= n:
                j -= n
            bb = bv[j]
            acc = acc + av[m] * (bb.real - 1j * bb.imag)
        ov[s] = sqrt(acc.real * acc.real + acc.imag * acc.imag)
    return out
