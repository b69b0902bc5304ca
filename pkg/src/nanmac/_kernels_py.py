"""Pure-Python implementations of the numeric hot spots.

Mirrors ``_kernels.pyx`` function for function; ``nanmac.kernels`` picks the
compiled module when it is importable and falls back to this one otherwise.
"""
import math

import numpy as np

CLAMP_TOL = 1e-9
LN2 = math.log(2.0)


def _clamped_acos(arg):
    if arg > 1.0:
        if arg - 1.0 > CLAMP_TOL:
            raise ValueError(f"arccos argument {arg!r} outside [-1, 1]")
        arg = 1.0
    elif arg < -1.0:
        if -1.0 - arg > CLAMP_TOL:
            raise ValueError(f"arccos argument {arg!r} outside [-1, 1]")
        arg = -1.0
    return math.acos(arg)


def hidden_area(r, x, i):
    """Area inside the disk of radius ``i`` at the origin and outside the
    disk of radius ``x`` centred at distance ``r``."""
    if r <= x - i:
        return 0.0
    if r >= x + i:
        return math.pi * i * i
    if r <= i - x:
        return math.pi * (i * i - x * x)
    alpha = _clamped_acos((x * x + r * r - i * i) / (2.0 * r * x))
    beta = math.pi - _clamped_acos((i * i + r * r - x * x) / (2.0 * r * i))
    area = beta * i * i + r * x * abs(math.sin(alpha)) - alpha * x * x
    return area if area > 0.0 else 0.0


def interference_root(r, eirp_dbw, intercept, slope, noise_w, sinr_lin):
    """Unclamped single-interferer distance for a meter at ``r``.

    Returns -1.0 when noise alone already breaks the SINR threshold.
    """
    signal_dbw = eirp_dbw - (intercept + slope * math.log10(r))
    budget = 10.0 ** (signal_dbw / 10.0) / sinr_lin - noise_w
    if budget <= 0.0:
        return -1.0
    loss = eirp_dbw - 10.0 * math.log10(budget)
    return 10.0 ** ((loss - intercept) / slope)


def hidden_integrand(r, cell_radius, x, eirp_dbw, intercept, slope, noise_w, sinr_lin):
    """A(r) * f(r) for the mean hidden-node integral (density factored out)."""
    if r <= 0.0:
        return 0.0
    rr = r if r >= 1.0 else 1.0
    y = interference_root(rr, eirp_dbw, intercept, slope, noise_w, sinr_lin)
    if y < 0.0:
        return 0.0
    i = y if y < cell_radius else cell_radius
    return hidden_area(r, x, i) * 2.0 * r / (cell_radius * cell_radius)


def bpsk_capacity(snr, nodes, weights):
    """1 - E[log2(1 + exp(-2 snr - 2 sqrt(snr) Z))] by Gauss-Hermite."""
    z = nodes * math.sqrt(2.0)
    vals = np.logaddexp(0.0, -2.0 * snr - 2.0 * math.sqrt(snr) * z)
    return 1.0 - float(np.dot(weights, vals)) / (math.sqrt(math.pi) * LN2)


def xcorr_magnitudes(a, b):
    """|sum_n a[n] conj(b[(n+s) mod N])| for every shift s."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    # circular cross-correlation via the convolution theorem
    corr = np.fft.ifft(np.conj(np.fft.fft(b)) * np.fft.fft(a))
    # ifft gives sum_n a[n+s] conj(b[n]); reindex to sum_n a[n] conj(b[n+s])
    n = len(a)
    idx = (-np.arange(n)) % n
    return np.abs(corr[idx])
