"""Zadoff-Chu sequences and the probe-ACK detector built on them."""
from dataclasses import dataclass
from math import gcd

import numpy as np

from . import kernels
from .errors import EmptyCodebook, InvalidLength, InvalidRoot, LengthMismatch


@dataclass(frozen=True, eq=False)
class ZcSequence:
    root_u: int
    length_n: int
    samples: np.ndarray


def generate(root_u, length_n):
    if length_n < 3 or length_n % 2 == 0:
        raise InvalidLength(f"length {length_n} must be odd and >= 3")
    if not 0 < root_u < length_n or gcd(root_u, length_n) != 1:
        raise InvalidRoot(f"root {root_u} invalid for length {length_n}")
    n = np.arange(length_n, dtype=np.int64)
    # u n (n+1) / 2 reduced mod N in integers keeps the phase exact for large N
    k = (root_u * (n * (n + 1) // 2)) % length_n
    samples = np.exp(-2j * np.pi * k / length_n)
    samples.setflags(write=False)
    return ZcSequence(root_u, length_n, samples)


def valid_roots(length_n):
    return [u for u in range(1, length_n) if gcd(u, length_n) == 1]


def is_prime(n):
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    f = 3
    while f * f <= n:
        if n % f == 0:
            return False
        f += 2
    return True


def next_prime(n):
    """Smallest odd prime >= n."""
    n = max(n, 3)
    while not is_prime(n):
        n += 1
    return n


def _samples(x):
    return x.samples if isinstance(x, ZcSequence) else np.asarray(x, dtype=complex)


def cyclic_xcorr(a, b, shift):
    sa, sb = _samples(a), _samples(b)
    if len(sa) != len(sb):
        raise LengthMismatch(f"{len(sa)} != {len(sb)}")
    n = len(sa)
    if not 0 <= shift < n:
        raise ValueError(f"shift {shift} outside [0, {n})")
    return complex(np.sum(sa * np.conj(np.roll(sb, -shift))))


def superpose(codebook, indices, amplitudes=None):
    """Sample-wise sum of the selected sequences, each scaled by its amplitude."""
    if not codebook:
        raise EmptyCodebook("codebook is empty")
    out = np.zeros(codebook[0].length_n, dtype=complex)
    for k, idx in enumerate(indices):
        amp = 1.0 if amplitudes is None else amplitudes[k]
        out += amp * codebook[idx].samples
    return out


def add_noise(received, noise_sigma, rng):
    if noise_sigma <= 0:
        return received
    n = len(received)
    # circular complex Gaussian: total variance sigma^2 split across I and Q
    scale = noise_sigma / np.sqrt(2.0)
    return received + scale * (rng.standard_normal(n) + 1j * rng.standard_normal(n))


def detect_responders(received, codebook, noise_sigma=0.0, threshold=0.5, rng=None,
                      statistic="peak"):
    """Indices whose correlation with ``received`` reaches threshold*N.

    ``statistic="peak"`` takes the maximum over all cyclic shifts;
    ``"aligned"`` uses shift 0 only, which is valid when responders are
    slot-synchronised. When ``noise_sigma`` > 0 and ``rng`` is given, noise is
    added to the received samples first.
    """
    if statistic not in ("peak", "aligned"):
        raise ValueError(f"unknown statistic {statistic!r}")
    if not codebook:
        raise EmptyCodebook("codebook is empty")
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    rx = np.asarray(received, dtype=complex)
    n = len(rx)
    for seq in codebook:
        if seq.length_n != n:
            raise LengthMismatch(f"codebook length {seq.length_n} != received length {n}")
    if rng is not None:
        rx = add_noise(rx, noise_sigma, rng)
    level = threshold * n
    found = set()
    if not np.any(rx):
        return found
    if statistic == "aligned":
        book = np.stack([seq.samples for seq in codebook])
        mags = np.abs(np.conj(book) @ rx)
        return {int(i) for i in np.flatnonzero(mags >= level)}
    for idx, seq in enumerate(codebook):
        if kernels.xcorr_magnitudes(rx, seq.samples).max() >= level:
            found.add(idx)
    return found
