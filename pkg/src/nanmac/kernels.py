"""Select the compiled kernels when built, else the pure-Python ones.

Set ``NANMAC_PURE_PYTHON=1`` to force the fallback (used by the benchmark
and by the tests that cross-check the two implementations).
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("NANMAC_PURE_PYTHON") != "1":
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py

hidden_area = _impl.hidden_area
interference_root = _impl.interference_root
hidden_integrand = _impl.hidden_integrand
bpsk_capacity = _impl.bpsk_capacity
xcorr_magnitudes = _impl.xcorr_magnitudes


def compiled_available():
    try:
        from . import _kernels  # noqa: F401
    except ImportError:
        return False
    return True
