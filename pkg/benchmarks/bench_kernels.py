"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each kernel is called with the same arguments through both modules; the
report gives the best per-call time and the speedup.  A full hidden-node
integral is timed as well, once per backend, by reloading the package
with NANMAC_PURE_PYTHON set.
"""
import argparse
import importlib
import os
import sys
import timeit

import numpy as np

from nanmac import _kernels_py, kernels
from nanmac.radiolink import DEFAULT_RADIO, carrier_sense_range_m, noise_power_w


def cases():
    r = DEFAULT_RADIO
    x = carrier_sense_range_m(r)
    link = (r.eirp_dbw, r.pathloss_intercept_db, r.pathloss_slope_db_per_decade,
            noise_power_w(r), r.sinr_threshold_linear)
    nodes, weights = np.polynomial.hermite.hermgauss(64)
    seq = np.exp(-1j * np.pi * 5 * np.arange(263) * np.arange(1, 264) / 263)
    short = seq[:53]
    return [
        ("hidden_area", "hidden_area", (900.0, x, 1150.0), 20000),
        ("interference_root", "interference_root", (800.0,) + link, 20000),
        ("hidden_integrand", "hidden_integrand", (800.0, 1500.0, x) + link, 20000),
        ("bpsk_capacity", "bpsk_capacity", (1.0, nodes, weights), 5000),
        ("xcorr N=53", "xcorr_magnitudes", (short, short), 5000),
        ("xcorr N=263", "xcorr_magnitudes", (seq, seq), 2000),
    ]


def best(fn, args, number, repeat):
    return min(timeit.repeat(lambda: fn(*args), number=number, repeat=repeat)) / number


def integral_time(pure, repeat):
    if pure:
        os.environ["NANMAC_PURE_PYTHON"] = "1"
    else:
        os.environ.pop("NANMAC_PURE_PYTHON", None)
    for name in [m for m in sys.modules if m.startswith("nanmac")]:
        del sys.modules[name]
    hn = importlib.import_module("nanmac.hiddennode")
    q = hn.HiddenNodeQuery(1500.0, 1e-3)
    return min(timeit.repeat(lambda: hn.mean_hidden_nodes(q), number=1, repeat=repeat))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not kernels.compiled_available():
        print("compiled kernels are not built; run `pip install -e . --no-build-isolation`")
        return 1
    compiled = importlib.import_module("nanmac._kernels")
    print(f"{'kernel':<20}{'cython us':>12}{'python us':>12}{'speedup':>10}")
    for label, name, call_args, number in cases():
        tc = best(getattr(compiled, name), call_args, number, args.repeat)
        tp = best(getattr(_kernels_py, name), call_args, number, args.repeat)
        print(f"{label:<20}{tc * 1e6:12.3f}{tp * 1e6:12.3f}{tp / tc:10.1f}")
    tc = integral_time(False, args.repeat)
    tp = integral_time(True, args.repeat)
    print(f"{'N_hidden(1500 m)':<20}{tc * 1e6:12.1f}{tp * 1e6:12.1f}{tp / tc:10.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
