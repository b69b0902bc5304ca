"""Acceptance criteria, one test each; every test logs a PASS/FAIL line.

Values are compared against closed forms or against the sampling oracles in
``oracles.py``, which share no code with the library.
"""
import json
import math
import time

import numpy as np
import pytest

from nanmac import hiddennode as hn
from nanmac import radiolink as rl
from nanmac import zadoffchu as zc
from nanmac.cli import main
from nanmac.mac.frames import DcfParams, FrameSizes

import oracles
from acceptance_log import record
from simhelp import ring, run, saturated

R = rl.DEFAULT_RADIO
SEEDS = range(5)


def air(size_bytes, rate=100_000):
    return math.ceil(size_bytes * 8 * 1e9 / rate)


def test_c01_rx_power_at_1200m():
    p = rl.rx_power_dbw(R, 1200.0)
    ok = abs(p + 120.78) <= 0.05
    record(1, "received power at 1200 m", ok, f"{p:.4f} dBW (target -120.78 +- 0.05)")
    assert ok


def test_c02_rate_at_4500m():
    rate = rl.achievable_rate_bps(R, 4500.0)
    mc = oracles.mc_rate(4500.0)
    rel = abs(rate - mc) / mc
    ok = rate > 1e5 and rel < 0.10
    record(2, "rate at 4500 m", ok, f"{rate:.6g} bps, oracle {mc:.6g} bps, rel diff {rel:.2e}")
    assert ok


def test_c03_bpsk_capacity_at_unit_snr():
    c = rl.bpsk_capacity_bits_per_use(1.0)
    mc = oracles.mc_bpsk_capacity(1.0)
    ok = abs(c - mc) < 1e-3 and abs(c - 0.486) < 1e-3
    record(3, "BPSK capacity at SNR 1", ok, f"{c:.6f}, oracle {mc:.6f}")
    assert ok


def test_c04_carrier_sense_range():
    x = rl.carrier_sense_range_m(R)
    residual = abs(rl.rx_power_dbw(R, x) - R.carrier_sense_threshold_dbw)
    bisect = oracles.cs_range()
    ok = abs(x - 1985.7) <= 1.0 and residual < 1e-9 and abs(x - bisect) < 1e-6
    record(4, "carrier-sense range", ok,
           f"{x:.4f} m (bisection {bisect:.4f}), residual {residual:.1e} dB")
    assert ok


def test_c05_hidden_node_curve():
    density = 1e-3
    low = [hn.mean_hidden_nodes(hn.HiddenNodeQuery(float(r), density))
           for r in np.linspace(200.0, 990.0, 80)]
    grid = np.linspace(1000.0, 2000.0, 20)
    curve = [hn.mean_hidden_nodes(hn.HiddenNodeQuery(float(r), density)) for r in grid]
    zero_ok = all(v == 0.0 for v in low)
    mono_ok = all(b > a for a, b in zip(curve, curve[1:]))
    rels = {}
    for r in (1100.0, 1200.0, 1500.0):
        mine = hn.mean_hidden_nodes(hn.HiddenNodeQuery(r, density))
        mc = oracles.mc_mean_hidden(r, density)
        rels[r] = abs(mine - mc) / mc
    mc_ok = all(v < 0.02 for v in rels.values())
    ok = zero_ok and mono_ok and mc_ok
    record(5, "mean hidden-node curve", ok,
           f"zero below 990 m: {zero_ok}, strictly increasing: {mono_ok}, oracle rel diff "
           + ", ".join(f"{int(r)} m {v:.2e}" for r, v in rels.items()))
    assert ok


def _fft_xcorr(a, b):
    # circular correlation sum_k a[k] conj(b[k+s]) via FFT, independent of the library kernels
    return np.abs(np.conj(np.fft.ifft(np.conj(np.fft.fft(a)) * np.fft.fft(b))) * 1.0)


def test_c06_zadoff_chu_correlations():
    rng = np.random.default_rng(2024)
    primes = [p for p in range(3, 2000) if zc.is_prime(p)]
    worst_auto, worst_cross = 0.0, 0.0
    for n in rng.choice(primes, size=20, replace=False):
        n = int(n)
        u, v = (int(x) for x in rng.choice(np.arange(1, n), size=2, replace=False))
        a, b = zc.generate(u, n), zc.generate(v, n)
        auto = _fft_xcorr(a.samples, a.samples)
        lib_auto = max(abs(zc.cyclic_xcorr(a, a, s)) for s in range(1, n))
        worst_auto = max(worst_auto, auto[1:].max(), lib_auto)
        cross = np.array([abs(zc.cyclic_xcorr(a, b, s)) for s in range(n)])
        worst_cross = max(worst_cross, np.abs(cross - math.sqrt(n)).max(),
                          np.abs(_fft_xcorr(a.samples, b.samples) - math.sqrt(n)).max())
    book = [zc.generate(u, 11) for u in zc.valid_roots(11)]
    exact = all(zc.detect_responders(zc.superpose(book, [i]), book, statistic=stat) == {i}
                for i in range(len(book)) for stat in ("peak", "aligned"))
    ok = worst_auto < 1e-9 and worst_cross < 1e-9 and exact
    record(6, "Zadoff-Chu correlations", ok,
           f"worst off-peak auto {worst_auto:.1e}, worst cross deviation {worst_cross:.1e}, "
           f"N=11 single-responder detection exact: {exact}")
    assert ok


def test_c07_qdcf_reduces_to_dcf():
    same = []
    for seed in SEEDS:
        kw = dict(seed=seed, meters=25, duration="5s", traffic=[saturated()], record_trace=True)
        a = run("dcf", **kw)[1]
        b = run("qdcf", qdcf={"contention_factor_q": 1.0, "prohibit_time_ns": 0}, **kw)[1]
        rows_a = [(f.src, f.enqueue_ns, f.outcome, f.done_ns, f.retries) for f in a.frames]
        rows_b = [(f.src, f.enqueue_ns, f.outcome, f.done_ns, f.retries) for f in b.frames]
        same.append(a.trace == b.trace and rows_a == rows_b and len(a.trace) > 0)
    ok = all(same)
    record(7, "QDCF(Q=1, T=0) equals DCF", ok, f"identical traces per seed {same}")
    assert ok


def _two_meter_collisions(seed, second_theta, rts):
    dcf = {"rts_cts_enabled": True, "rts_threshold_bytes": 0} if rts else {}
    res = run("dcf", seed=seed, positions=[(1000.0, 0.0), (1000.0, second_theta)],
              duration="20s", traffic=[saturated()], dcf=dcf)[1]
    return res.report.collision_ratio


def test_c08_hidden_terminal():
    x = rl.carrier_sense_range_m(R)
    assert 2000.0 > x  # meters at (1000, 0) and (1000, pi) cannot hear each other
    rows = []
    for seed in SEEDS:
        hidden = _two_meter_collisions(seed, math.pi, False)
        near = _two_meter_collisions(seed, 0.01, False)  # 10 m apart
        with_rts = _two_meter_collisions(seed, math.pi, True)
        rows.append((hidden, near, with_rts))
    ok = all(h > n and r < h for h, n, r in rows)
    record(8, "hidden-terminal collisions", ok,
           "per seed (hidden, 10 m pair, hidden+RTS) "
           + "; ".join(f"{h:.3f}/{n:.3f}/{r:.3f}" for h, n, r in rows))
    assert ok


PCF_TRAFFIC = [{"meters": "all", "kind": "periodic", "payload_bytes": 100, "period": "1s",
                "jitter": "100ms"}]


def _pcf_delay_run(seed):
    return run("pcf", seed=seed, meters=50, duration="220s", traffic=PCF_TRAFFIC,
               record_trace=True)[1]


def test_c09_pcf_delay_bound_and_idle_cycle():
    sizes, p = FrameSizes(), DcfParams()
    idle = run("pcf", positions=ring(10, 800), duration="1s")[1]
    expect = air(sizes.beacon) + 10 * (air(sizes.beacon) + air(sizes.control) + 2 * p.sifs_ns)
    closed_ok = {c.length_ns for c in idle.cycles} == {expect}

    literal = []
    for seed in SEEDS:
        res = _pcf_delay_run(seed)
        delays = [f.done_ns - f.enqueue_ns for f in res.frames if f.outcome == "delivered"]
        longest = max(c.length_ns for c in res.cycles)
        literal.append((seed, len(delays), max(delays), longest))
    literal_ok = all(n >= 10_000 and d <= c for _, n, d, c in literal)
    ok = closed_ok and literal_ok
    record(9, "PCF delay bound", ok,
           f"idle 10-meter cycle exact: {closed_ok}; max delay / max cycle per seed "
           + ", ".join(f"s{s} {d / c:.3f} ({n} frames)" for s, n, d, c in literal))
    assert ok


def test_c09_pcf_delay_within_poll_interval_plus_service():
    """The bound that does hold: a frame waits at most one poll-to-poll gap plus its exchange."""
    sizes, p = FrameSizes(), DcfParams()
    service = air(100) + p.sifs_ns + air(sizes.control)
    for seed in SEEDS:
        res = _pcf_delay_run(seed)
        polls = {}
        for t, _, kind, target in res.trace:
            if kind == "poll":
                polls.setdefault(target, []).append(t)
        starts = [c.start_ns for c in res.cycles]
        in_cycle = 0
        for f in res.frames:
            if f.outcome != "delivered":
                continue
            times = polls[f.src]
            k = int(np.searchsorted(times, f.enqueue_ns, side="left"))
            served = times[k]
            gap = served - times[k - 1] if k > 0 else served
            assert f.done_ns <= served + air(sizes.beacon) + p.sifs_ns + service
            assert f.done_ns - f.enqueue_ns <= gap + air(sizes.beacon) + p.sifs_ns + service
            # the cycle still open at the end of the run has no record
            i = int(np.searchsorted(starts, f.done_ns, side="right")) - 1
            cyc = res.cycles[i]
            if f.done_ns <= cyc.start_ns + cyc.length_ns and f.enqueue_ns >= cyc.start_ns:
                in_cycle += 1
                assert f.done_ns - f.enqueue_ns <= cyc.length_ns
        assert in_cycle > 1000


def test_c10_ppmac_shorter_cycles():
    backlogged = list(range(10, 201, 10))
    traffic = [saturated(meters=backlogged)]
    pcf = run("pcf", seed=0, meters=200, duration="30s", traffic=traffic)[1]
    pp = run("ppmac", seed=0, meters=200, duration="30s", traffic=traffic)[1]
    a, b = pp.report.cycles["mean_ns"], pcf.report.cycles["mean_ns"]
    detected = {len(c.detected) for c in pp.cycles}
    ok = a < b
    record(10, "PP-MAC cycle vs full poll", ok,
           f"mean cycle {a / 1e6:.2f} ms vs {b / 1e6:.2f} ms, detected per cycle {sorted(detected)}")
    assert ok


def test_c11_grouped_contention():
    rows = []
    for seed in SEEDS:
        kw = dict(seed=seed, meters=500, duration="10s", traffic=[saturated()])
        dcf = run("dcf", **kw)[1].report.collision_ratio
        grouped = run("qdcf", qdcf={"group_count": 10, "group_mode": "group-by-group",
                                     "phase_ns": "1s"}, **kw)[1].report.collision_ratio
        rows.append((dcf, grouped))
    ok = all(g < d for d, g in rows)
    record(11, "grouped contention", ok,
           "collision ratio DCF/grouped per seed " + "; ".join(f"{d:.3f}/{g:.3f}" for d, g in rows))
    assert ok


def test_c12_fairness_and_lcfs_order():
    rr = run("pcf", positions=ring(30, 700), duration="30s", traffic=[saturated()])[1]
    jain_rr = rr.report.jain_index
    lcfs = run("pcf", positions=ring(30, 700), duration="30s",
               traffic=[{"meters": list(range(1, 31, 2)), "kind": "periodic",
                         "payload_bytes": 80, "period": "700ms"}],
               pcf={"poll_order": "lcfs"})[1]
    done = sorted((f.done_ns, f.src) for f in lcfs.frames if f.outcome == "delivered")
    order_ok, checked = True, 0
    for c in lcfs.cycles:
        counts = {}
        for t, src in done:
            if t > c.start_ns:
                break
            counts[src] = counts.get(src, 0) + 1
        keys = [(counts.get(m, 0), m) for m in c.polled]
        order_ok &= keys == sorted(keys)
        checked += len(keys)
    ok = jain_rr >= 0.99 and order_ok and lcfs.report.jain_index >= 0.99
    record(12, "fairness and LCFS order", ok,
           f"Jain round-robin {jain_rr:.5f}, Jain LCFS {lcfs.report.jain_index:.5f}, "
           f"LCFS order held over {checked} polls: {order_ok}")
    assert ok


def test_c13_silent_node_detection():
    fail_at = 290_000_000
    res = run("pcf", positions=ring(8, 600), duration="3s", record_trace=True,
              faults=[{"meter": 5, "fail_at": fail_at}])[1]
    flag_t = fail_at + res.report.silent_detection_latency_ns[0]
    polls = [t for t, _, kind, target in res.trace
             if kind == "poll" and target == 5 and fail_at < t <= flag_t]
    clean = [run(proto, meters=60, duration="30s", seed=s,
                 traffic=[{"meters": "all", "preset": "billing", "period": "3s"}])[1]
             for proto in ("pcf", "ppmac") for s in (0, 1)]
    false_flags = sum(len(r.report.silent_flagged) for r in clean)
    ok = res.report.silent_flagged == [5] and len(polls) == 3 and false_flags == 0
    record(13, "silent-node detection", ok,
           f"flagged {res.report.silent_flagged} after {len(polls)} missed polls; "
           f"false flags in 4 clean runs: {false_flags}")
    assert ok


@pytest.mark.slow
def test_c14_scale_and_determinism(tmp_path):
    scen = {"protocol": "pcf", "seed": 11, "duration": "1h",
            "topology": {"meter_count": 6000, "cell_radius_m": 1200},
            "traffic": [{"meters": "all", "preset": "billing"}]}
    path = tmp_path / "big.json"
    path.write_text(json.dumps(scen))
    walls, blobs = [], []
    for tag in ("a", "b"):
        t0 = time.perf_counter()
        assert main(["simulate", "--scenario", str(path), "--out", str(tmp_path / tag)]) == 0
        walls.append(time.perf_counter() - t0)
        blobs.append([(tmp_path / f"{tag}{s}").read_bytes()
                      for s in (".summary.json", ".frames.csv", ".cycles.csv")])
    summary = json.loads(blobs[0][0])["report"]
    identical = blobs[0] == blobs[1]
    ok = max(walls) < 300 and identical and summary["delivered"] > 0
    record(14, "6000 meters for one hour", ok,
           f"wall {walls[0]:.1f} s and {walls[1]:.1f} s, delivered {summary['delivered']}, "
           f"outputs byte-identical: {identical}")
    assert ok
