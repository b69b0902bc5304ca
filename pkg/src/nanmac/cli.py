"""Command-line entry points: analyze link | analyze hidden | simulate | sweep."""
import argparse
import io
import json
import sys

import numpy as np

from . import __version__, scenario
from .errors import ConfigError, DomainError, InvariantViolation, NanmacError
from .hiddennode import sweep_hidden_vs_radius
from .radiolink import RadioParams, achievable_rate_bps, linear_to_db, path_loss_db, \
    rx_power_dbw, snr_linear

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 2, 3


def fmt(value):
    """Stable text form: integers verbatim, floats to 9 significant digits."""
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".9g")
    return str(value)


def round_floats(obj):
    if isinstance(obj, float):
        return float(format(obj, ".9g"))
    if isinstance(obj, dict):
        return {k: round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_floats(v) for v in obj]
    return obj


def meta_line(seed):
    return f"# nanmac {__version__} seed={seed}\n"


def write_csv(path, seed, header, rows):
    buf = io.StringIO()
    buf.write(meta_line(seed))
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(fmt(v) for v in row) + "\n")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(buf.getvalue())


def write_json(path, seed, payload):
    doc = {"meta": {"tool": "nanmac", "version": __version__, "seed": seed}}
    doc.update(round_floats(payload))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")


# -- configuration -------------------------------------------------------------
def _read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from None


def _analysis_config(path):
    """Radio and density from an optional scenario-style file."""
    if path is None:
        return RadioParams(), None
    raw = _read_json(path)
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    raw = dict(raw)
    raw.setdefault("protocol", "dcf")
    sc = scenario.from_dict(raw)
    return sc.radio, sc.density_per_m2


def _scenario_raw(args):
    raw = _read_json(args.scenario)
    if not isinstance(raw, dict):
        raise ConfigError("scenario must be a JSON object")
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.duration is not None:
        raw["duration"] = _duration_arg(args.duration)
    return raw


def _duration_arg(text):
    return int(text) if text.isdigit() else text


def _grid(lo, hi, steps):
    if steps < 2:
        raise ConfigError("steps must be at least 2")
    if not 0 < lo < hi:
        raise ConfigError("need 0 < r_min < r_max")
    return np.linspace(lo, hi, steps)


# -- commands ----------------------------------------------------------------
def cmd_analyze_link(args):
    radio, _ = _analysis_config(args.config)
    rows = []
    for r in _grid(args.r_min, args.r_max, args.steps):
        r = float(r)
        rows.append((r, path_loss_db(r, radio), rx_power_dbw(radio, r),
                     linear_to_db(snr_linear(radio, r)), achievable_rate_bps(radio, r)))
    write_csv(args.out, args.seed or 0,
              ["distance_m", "path_loss_db", "prx_dbw", "snr_db", "rate_bps"], rows)
    return EXIT_OK


def cmd_analyze_hidden(args):
    radio, density = _analysis_config(args.config)
    if args.density is not None:
        density = args.density
    if density is None:
        density = 1e-3
    if args.steps < 2:
        raise ConfigError("steps must be at least 2")
    try:
        rows = sweep_hidden_vs_radius(radio, density, args.r_min, args.r_max, args.steps)
    except DomainError as exc:
        raise ConfigError(str(exc)) from None
    write_csv(args.out, args.seed or 0,
              ["cell_radius_m", "carrier_sense_range_m", "mean_hidden_nodes"], rows)
    return EXIT_OK


FRAME_HEADER = ["meter", "class", "enqueue_ns", "outcome", "delay_ns", "retries"]
CYCLE_HEADER = ["index", "start_ns", "length_ns", "group", "polls", "data_responses",
                "null_responses", "misses", "probed", "responders", "detected", "polled"]


def frame_rows(result):
    for f in result.frames:
        yield (f.src, f.priority_class, f.enqueue_ns, f.outcome, f.delay_ns, f.retries)


def cycle_rows(result):
    for c in result.cycles:
        yield (c.index, c.start_ns, c.length_ns, c.group, c.polls, c.data_responses,
               c.null_responses, c.misses, len(c.probed), len(c.responders), len(c.detected),
               len(c.polled))


def run_scenario(raw):
    from .mac import simulate
    sc = scenario.from_dict(raw)
    return sc, simulate(sc)


def cmd_simulate(args):
    raw = _scenario_raw(args)
    sc, result = run_scenario(raw)
    prefix = args.out
    write_json(f"{prefix}.summary.json", sc.seed, {"report": result.report.to_dict()})
    write_csv(f"{prefix}.frames.csv", sc.seed, FRAME_HEADER, frame_rows(result))
    if sc.protocol in ("pcf", "ppmac"):
        write_csv(f"{prefix}.cycles.csv", sc.seed, CYCLE_HEADER, cycle_rows(result))
    if result.trace is not None:
        write_csv(f"{prefix}.trace.csv", sc.seed, ["time_ns", "seq", "kind", "target"],
                  result.trace)
    return EXIT_OK


def _parse_value(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def cmd_sweep(args):
    raw = _scenario_raw(args)
    values = [_parse_value(v) for chunk in args.values for v in chunk.split(",") if v != ""]
    if not values:
        raise ConfigError("sweep needs at least one value")
    runs = [scenario.set_path(raw, args.param, v) for v in values]
    header, rows = None, []
    for value, variant in zip(values, runs):
        sc, result = run_scenario(variant)
        flat = result.report.flat()
        if header is None:
            header = list(flat)
        rows.append([value] + [flat.get(k) for k in header])
    write_csv(args.out, raw.get("seed", 0), [args.param] + header, rows)
    return EXIT_OK


# -- parser ----------------------------------------------------------------------
def _common(p, scenario_required=False):
    p.add_argument("--config", "--scenario", dest="scenario" if scenario_required else "config",
                   required=scenario_required, help="scenario JSON file")
    p.add_argument("--seed", type=int, default=None, help="master seed (u64)")
    p.add_argument("--out", required=True, help="output path or prefix")
    p.add_argument("--duration", default=None, help="simulated time, e.g. 3600s")


def build_parser():
    ap = argparse.ArgumentParser(prog="nanmac", description=__doc__)
    ap.add_argument("--version", action="version", version=f"nanmac {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    an = sub.add_parser("analyze", help="closed-form radio analysis")
    asub = an.add_subparsers(dest="what", required=True)
    link = asub.add_parser("link", help="path loss, power, SNR and rate over distance")
    _common(link)
    link.add_argument("--r-min", type=float, default=100.0)
    link.add_argument("--r-max", type=float, default=5000.0)
    link.add_argument("--steps", type=int, default=50)
    link.set_defaults(func=cmd_analyze_link)
    hid = asub.add_parser("hidden", help="mean hidden-node count over cell radius")
    _common(hid)
    hid.add_argument("--r-min", type=float, default=200.0)
    hid.add_argument("--r-max", type=float, default=2000.0)
    hid.add_argument("--steps", type=int, default=19)
    hid.add_argument("--density", type=float, default=None, help="meters per square metre")
    hid.set_defaults(func=cmd_analyze_hidden)

    sim = sub.add_parser("simulate", help="run one scenario")
    _common(sim, scenario_required=True)
    sim.set_defaults(func=cmd_simulate)

    sw = sub.add_parser("sweep", help="run a scenario once per parameter value")
    _common(sw, scenario_required=True)
    sw.add_argument("--param", required=True, help="dotted scenario path, e.g. topology.meter_count")
    sw.add_argument("--values", required=True, nargs="+", help="values (comma or space separated)")
    sw.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InvariantViolation as exc:
        print(f"nanmac: invariant violated: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except (NanmacError, ValueError) as exc:
        print(f"nanmac: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
