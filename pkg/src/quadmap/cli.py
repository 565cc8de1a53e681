"""Command-line interface: ``quadmap {simulate,compress,decode,verify}``."""

import argparse
import logging
from pathlib import Path
import sys

from . import __version__
from .config import (
    STATIC_SCHEDULE_PCT,
    RunConfig,
    parse_number_list,
    read_config_file,
)
from .decoder import decode
from .encoder import SOLVERS
from .exceptions import ConfigurationError, QuadmapError
from .grid import uniform_grid
from .mapio import atomic_write, read_map, write_map, write_metrics
from .payload import deserialize_payload, serialize_payload
from .pipeline import BandwidthSchedule, SessionState, iter_steps, step
from .sim import amoeba_scenario, dynamic_sequence, random_map, static_sequence

log = logging.getLogger("quadmap")


def _budget_list(text):
    values = parse_number_list(text)
    if any(not isinstance(v, int) for v in values):
        raise argparse.ArgumentTypeError("leaf budgets must be integers")
    return values


def _number_list(text):
    try:
        return parse_number_list(text)
    except ConfigurationError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_run_flags(p):
    p.add_argument("--config", help="key = value file with defaults for these flags")
    p.add_argument("--scenario", choices=("static", "amoeba", "files"), default="static")
    p.add_argument("--ell", type=int, default=5, help="grid side is 2**ell")
    p.add_argument("--steps", type=int, default=None,
                   help="time steps (default: 11 static, full path amoeba, #maps files)")
    sched = p.add_mutually_exclusive_group()
    sched.add_argument("--schedule-pct", type=_number_list, default=None,
                       help="comma-separated budgets in percent of the cell count")
    sched.add_argument("--schedule-leaves", type=_budget_list, default=None,
                       help="comma-separated leaf budgets")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--initial-estimate", type=float, default=0.5)
    p.add_argument("--solver", choices=("dp", "bnb"), default="dp")
    p.add_argument("--out", default="out")
    p.add_argument("--smoothness", type=int, default=2)
    p.add_argument("--radius", type=int, default=8)
    p.add_argument("--maps", nargs="+", default=[], help="map files for --scenario files")
    p.add_argument("--bits-per-cell", type=int, default=None,
                   help="also report bits-per-cell x leaves as nominal_bits")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="quadmap",
        description="Bandwidth-limited quadtree compression of occupancy grids.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a static, amoeba or file-sequence experiment")
    _add_run_flags(sim)
    parser.simulate_parser = sim

    comp = sub.add_parser("compress", help="encode one map against a previous estimate")
    comp.add_argument("--map", required=True)
    comp.add_argument("--estimate", help="previous estimate (default: uniform)")
    comp.add_argument("--initial-estimate", type=float, default=0.5)
    comp.add_argument("--budget", type=int, required=True, help="leaf budget")
    comp.add_argument("--solver", choices=SOLVERS, default="dp")
    comp.add_argument("--payload", required=True, help="output payload file")
    comp.add_argument("--new-estimate", required=True, help="output CSV of the sender replica")

    dec = sub.add_parser("decode", help="apply a payload to a previous estimate")
    dec.add_argument("--payload", required=True)
    dec.add_argument("--estimate", help="previous estimate (default: uniform)")
    dec.add_argument("--initial-estimate", type=float, default=0.5)
    dec.add_argument("--out", required=True, help="output CSV of the new estimate")

    ver = sub.add_parser("verify", help="run oracle self-checks at depth <= 2")
    ver.add_argument("--seed", type=int, default=0)
    return parser


def _apply_config_file(parser, argv):
    """Re-parse with values from ``--config`` as defaults; explicit flags win."""
    args = parser.parse_args(argv)
    if getattr(args, "config", None) is None:
        return args
    sim_parser = parser.simulate_parser
    actions = {a.dest: a for a in sim_parser._actions}
    defaults = {}
    for key, raw in read_config_file(args.config).items():
        action = actions.get(key)
        if action is None or key in ("config", "help"):
            raise ConfigurationError(f"unknown config key {key!r}")
        if action.nargs == "+":
            defaults[key] = raw.replace(",", " ").split()
        elif action.type is not None:
            try:
                defaults[key] = action.type(raw)
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise ConfigurationError(f"config key {key!r}: {exc}") from None
        else:
            defaults[key] = raw
        if action.choices is not None and defaults[key] not in action.choices:
            raise ConfigurationError(f"config key {key!r}: {raw!r} not in {action.choices}")
    sim_parser.set_defaults(**defaults)
    args = parser.parse_args(argv)
    if args.schedule_pct is not None and args.schedule_leaves is not None:
        # one came from the file, the other from the command line
        if "schedule_pct" in defaults:
            args.schedule_pct = None
        else:
            args.schedule_leaves = None
    return args


def config_from_args(args):
    return RunConfig(
        scenario=args.scenario, ell=args.ell, steps=args.steps,
        schedule_pct=args.schedule_pct, schedule_leaves=args.schedule_leaves,
        seed=args.seed, initial_estimate=args.initial_estimate, solver=args.solver,
        out=args.out, smoothness=args.smoothness, radius=args.radius,
        maps=list(args.maps), bits_per_cell=args.bits_per_cell,
    )


def build_maps(config):
    """Observed-map sequence for a run configuration."""
    if config.scenario == "static":
        steps = 11 if config.steps is None else config.steps
        return static_sequence(random_map(config.ell, config.seed, config.smoothness), steps)
    if config.scenario == "amoeba":
        scenario = amoeba_scenario(config.ell, config.seed, config.smoothness, config.radius)
        steps = len(scenario.path) if config.steps is None else config.steps
        return dynamic_sequence(scenario, steps)
    if not config.maps:
        raise ConfigurationError("--scenario files needs --maps")
    maps = [read_map(p) for p in config.maps]
    if config.steps is not None and config.steps != len(maps):
        raise ConfigurationError(f"--steps {config.steps} but {len(maps)} map files")
    return maps


def build_schedule(config, depth, steps):
    if config.schedule_leaves is not None:
        schedule = BandwidthSchedule(tuple(config.schedule_leaves))
    else:
        pct = config.schedule_pct or list(STATIC_SCHEDULE_PCT)
        schedule = BandwidthSchedule.from_percentages(pct, depth)
    if len(schedule) == 1 and steps != 1:
        schedule = BandwidthSchedule(schedule.budgets * steps)
    if len(schedule) != steps:
        raise ConfigurationError(f"schedule has {len(schedule)} entries for {steps} steps")
    return schedule


def run_simulation(config):
    maps = build_maps(config)
    depth = maps[0].depth if maps else config.ell
    schedule = build_schedule(config, depth, len(maps))
    out = Path(config.out)
    (out / "payloads").mkdir(parents=True, exist_ok=True)
    (out / "estimates").mkdir(parents=True, exist_ok=True)
    records = []
    for _, enc, record, state in iter_steps(maps, schedule, config.initial_estimate,
                                            config.solver, through_payload=True,
                                            bits_per_cell=config.bits_per_cell):
        name = f"step_{record.step:04d}"
        atomic_write(out / "payloads" / f"{name}.mqtc", serialize_payload(enc))
        write_map(state.estimate, out / "estimates" / f"{name}.csv")
        records.append(record)
        log.info("step %d: leaves %d/%d error %.6g", record.step, record.leaves_used,
                 record.budget_leaves, record.estimate_error)
    write_metrics(records, out / "metrics.csv")
    return records


def _load_estimate(path, initial, depth):
    return read_map(path) if path else uniform_grid(depth, initial)


def cmd_simulate(args):
    records = run_simulation(config_from_args(args))
    print(f"wrote {len(records)} steps to {args.out}")
    return 0


def cmd_compress(args):
    observed = read_map(args.map)
    estimate = _load_estimate(args.estimate, args.initial_estimate, observed.depth)
    enc, record, new_state = step(SessionState(estimate), observed, args.budget, args.solver,
                                  through_payload=True)
    atomic_write(args.payload, serialize_payload(enc))
    write_map(new_state.estimate, args.new_estimate)
    print(f"leaves {record.leaves_used}/{record.budget_leaves}, "
          f"payload {record.payload_bits} bits, estimate error {record.estimate_error:.9g}")
    return 0


def cmd_decode(args):
    enc = deserialize_payload(Path(args.payload).read_bytes())
    estimate = _load_estimate(args.estimate, args.initial_estimate, enc.topology.depth)
    write_map(decode(enc, estimate), args.out)
    return 0


def cmd_verify(args):
    from .verify import run_checks

    results = run_checks(args.seed)
    for name, passed, detail in results:
        print(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
    return 0 if all(p for _, p, _ in results) else 1


COMMANDS = {
    "simulate": cmd_simulate,
    "compress": cmd_compress,
    "decode": cmd_decode,
    "verify": cmd_verify,
}


def main(argv=None):
    parser = build_parser()
    try:
        args = _apply_config_file(parser, argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(message)s")
        return COMMANDS[args.command](args)
    except (QuadmapError, OSError) as exc:
        print(f"quadmap: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
