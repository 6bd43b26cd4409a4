"""Command-line interface.

Commands
    rate             closed-form chain report from a [chain] config
    simulate         Monte Carlo the chain (or one elementary link)
    link-experiment  storage-time and mode-count scans of the link model
    fit              least-squares fit of a CSV (exp | linear | sinusoid)
    sweep            rate as a function of one chain parameter

Exit codes: 0 success, 2 config/CSV parse failure or bad arguments, 3 domain
violation, 4 degenerate run (timeout-dominated simulation, zero heralds),
5 fit did not converge.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
import time
from pathlib import Path

from . import __version__
from .chain_sim import simulate_chain, simulate_elementary_link
from .config_io import (
    RunManifest,
    canonical_json,
    config_as_dict,
    format_float,
    parse_config,
    write_csv_atomic,
    write_text_atomic,
)
from .errors import (
    ConfigError,
    ContractError,
    DlczSimError,
    EstimatorError,
    IllConditionedError,
    NoHeraldsError,
    ParameterError,
    RankDeficiencyError,
    StalledChainError,
)
from .experiments import mode_count_scan, storage_time_scan
from .fitters import Samples, fit_exponential, fit_linear_origin, fit_sinusoid
from .rate import ChainParams, swap_chain

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_DOMAIN = 3
EXIT_DEGENERATE = 4
EXIT_NO_CONVERGENCE = 5


def _common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", type=Path, help="INI configuration file")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--trials", type=int, help="override the config trial count")
    parser.add_argument("--out-dir", type=Path, help="directory for result files")
    parser.add_argument("--format", choices=("json", "csv"), default="json",
                        help="result file format where both apply")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dlczsim",
        description="Temporally multiplexed DLCZ repeater link simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_rate = sub.add_parser("rate", help="closed-form repeater-chain rate")
    _common_flags(p_rate)
    p_rate.set_defaults(func=cmd_rate)

    p_sim = sub.add_parser("simulate", help="Monte Carlo chain simulation")
    _common_flags(p_sim)
    p_sim.add_argument("--workers", type=int, default=1,
                       help="parallel worker processes (results identical for any count)")
    p_sim.add_argument("--elementary", action="store_true",
                       help="simulate only elementary-link generation")
    p_sim.set_defaults(func=cmd_simulate)

    p_link = sub.add_parser("link-experiment",
                            help="concurrence/visibility/efficiency scans")
    _common_flags(p_link)
    p_link.set_defaults(func=cmd_link_experiment)

    p_fit = sub.add_parser("fit", help="least-squares fit of a CSV file")
    p_fit.add_argument("csv", type=Path, help="input CSV with header x,y[,weight]")
    p_fit.add_argument("--model", choices=("exp", "linear", "sinusoid"), required=True)
    _common_flags(p_fit)
    p_fit.set_defaults(func=cmd_fit)

    p_sweep = sub.add_parser("sweep", help="rate versus one chain parameter")
    _common_flags(p_sweep)
    p_sweep.add_argument("--param", required=True, help="ChainParams field to sweep")
    p_sweep.add_argument("--min", type=float, required=True)
    p_sweep.add_argument("--max", type=float, required=True)
    p_sweep.add_argument("--steps", type=int, default=20)
    p_sweep.add_argument("--fixed-total-km", type=float, default=None,
                         help="when sweeping l0, keep the end-to-end distance at this "
                              "value by re-deriving n_levels per grid point")
    p_sweep.set_defaults(func=cmd_sweep)
    return parser


def _load_config(args):
    if args.config is None:
        raise ConfigError("this command requires --config")
    config = parse_config(args.config)
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    if getattr(args, "trials", None) is not None:
        config = dataclasses.replace(config, trials=args.trials)
    return config


def _emit(args, name: str, text: str, outputs: list[str]) -> None:
    if args.out_dir is None:
        return
    path = Path(args.out_dir) / name
    write_text_atomic(path, text)
    outputs.append(str(path))


def _finish_manifest(args, command: str, config_dict: dict, seed: int,
                     outputs: list[str], started: float) -> None:
    if args.out_dir is None:
        return
    manifest = RunManifest(
        command=command,
        parameters=config_dict,
        seed=seed,
        outputs=sorted(outputs),
        duration_s=time.time() - started,
    )
    manifest.write(Path(args.out_dir) / "manifest.json")


def cmd_rate(args) -> int:
    started = time.time()
    config = _load_config(args)
    if config.chain is None:
        raise ConfigError("rate requires a [chain] section")
    outputs: list[str] = []
    try:
        report = swap_chain(config.chain)
    except StalledChainError as exc:
        print(f"warning: {exc}", file=sys.stderr)
        print("rate_hz 0")
        _emit(args, "rate.json", canonical_json({"rate_hz": 0.0, "stalled_level": exc.level}),
              outputs)
        _finish_manifest(args, "rate", config_as_dict(config), config.seed, outputs, started)
        return EXIT_OK

    print(f"T_cc_s          {format_float(report.t_cc)}")
    print(f"P0              {format_float(report.p0)}")
    print(f"P0_multiplexed  {format_float(report.p0_multiplexed)}"
          f"   (linear N*P0 {format_float(report.p0_linear)})")
    print(f"t0_s            {format_float(report.t0)}")
    for i, (p_i, t_i) in enumerate(zip(report.level_success, report.level_time), start=1):
        print(f"level {i}:  P={format_float(p_i)}  t_s={format_float(t_i)}")
    print(f"P_pr            {format_float(report.p_pr)}")
    print(f"rate_hz         {format_float(report.rate_hz)}")

    if args.format == "csv":
        rows = [(i + 1, p, t) for i, (p, t) in
                enumerate(zip(report.level_success, report.level_time))]
        if args.out_dir is not None:
            path = Path(args.out_dir) / "rate.csv"
            write_csv_atomic(path, ("level", "p_i", "t_i_s"), rows,
                             trailer_comments=(f"rate_hz {format_float(report.rate_hz)}",))
            outputs.append(str(path))
    else:
        _emit(args, "rate.json", canonical_json(report.to_dict()), outputs)
    _finish_manifest(args, "rate", config_as_dict(config), config.seed, outputs, started)
    return EXIT_OK


def cmd_simulate(args) -> int:
    started = time.time()
    config = _load_config(args)
    sim = config.sim_config()
    outputs: list[str] = []

    if args.elementary:
        trace = simulate_elementary_link(sim.chain, sim.trials, sim.seed)
        print(f"intervals {trace.intervals}  successes {trace.successes}")
        print(f"empirical_success {format_float(trace.empirical_success)}  "
              f"analytic {format_float(trace.analytic_success)}")
        _emit(args, "trace.json", canonical_json({
            "mode": "elementary",
            "intervals": trace.intervals,
            "successes": trace.successes,
            "empirical_success": trace.empirical_success,
            "analytic_success": trace.analytic_success,
            "waiting_times_tcc": trace.waiting_times.tolist(),
        }), outputs)
        _finish_manifest(args, "simulate", config_as_dict(config), sim.seed, outputs, started)
        return EXIT_OK

    trace = simulate_chain(sim, workers=max(1, args.workers))
    print(f"delivered {trace.delivered}/{sim.trials}  timeouts {trace.timeouts}")
    print(f"empirical_rate_hz {format_float(trace.empirical_rate)} "
          f"+/- {format_float(trace.rate_stderr)}")
    print(f"analytic_rate_hz  {format_float(trace.analytic_rate)}")
    _emit(args, "trace.json", canonical_json(trace.to_dict()), outputs)
    if args.out_dir is not None:
        rows = [(float(lo), float(hi), int(count)) for lo, hi, count in
                zip(trace.histogram_edges[:-1], trace.histogram_edges[1:],
                    trace.histogram_counts)]
        path = Path(args.out_dir) / "latency.csv"
        write_csv_atomic(path, ("bin_start_s", "bin_end_s", "count"), rows)
        outputs.append(str(path))
    _finish_manifest(args, "simulate", config_as_dict(config), sim.seed, outputs, started)
    if trace.timeouts > 0.5 * sim.trials:
        print(f"error: {trace.timeouts} of {sim.trials} trials timed out at "
              f"max_sim_time={sim.max_sim_time}s", file=sys.stderr)
        return EXIT_DEGENERATE
    return EXIT_OK


def cmd_link_experiment(args) -> int:
    started = time.time()
    config = _load_config(args)
    if config.link is None:
        raise ConfigError("link-experiment requires a [link] section")
    exp = config.experiment
    outputs: list[str] = []

    storage_points = storage_time_scan(
        config.link, exp.storage_times, exp.trains, config.seed,
        phases=exp.fringe_phases, shots_per_phase=exp.fringe_shots)
    rows = [(p.storage_time * 1e6, p.concurrence, p.concurrence_stderr,
             p.visibility, p.efficiency) for p in storage_points]
    for row in rows:
        print("storage_time_us {}  C {}  C_stderr {}  V {}  eta {}".format(
            *(format_float(v) for v in row)))
    if args.out_dir is not None:
        path = Path(args.out_dir) / "storage_scan.csv"
        write_csv_atomic(path, ("storage_time_us", "C", "C_stderr", "V", "eta"), rows)
        outputs.append(str(path))

    mode_points = mode_count_scan(
        config.link, exp.mode_counts, exp.storage_times[0], exp.window_budget,
        config.seed, phases=exp.fringe_phases, shots_per_phase=exp.fringe_shots)
    mode_rows = [(p.mode_count, p.detection_probability, p.concurrence)
                 for p in mode_points]
    for row in mode_rows:
        print(f"mode_count {row[0]}  P_D {format_float(row[1])}  C {format_float(row[2])}")
    if args.out_dir is not None:
        path = Path(args.out_dir) / "mode_scan.csv"
        write_csv_atomic(path, ("mode_count", "P_D", "C"), mode_rows)
        outputs.append(str(path))

    _finish_manifest(args, "link-experiment", config_as_dict(config), config.seed,
                     outputs, started)
    return EXIT_OK


_FIT_DISPATCH = {
    "exp": fit_exponential,
    "linear": fit_linear_origin,
    "sinusoid": fit_sinusoid,
}


def cmd_fit(args) -> int:
    started = time.time()
    samples = Samples.from_csv(args.csv)
    result = _FIT_DISPATCH[args.model](samples)
    text = canonical_json(result.to_dict())
    print(text, end="")
    outputs: list[str] = []
    _emit(args, "fit.json", text, outputs)
    _finish_manifest(args, "fit", {"csv": str(args.csv), "model": args.model},
                     args.seed if args.seed is not None else 0, outputs, started)
    if not result.converged:
        print("error: fit did not converge", file=sys.stderr)
        return EXIT_NO_CONVERGENCE
    return EXIT_OK


def _monotonicity(values) -> str:
    increasing = all(b >= a for a, b in zip(values, values[1:]))
    decreasing = all(b <= a for a, b in zip(values, values[1:]))
    if increasing and decreasing:
        return "constant"
    if increasing:
        return "non-decreasing"
    if decreasing:
        return "non-increasing"
    peak = max(range(len(values)), key=values.__getitem__)
    if 0 < peak < len(values) - 1:
        return f"interior-maximum at index {peak}"
    return "non-monotonic"


def cmd_sweep(args) -> int:
    started = time.time()
    config = _load_config(args)
    if config.chain is None:
        raise ConfigError("sweep requires a [chain] section")
    field_names = {f.name for f in dataclasses.fields(ChainParams)}
    if args.param not in field_names:
        print(f"error: unknown chain parameter {args.param!r}; choose from "
              f"{sorted(field_names)}", file=sys.stderr)
        return EXIT_PARSE
    if args.steps < 2 or args.max <= args.min:
        print("error: need --steps >= 2 and --max > --min", file=sys.stderr)
        return EXIT_PARSE

    is_int = args.param in ("n_levels", "mode_count")
    grid = []
    for i in range(args.steps):
        value = args.min + (args.max - args.min) * i / (args.steps - 1)
        grid.append(int(round(value)) if is_int else value)

    fixed_total = getattr(args, "fixed_total_km", None)
    if fixed_total is not None and args.param != "l0":
        print("error: --fixed-total-km only applies to --param l0", file=sys.stderr)
        return EXIT_PARSE

    rows = []
    rates = []
    for value in grid:
        overrides = {args.param: value}
        if fixed_total is not None:
            # keep 2^n * l0 as close to the requested span as integer n allows
            overrides["n_levels"] = max(0, round(math.log2(fixed_total / value)))
        chain = dataclasses.replace(config.chain, **overrides)
        try:
            rate = swap_chain(chain).rate_hz
        except StalledChainError:
            rate = 0.0
        rows.append((value, rate))
        rates.append(rate)
    diagnostic = _monotonicity(rates)

    for value, rate in rows:
        print(f"{args.param} {format_float(float(value))}  rate_hz {format_float(rate)}")
    print(f"# monotonicity: {diagnostic}")
    outputs: list[str] = []
    if args.out_dir is not None:
        path = Path(args.out_dir) / "sweep.csv"
        write_csv_atomic(path, (args.param, "rate_hz"), rows,
                         trailer_comments=(f"monotonicity: {diagnostic}",))
        outputs.append(str(path))
    _finish_manifest(args, "sweep",
                     {**config_as_dict(config), "param": args.param,
                      "min": args.min, "max": args.max, "steps": args.steps,
                      "monotonicity": diagnostic},
                     config.seed, outputs, started)
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (NoHeraldsError,) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (ParameterError, ContractError, EstimatorError, StalledChainError,
            RankDeficiencyError, IllConditionedError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except DlczSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
