"""Command-line harness for water-quality system identification experiments.

    python app.py identify --preset three-node --method okid-era --order 15 \
        --test-input rect:0:40:2 --val-input random:0:1 --out results/report.json
    python app.py scenarios --preset three-node --out results/
"""
import argparse
import logging
import os
import sys

from backend.bench.config import METHODS, ExperimentConfig, default_validation_input, resolve_network
from backend.bench.experiment import run_experiment, run_scenarios, select_common_order
from backend.bench.report import markdown_table, write_report, write_scenarios
from backend.identification.era_okid import write_markov_csv
from backend.lti_model import load_model, pole_zero_report, save_model, simulate
from backend.network.network_spec import save_network
from backend.network.presets import PRESETS
from backend.network.quality_model import build_quality_model
from backend.settings import app_settings
from backend.signals import read_signal_csv, write_signal_csv
from backend.utils import comma_separated_string_to_list, dump_json

EXIT_OK = 0
EXIT_CONFIG_ERROR = 2
MARKOV_METHODS = ("era", "okid-era")

# Debug settings
DEBUG = os.environ.get("DEBUG", "false")


def valid_range(n):
    n = int(n)
    if n < 1 or n > 32:
        raise argparse.ArgumentTypeError("njobs must be an Integer between 1 and 32.")
    return n


def energy_goal(value):
    g = float(value)
    if not 0.0 < g < 1.0:
        raise argparse.ArgumentTypeError("energy goal must lie strictly between 0 and 1.")
    return g


def method_list(value):
    methods = comma_separated_string_to_list(value)
    unknown = [m for m in methods if m not in METHODS]
    if unknown:
        raise argparse.ArgumentTypeError(f"unknown methods {unknown}; choose from {', '.join(METHODS)}")
    return methods


def add_network_arguments(parser):
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--preset", choices=sorted(PRESETS), help="Built-in network.")
    group.add_argument("--network", type=str, help="Path to a network JSON document.")


def add_run_arguments(parser):
    parser.add_argument("--steps", type=int, default=app_settings.bench.steps, help="Horizon in quality steps.")
    parser.add_argument("--seed", type=int, default=app_settings.bench.seed, help="Seed for random signals.")
    parser.add_argument("--val-input", type=str, default=None,
                        help="Validation signal. Default: random over BENCH_VALIDATION_RANGE.")


def create_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Identify water-quality state-space models.")
    parser.add_argument("--verbose", action="store_true", help="Log at debug level.")
    commands = parser.add_subparsers(dest="command", required=True)

    identify = commands.add_parser("identify", help="Run one identification experiment.")
    add_network_arguments(identify)
    identify.add_argument("--method", choices=METHODS, required=True)
    order = identify.add_mutually_exclusive_group()
    order.add_argument("--order", type=int, help="Reduced order n_r.")
    order.add_argument("--energy-goal", type=energy_goal, help="Pick n_r by singular-value energy.")
    identify.add_argument("--test-input", type=str, default="rect:0:400:1",
                          help="impulse[:amp], rect:start:width:amp, random:lo:hi or a CSV path.")
    identify.add_argument("--block-rows", type=int, default=None, help="Block rows k for subspace methods.")
    identify.add_argument("--markov-horizon", type=int, default=None, help="OKID horizon m.")
    identify.add_argument("--divergence-limit", type=float, default=app_settings.bench.divergence_limit)
    identify.add_argument("--export-markov", type=str, default=None,
                          help="CSV for the Markov parameters behind an era or okid-era model.")
    identify.add_argument("--out", type=str, default=os.path.join(app_settings.bench.output_dir, "report.json"))
    add_run_arguments(identify)

    scenarios = commands.add_parser("scenarios", help="Run the three-scenario grid for every method.")
    add_network_arguments(scenarios)
    scenarios.add_argument("--methods", type=method_list, default=list(METHODS))
    scenarios.add_argument("--njobs", type=valid_range, default=app_settings.bench.njobs,
                           help="Number of jobs to run (between 1 and 32). Default=BENCH_NJOBS or 1")
    scenarios.add_argument("--out", type=str, default=app_settings.bench.output_dir)
    add_run_arguments(scenarios)

    orders = commands.add_parser("orders", help="Order each method selects for an energy goal.")
    add_network_arguments(orders)
    orders.add_argument("--energy-goal", type=energy_goal, default=app_settings.identification.energy_goal)
    orders.add_argument("--test-input", type=str, default="rect:0:400:1")
    orders.add_argument("--steps", type=int, default=app_settings.bench.steps)
    orders.add_argument("--seed", type=int, default=app_settings.bench.seed)
    orders.add_argument("--out", type=str, default=None, help="Optional JSON output.")

    build = commands.add_parser("build", help="Export the plant model built from a network.")
    add_network_arguments(build)
    build.add_argument("--out", type=str, required=True, help="Model JSON path.")
    build.add_argument("--export-network", type=str, default=None, help="Also write the network JSON.")

    sim = commands.add_parser("simulate", help="Simulate a model JSON on a signal CSV.")
    sim.add_argument("--model", type=str, required=True)
    sim.add_argument("--input", type=str, required=True)
    sim.add_argument("--out", type=str, required=True)
    sim.add_argument("--divergence-limit", type=float, default=None)

    return parser


def network_argument(args) -> str:
    return args.preset or args.network


def run_identify(args) -> None:
    if args.export_markov and args.method not in MARKOV_METHODS:
        raise ValueError(f"--export-markov needs one of {', '.join(MARKOV_METHODS)}, got {args.method}")
    goal = args.energy_goal
    if args.order is None and goal is None:
        goal = app_settings.identification.energy_goal
    cfg = ExperimentConfig(
        network=network_argument(args),
        method=args.method,
        order=args.order,
        energy_goal=goal,
        test_input=args.test_input,
        validation_input=args.val_input or default_validation_input(),
        steps=args.steps,
        seed=args.seed,
        block_rows=args.block_rows,
        markov_horizon=args.markov_horizon,
        divergence_limit=args.divergence_limit,
        output=args.out,
    )
    report = run_experiment(cfg)
    write_report(report, args.out)
    if args.export_markov:
        write_markov_csv(report.markov, args.export_markov)
        logging.info(f"Wrote {len(report.markov)} Markov parameters to {args.export_markov}")
    print(f"{report.method}: n_r={report.n_r} rmse={report.rmse:.6g} stable={report.stable} "
          f"wall_time={report.wall_time_s:.2f}s -> {args.out}")


def run_scenario_grid(args) -> None:
    reports = run_scenarios(
        network_argument(args),
        njobs=args.njobs,
        methods=args.methods,
        steps=args.steps,
        seed=args.seed,
        validation_input=args.val_input,
    )
    write_scenarios(reports, args.out)
    print(markdown_table(reports), end="")


def run_orders(args) -> None:
    orders = select_common_order(network_argument(args), args.energy_goal, test_input=args.test_input,
                                 steps=args.steps, seed=args.seed)
    if args.out:
        dump_json(orders, args.out)
    for method, order in orders.items():
        print(f"{method}: {order}")


def run_build(args) -> None:
    spec = resolve_network(network_argument(args))
    model = build_quality_model(spec)
    save_model(model, args.out)
    if args.export_network:
        save_network(spec, args.export_network)
    report = pole_zero_report(model)
    print(f"{spec.name}: n_x={model.n_x} n_u={model.n_u} n_y={model.n_y} "
          f"spectral_radius={report.spectral_radius:.6g} -> {args.out}")


def run_simulate(args) -> None:
    model = load_model(args.model)
    u = read_signal_csv(args.input, model.dt, "input")
    y = simulate(model, u, divergence_limit=args.divergence_limit)
    write_signal_csv(y, args.out)
    print(f"simulated {y.length} of {u.length} steps -> {args.out}")


COMMANDS = {
    "identify": run_identify,
    "scenarios": run_scenario_grid,
    "orders": run_orders,
    "build": run_build,
    "simulate": run_simulate,
}


def main(argv=None) -> int:
    args = create_parser().parse_args(argv)
    level = logging.DEBUG if args.verbose or DEBUG.lower() == "true" else logging.INFO
    logging.basicConfig(level=level)

    try:
        COMMANDS[args.command](args)
    except (ValueError, OSError) as e:
        logging.error(f"{args.command} failed: {e}")
        return EXIT_CONFIG_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
