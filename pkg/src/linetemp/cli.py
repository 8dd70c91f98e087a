"""Command-line surface: validate / synthesize / simulate.

    linetemp validate  SCENARIO
    linetemp synthesize SCENARIO -o CONTROLLER
    linetemp simulate  SCENARIO CONTROLLER [--steps N] [--seed S] [--free]
                       [--csv PATH] [--report PATH] [--svg PATH]

Exit codes: 0 success, 1 validation failure (scenario problems, artifact
problems, scenario/controller hash mismatch), 2 synthesis failure (empty
tightened sets), 3 runtime failure (hard constraint breach during
simulation).
"""

import argparse
import sys

import numpy as np

from . import artifact, output, scenario, sim

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_SYNTHESIS = 2
EXIT_RUNTIME = 3


def _err(msg):
    print(msg, file=sys.stderr)


def cmd_validate(args):
    try:
        scn, sha = scenario.load_scenario(args.scenario)
    except OSError as ex:
        _err(f"cannot read scenario: {ex}")
        return EXIT_VALIDATION
    except scenario.ScenarioError as ex:
        _err(f"{args.scenario}: invalid")
        for e in ex.errors:
            _err(f"  - {e}")
        return EXIT_VALIDATION
    print(output.format_report([
        ("scenario", scn.name),
        ("file", args.scenario),
        ("sha256", sha),
        ("format_version", scn.format_version),
        ("lines", scn.n_lines),
        ("curtailment_sites", scn.n_sites),
        ("valid", True),
    ]), end="")
    return EXIT_OK


def cmd_synthesize(args):
    try:
        scn, sha = scenario.load_scenario(args.scenario)
    except OSError as ex:
        _err(f"cannot read scenario: {ex}")
        return EXIT_VALIDATION
    except scenario.ScenarioError as ex:
        _err(f"{args.scenario}: invalid")
        for e in ex.errors:
            _err(f"  - {e}")
        return EXIT_VALIDATION
    try:
        controller, report = scenario.synthesize_controller(scn)
    except ValueError as ex:
        _err(f"synthesis failed: {ex}")
        return EXIT_SYNTHESIS
    artifact.save_controller(args.out, controller, sha, report)
    items = [("scenario", scn.name), ("controller", args.out)]
    items += [(k, v) for k, v in report.items() if k != "warnings"]
    for w in report["warnings"]:
        items.append(("warning", w))
    print(output.format_report(items), end="")
    return EXIT_OK


def cmd_simulate(args):
    try:
        scn, sha = scenario.load_scenario(args.scenario)
    except OSError as ex:
        _err(f"cannot read scenario: {ex}")
        return EXIT_VALIDATION
    except scenario.ScenarioError as ex:
        _err(f"{args.scenario}: invalid")
        for e in ex.errors:
            _err(f"  - {e}")
        return EXIT_VALIDATION

    controller = None
    if args.controller is not None:
        try:
            controller, _ = artifact.load_controller(args.controller, scn,
                                                     sha)
        except OSError as ex:
            _err(f"cannot read controller artifact: {ex}")
            return EXIT_VALIDATION
        except artifact.ArtifactError as ex:
            _err(f"controller artifact rejected: {ex}")
            return EXIT_VALIDATION
    elif not args.free:
        _err("a controller artifact is required unless --free is given")
        return EXIT_VALIDATION

    steps = scn.steps if args.steps is None else args.steps
    seed = scn.seed if args.seed is None else args.seed
    plant = scenario.plant_model(scn)
    gen = scenario.disturbance_generator(scn, seed=seed)
    T_lim = np.asarray(scn.temp_max_C, dtype=float)

    try:
        if args.free:
            trace = sim.run_free(plant, steps, gen)
            tight = None
        else:
            trace = sim.run_closed_loop(plant, controller, steps, gen)
            tight = controller.tightened_temperature_limit_C()
    except RuntimeError as ex:
        _err(f"simulation aborted: {ex}")
        return EXIT_RUNTIME

    summary = sim.summarize(trace, T_lim)
    items = [
        ("scenario", scn.name),
        ("mode", "free" if args.free else "controlled"),
        ("steps", summary.steps),
        ("seed", seed),
        ("disturbance_mode", gen.mode),
        ("temperature_limit_C", float(T_lim.max())),
    ]
    if tight is not None:
        items.append(("tightened_T_limit_C", float(np.min(tight))))
    items += [
        ("max_temperature_C", float(np.max(summary.max_T_C))),
        ("violations", summary.violations),
        ("min_margin_C", float(summary.min_margin)),
        ("curtailed_MWh", float(summary.curtailed_MWh)),
        ("battery_throughput_MWh", float(summary.battery_throughput_MWh)),
        ("infeasible_steps", summary.infeasible_steps),
        ("battery_saturated_steps", summary.battery_saturated_steps),
    ]
    text = output.format_report(items)
    print(text, end="")
    if args.report is not None:
        with open(args.report, "w", encoding="utf-8") as fh:
            fh.write(text)
    if args.csv is not None:
        output.write_csv(args.csv, trace, T_lim, tight)
    if args.svg is not None:
        output.write_svg(args.svg, trace, T_lim, tight)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="linetemp",
        description="Tube-MPC temperature control for transmission lines")
    subs = parser.add_subparsers(dest="command", required=True)

    v = subs.add_parser("validate", help="check a scenario file")
    v.add_argument("scenario")
    v.set_defaults(func=cmd_validate)

    s = subs.add_parser("synthesize",
                        help="synthesize a tube controller from a scenario")
    s.add_argument("scenario")
    s.add_argument("-o", "--out", required=True,
                   help="controller artifact output path")
    s.set_defaults(func=cmd_synthesize)

    r = subs.add_parser("simulate", help="run a closed-loop or free simulation")
    r.add_argument("scenario")
    r.add_argument("controller", nargs="?", default=None,
                   help="controller artifact (optional with --free)")
    r.add_argument("--steps", type=int, default=None)
    r.add_argument("--seed", type=int, default=None)
    r.add_argument("--free", action="store_true",
                   help="uncontrolled run (no battery, no curtailment)")
    r.add_argument("--csv", default=None, help="write the trace CSV here")
    r.add_argument("--report", default=None, help="write the report here")
    r.add_argument("--svg", default=None, help="write an SVG chart here")
    r.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
