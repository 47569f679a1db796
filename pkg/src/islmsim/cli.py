"""Command-line interface.

Subcommands: validate, isocline, equilibria, simulate, scenario, stabilize,
portrait.  Data goes to files in the output directory; diagnostics go to the
error stream.  Exit codes: 0 success, 1 validation failure, 2 numerical
failure.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from .config import ConfigError, MODE_NAMES, RunConfig, parse_config
from .dynamics import (
    FoldStallError,
    IntegrationError,
    REDUCED_MODE,
    Trajectory,
    attach_to_branch,
    detect_cycle,
    detect_jumps,
    integrate,
    reduced_simulate,
)
from .geometry import TracingError, find_equilibria, is_curve, trace_lm_isocline
from .model import validate_properties
from .output import (
    RunLockError,
    acquire_run_lock,
    emit_outputs,
    equilibria_document,
    isocline_document,
    release_run_lock,
    simulation_document,
    validation_document,
    write_provenance,
)
from .policy import ScenarioError, apply_scenario, plan_stabilization, run_with_controller
from .svg import render_portrait

import numpy as np

logger = logging.getLogger("islmsim")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="islmsim",
        description="Slow-fast IS-LM simulator: isocline geometry, relaxation "
                    "oscillations, and policy scenarios.")
    parser.add_argument("command",
                        choices=["validate", "isocline", "equilibria", "simulate",
                                 "scenario", "stabilize", "portrait"])
    parser.add_argument("--config", required=True, help="configuration file (JSON)")
    parser.add_argument("--out", default="islm-out", help="output directory")
    parser.add_argument("--format", default=None,
                        help="comma-separated outputs: csv,json,svg")
    parser.add_argument("--mode", choices=["full", "reduced"], default=None,
                        help="override the simulation mode")
    parser.add_argument("--epsilon", type=float, default=None,
                        help="override the slow-fast ratio")
    parser.add_argument("--quiet", action="store_true", help="suppress progress logs")
    return parser


def _configure_logging(quiet: bool) -> None:
    level_name = os.environ.get("ISLM_LOG", "INFO" if not quiet else "ERROR").upper()
    level = getattr(logging, level_name, logging.INFO)
    if quiet:
        level = max(level, logging.ERROR)
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="islmsim: %(levelname)s: %(message)s")


def _apply_overrides(config: RunConfig, args) -> RunConfig:
    from dataclasses import replace

    from .model import ModelParams, ModelSpec

    model = config.model
    if args.epsilon is not None:
        p = model.params
        model = ModelSpec(
            params=ModelParams(alpha=p.alpha, beta=p.beta, epsilon=args.epsilon,
                               m_stock=p.m_stock,
                               maturity_premium=p.maturity_premium,
                               expected_inflation=p.expected_inflation),
            is_block=model.is_block, money=model.money)
    simulate = config.simulate
    scenario = config.scenario
    if args.mode is not None:
        mode = MODE_NAMES[args.mode]
        if simulate is not None:
            simulate = replace(simulate, mode=mode)
        if scenario is not None:
            scenario = replace(scenario, mode=mode)
    formats = config.formats
    if args.format is not None:
        formats = tuple(f.strip() for f in args.format.split(",") if f.strip())
        bad = set(formats) - {"csv", "json", "svg"}
        if bad:
            raise ConfigError(f"unknown format(s) {sorted(bad)} in --format")
    return RunConfig(model=model, domain=config.domain, simulate=simulate,
                     scenario=scenario, stabilize=config.stabilize,
                     formats=formats)


def run_command(argv: list[str] | None = None) -> int:
    """Parse arguments, execute one subcommand, and return the exit status."""
    args = _build_parser().parse_args(argv)
    _configure_logging(args.quiet)
    try:
        config = parse_config(args.config)
        config = _apply_overrides(config, args)
    except ConfigError as exc:
        print(f"islmsim: config error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION

    out_dir = Path(args.out)
    try:
        lock = acquire_run_lock(out_dir)
    except RunLockError as exc:
        print(f"islmsim: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    try:
        return _dispatch(args.command, config, out_dir)
    except (ConfigError, ScenarioError) as exc:
        print(f"islmsim: validation failure: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (TracingError, IntegrationError, FoldStallError) as exc:
        print(f"islmsim: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    finally:
        release_run_lock(lock)


def _dispatch(command: str, config: RunConfig, out_dir: Path) -> int:
    dom = config.domain
    spec = config.model
    write_provenance(out_dir, config.resolved(), command)
    docs: dict = {}
    trajs: dict = {}
    svgs: dict = {}
    want = set(config.formats)
    status = EXIT_OK

    if command == "validate":
        report = validate_properties(spec, dom.y_range, dom.r_range, dom.grid_n)
        docs["validation"] = validation_document(report)
        if not report.passed:
            status = EXIT_VALIDATION
            for c in report.failures():
                print(f"islmsim: failed: {c.condition} (worst {c.worst_value:g} at "
                      f"y={c.worst_point[0]:g}, r={c.worst_point[1]:g}) {c.detail}",
                      file=sys.stderr)
        else:
            logger.info("all property checks passed")

    elif command in ("isocline", "equilibria", "portrait"):
        iso = trace_lm_isocline(spec, dom.y_range, dom.y_steps, dom.r_range,
                                dom.scan_n)
        eqs = find_equilibria(spec, dom.y_range, iso)
        if command == "isocline":
            docs["isocline"] = isocline_document(iso, eqs)
        elif command == "equilibria":
            docs["equilibria"] = equilibria_document(eqs)
        else:
            traj, jumps = _maybe_simulate(config, spec, dom, iso)
            svgs["portrait"] = render_portrait(
                iso, is_curve(spec), eqs, traj, jumps,
                dom.y_range, dom.r_range,
                title=f"phase portrait (spec {spec.spec_id})")
            if traj is not None and "json" in want:
                cycle = detect_cycle(traj, spec)
                docs["simulation"] = simulation_document(traj, jumps, cycle, None)

    elif command == "simulate":
        if config.simulate is None:
            raise ConfigError("the 'simulate' section is required for this command")
        traj, jumps, cycle = _run_simulation(config, spec, dom)
        docs["simulation"] = simulation_document(
            traj, jumps, cycle, "trajectory.csv" if "csv" in want else None)
        if "csv" in want:
            trajs["trajectory"] = (traj, jumps)

    elif command == "scenario":
        if config.scenario is None:
            raise ConfigError("the 'scenario' section is required for this command")
        so = config.scenario
        result = apply_scenario(spec, so.scenario, so.y0, so.r0, so.mode,
                                y_range=dom.y_range, r_range=dom.r_range,
                                y_steps=dom.y_steps, scan_n=dom.scan_n,
                                stride=so.stride)
        traj = result.trajectory
        cycle = detect_cycle(traj, result.final_spec)
        doc = simulation_document(traj, traj.jumps, cycle,
                                  "trajectory.csv" if "csv" in want else None)
        doc["kind"] = "scenario"
        doc["events"] = result.events
        docs["scenario"] = doc
        if "csv" in want:
            trajs["trajectory"] = (traj, traj.jumps)

    elif command == "stabilize":
        if config.stabilize is None:
            raise ConfigError("the 'stabilize' section is required for this command")
        st = config.stabilize
        iso = trace_lm_isocline(spec, dom.y_range, dom.y_steps, dom.r_range,
                                dom.scan_n)
        folds = [f for f in iso.folds if f.kind == st.fold]
        if not folds:
            raise ScenarioError(f"the isocline has no {st.fold} fold")
        fold = folds[0]
        plan = plan_stabilization(spec, fold, st.instrument, iso,
                                  protect_to_y=st.protect_to_y)
        report = run_with_controller(spec, st.ramp, plan, st.y0, st.r0,
                                     y_range=dom.y_range, r_range=dom.r_range,
                                     mode=st.mode, margin_frac=st.margin_frac,
                                     y_steps=dom.y_steps, scan_n=dom.scan_n)
        doc = {
            "schema_version": "1",
            "kind": "stabilize",
            "fold": {"y": fold.y, "r": fold.r, "kind": fold.kind},
            "plan": {"instrument": plan.instrument, "delta": plan.delta,
                     "mode": plan.mode, "matched": plan.matched,
                     "residual": plan.residual, "diagnosis": plan.diagnosis,
                     "jump_direction": plan.jump_direction,
                     "r_target": plan.r_target},
            "comparison": report.to_dict(),
        }
        docs["stabilize"] = doc
        if "csv" in want:
            trajs["uncontrolled"] = (report.uncontrolled.trajectory,
                                     report.uncontrolled.trajectory.jumps)
            trajs["controlled"] = (report.controlled.trajectory,
                                   report.controlled.trajectory.jumps)

    if "json" not in want:
        docs = {}
    written = emit_outputs(out_dir, docs, trajs, svgs)
    for path in written:
        logger.info("wrote %s", path)
    return status


def _run_simulation(config: RunConfig, spec, dom):
    so = config.simulate
    if so.t_end <= 0.0:
        traj = Trajectory(np.empty(0), np.empty(0), np.empty(0), so.mode,
                          spec.spec_id)
        return traj, (), None
    if so.mode == REDUCED_MODE:
        iso = trace_lm_isocline(spec, dom.y_range, dom.y_steps, dom.r_range,
                                dom.scan_n)
        branch, _ = attach_to_branch(spec, iso, so.y0, so.r0)
        traj = reduced_simulate(spec, so.y0, branch, so.t_end, iso,
                                stride=so.stride)
        jumps = traj.jumps
    else:
        traj = integrate(spec, so.y0, so.r0, so.t_end, rtol=so.rtol,
                         atol=so.atol, stride=so.stride)
        jumps = tuple(detect_jumps(traj, spec))
        traj.jumps = jumps
    cycle = detect_cycle(traj, spec)
    return traj, jumps, cycle


def _maybe_simulate(config: RunConfig, spec, dom, iso):
    if config.simulate is None and config.scenario is None:
        return None, ()
    if config.scenario is not None:
        so = config.scenario
        result = apply_scenario(spec, so.scenario, so.y0, so.r0, so.mode,
                                y_range=dom.y_range, r_range=dom.r_range,
                                y_steps=dom.y_steps, scan_n=dom.scan_n,
                                stride=so.stride, validate=False)
        return result.trajectory, result.trajectory.jumps
    traj, jumps, _ = _run_simulation(config, spec, dom)
    return traj, jumps


def main(argv: list[str] | None = None) -> int:
    return run_command(argv)


if __name__ == "__main__":
    sys.exit(main())
