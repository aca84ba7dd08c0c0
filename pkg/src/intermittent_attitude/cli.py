"""Command-line entry point.

Subcommands: ``run``, ``compare``, ``params-check`` and ``verify-bounds``.
Exit codes: 0 success, 1 config error, 2 numerical divergence,
3 verification failure, 64 usage error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import InvalidConstantsError, envelope_check, judgment_exceedances, residual_bounds, stability_constants
from .config import ConfigError, default_config_path, load_config
from .simkit import SimulationDiverged, certificate_constants, initial_q_e0, run_periodic_baseline, run_scenario
from .trigger import write_events_jsonl

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_DIVERGED = 2
EXIT_VERIFY = 3
EXIT_USAGE = 64

log = logging.getLogger("intermittent_attitude")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="intermittent-attitude", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    def add(name, help_text, out_dir=True):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", type=Path, default=None, help="scenario JSON (default: shipped scenario)")
        if out_dir:
            p.add_argument("--out-dir", type=Path, required=True, help="directory for output files")
        return p

    add("run", "run one scenario; writes telemetry.csv, events.jsonl, summary.json")
    add("compare", "run the intermittent scenario and its periodic baseline; writes comparison.json")
    p = add("params-check", "print certificate constants and positivity flags", out_dir=False)
    p.add_argument("--q-e0-min", type=float, default=None, help="lower bound on |q_e0| (default: initial value)")
    p = add("verify-bounds", "run with unrestricted actuation and check the Lyapunov envelope")
    p.add_argument("--q-e0-min", type=float, default=None, help="lower bound on |q_e0| (default: initial value)")
    return parser


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _json_safe(obj):
    # NaN and inf are not valid JSON
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj


def _dump(obj) -> str:
    return json.dumps(_json_safe(json.loads(json.dumps(obj, default=_json_default))), indent=2) + "\n"


def write_outputs(out_dir: Path, writers: dict) -> None:
    """Write every file to a temporary name first, then rename all of them.

    ``writers`` maps file names to callables taking a path. A failure before
    the renames leaves no output file behind.
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    staged = []
    try:
        for name, write in writers.items():
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=out_dir)
            os.close(fd)
            staged.append((tmp, out_dir / name))
            write(tmp)
        for tmp, final in staged:
            os.replace(tmp, final)
    finally:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)


def _text_writer(text: str):
    def write(path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)

    return write


def _load(args):
    return load_config(args.config if args.config is not None else default_config_path())


def cmd_run(args) -> int:
    sc = _load(args).build()
    result = run_periodic_baseline(sc) if sc.controller_kind == "periodic" else run_scenario(sc)
    write_outputs(
        args.out_dir,
        {
            "telemetry.csv": result.telemetry.write_csv,
            "events.jsonl": lambda p: write_events_jsonl(result.events, p),
            "summary.json": _text_writer(_dump(result.summary.to_dict())),
        },
    )
    s = result.summary
    print(f"action_count={s.action_count} final_error_deg={s.pointing_error_final_deg:.4f} max_omega_s={s.max_omega_s:.5f}")
    for w in s.warnings:
        print(f"warning: {w}")
    return EXIT_OK


def cmd_compare(args) -> int:
    sc = replace(_load(args).build(), controller_kind="intermittent")
    ic = run_scenario(sc)
    pc = run_periodic_baseline(sc)
    a, b = ic.summary, pc.summary
    comparison = {
        "intermittent": {"action_count": a.action_count, "pointing_error_final_deg": a.pointing_error_final_deg},
        "periodic": {"action_count": b.action_count, "pointing_error_final_deg": b.pointing_error_final_deg},
        "action_count_ratio": a.action_count / b.action_count if b.action_count else None,
        "accuracy_delta_deg": a.pointing_error_final_deg - b.pointing_error_final_deg,
    }
    write_outputs(
        args.out_dir,
        {
            "summary_intermittent.json": _text_writer(_dump(a.to_dict())),
            "summary_periodic.json": _text_writer(_dump(b.to_dict())),
            "comparison.json": _text_writer(_dump(comparison)),
        },
    )
    print(f"intermittent actions={a.action_count} periodic actions={b.action_count} "
          f"ratio={comparison['action_count_ratio']:.3f} accuracy_delta_deg={comparison['accuracy_delta_deg']:.4f}")
    return EXIT_OK


def cmd_params_check(args) -> int:
    sc = _load(args).build()
    consts = certificate_constants(sc, args.q_e0_min)
    for name in ("C1", "C2", "C3", "C_t", "C_d", "B_omega", "q_e0_min", "D0", "N_k", "N_f"):
        print(f"{name:9s} = {getattr(consts, name):.6g}")
    for name, ok in consts.valid.items():
        print(f"{name:9s} > 0 : {'ok' if ok else 'VIOLATED'}")
    if consts.all_valid:
        r_on, r_off, r_final = residual_bounds(consts, sc.inertia.lambda_max, sc.trigger)
        print(f"r_on = {r_on:.6g}  r_off = {r_off:.6g}  r_final = {r_final:.6g}")
        return EXIT_OK
    print("parameter check failed: " + ", ".join(consts.failed()))
    return EXIT_VERIFY


def cmd_verify_bounds(args) -> int:
    sc = _load(args).build()
    sc = replace(sc, controller_kind="intermittent", trigger=replace(sc.trigger, actuation_grid=0.0))
    consts = certificate_constants(sc, args.q_e0_min)
    report = {"constants": consts.to_dict(), "positivity_flags": consts.valid}
    if not consts.all_valid:
        report["error"] = "certificate constants invalid: " + ", ".join(consts.failed())
        write_outputs(args.out_dir, {"verification.json": _text_writer(_dump(report))})
        print(report["error"])
        return EXIT_VERIFY

    result = run_scenario(sc)
    trace = result.telemetry.lyapunov_trace()
    env = envelope_check(trace, result.events, consts, sc.trigger)
    judg = judgment_exceedances(trace, result.turn_on_requests, result.events, sc.trigger.actuation_grid)
    q_min_run = float(np.min(np.abs(result.telemetry["q_e0"])))
    post_hoc = stability_constants(sc.gains, q_min_run, sc.inertia, sc.trigger)
    r_on, r_off, r_final = residual_bounds(consts, sc.inertia.lambda_max, sc.trigger)
    report.update(
        {
            "residual_bounds": {"r_on": r_on, "r_off": r_off, "r_final": r_final},
            "violation_count": env.violation_count,
            "violations": env.violations,
            "min_margin": env.min_margin,
            "T_maxoff": env.T_maxoff,
            "segments": env.segment_table(),
            "judgment_exceedances_outside_windows": judg["outside_windows"],
            "q_e0_min_observed": q_min_run,
            "constants_observed": post_hoc.to_dict(),
        }
    )
    write_outputs(args.out_dir, {"verification.json": _text_writer(_dump(report))})
    failed = env.violation_count > 0 or bool(judg["outside_windows"])
    print(f"violations={env.violation_count} min_margin={env.min_margin:.6g} "
          f"judgment_exceedances={len(judg['outside_windows'])} segments={len(env.segments)}")
    return EXIT_VERIFY if failed else EXIT_OK


COMMANDS = {"run": cmd_run, "compare": cmd_compare, "params-check": cmd_params_check, "verify-bounds": cmd_verify_bounds}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ValueError, InvalidConstantsError) as exc:
        # domain checks that pydantic cannot express
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SimulationDiverged as exc:
        print(f"diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


if __name__ == "__main__":
    sys.exit(main())
