"""Command-line entry points.

Subcommands: ``calibrate`` runs the simulated bench and fits the
voltage-to-force curve, ``run`` executes a timed command script against
the closed-loop sim and writes a trace, ``replay`` plays a stored trace
back as telemetry, and ``serve`` exposes a live session over TCP and
WebSocket.

Exit codes: 0 success, 1 runtime failure (bench saturation, fit
failure, a safety fault during a scripted run), 2 bad configuration or
usage (unknown keys, malformed profile, script, or trace files).
"""

from __future__ import annotations

import argparse
import asyncio
import sys
import time

from .calibration import (AcquisitionError, CalibrationRig, FitError,
                          acquire_record, curve_to_csv, fit_curve, make_grid,
                          record_to_csv)
from .config import ConfigError, RigConfig, default_config, load_config
from .protocol import Telemetry, encode_telemetry
from .server import RobotServer
from .session import (ScriptError, Session, TraceError, TraceStats,
                      load_script, load_trace, make_standard_script,
                      rep_statistics, run_script, save_trace,
                      trace_statistics)
from .tissue import (TissueProfile, load_profile, make_phantom_profile,
                     make_pig_profile)


def _load_rig_config(path: str | None) -> RigConfig:
    return load_config(path) if path else default_config()


def _resolve_profile(name: str, seed: int) -> TissueProfile:
    if name == "phantom":
        return make_phantom_profile()
    if name == "pig":
        return make_pig_profile(seed)
    try:
        return load_profile(name)
    except OSError as exc:
        raise ConfigError(f"cannot read profile '{name}': {exc}") from None
    except ValueError as exc:
        raise ConfigError(f"bad profile file '{name}': {exc}") from None


def _print_stats(label: str, stats: TraceStats) -> None:
    print(f"{label}: rows={stats.active_rows}"
          f" mean={stats.mean_force_n:.4f}N std={stats.std_force_n:.4f}N"
          f" max={stats.max_force_n:.4f}N depth_max={stats.max_depth_mm:.2f}mm"
          f" span={stats.t_start_ms}..{stats.t_end_ms}ms")


# ------------------------------------------------------------- calibrate


def _cmd_calibrate(args: argparse.Namespace) -> int:
    cfg = _load_rig_config(args.config)
    cal = cfg.calibration
    grid_max = args.grid_max if args.grid_max is not None else cal.grid_max_n
    grid_step = args.grid_step if args.grid_step is not None else cal.grid_step_n
    rig = CalibrationRig(
        beam=cfg.beam, sensor=cfg.sensor,
        hysteresis_half_width_v=cal.hysteresis_half_width_v,
        noise_sigma_v=cal.noise_sigma_v, seed=cal.seed,
    )
    try:
        grid = make_grid(grid_max, grid_step)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    record = acquire_record(rig, grid)
    curve = fit_curve(record)
    print(f"grid: {len(grid)} points, 0..{grid_max:g} N")
    print(f"curve: force = {curve.c0:.9g} + {curve.c1:.9g}*v + {curve.c2:.9g}*v^2")
    print(f"span: {curve.v_min:.4f}..{curve.v_max:.4f} V")
    print(f"residuals: mean={curve.residual_mean_v:.9g} V std={curve.residual_std_v:.9g} V")
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(record_to_csv(record))
        print(f"record written to {args.out}")
    if args.curve_out:
        with open(args.curve_out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(curve_to_csv(curve))
        print(f"curve written to {args.curve_out}")
    return 0


# ------------------------------------------------------------------- run


def _cmd_run(args: argparse.Namespace) -> int:
    cfg = _load_rig_config(args.config)
    profile = _resolve_profile(args.profile, args.seed)
    session = Session(cfg, profile, sensor_seed=args.sensor_seed)
    script = load_script(args.script) if args.script else make_standard_script(args.reps)
    result = run_script(session, script)

    s = result.summary
    print(f"profile: {profile.name}")
    print(f"ticks: {s.ticks} ({session.now_ms} ms sim time)")
    print(f"repetitions completed: {s.completed_reps}")
    print(f"safety faults: {s.safety_faults}  operator stops: {s.operator_stops}")
    for t_ms, event in result.events:
        if event == "fault:safety":
            print(f"safety fault at t={t_ms} ms")
    print(f"final phase: {s.final_phase}")
    _print_stats("pooled", result.stats)
    for i, rs in enumerate(result.rep_stats, start=1):
        _print_stats(f"rep {i}", rs)
    if args.out:
        save_trace(result.trace, args.out)
        print(f"trace written to {args.out} ({len(result.trace)} rows)")
    return 1 if s.safety_faults > 0 else 0


# ---------------------------------------------------------------- replay


def _cmd_replay(args: argparse.Namespace) -> int:
    if args.speed <= 0:
        print("replay speed must be > 0", file=sys.stderr)
        return 2
    rows = load_trace(args.trace)
    if not args.stats_only:
        prev_t = None
        for r in rows:
            if prev_t is not None and args.speed > 0:
                time.sleep(max(0, (r.t_ms - prev_t)) / 1000.0 / args.speed)
            prev_t = r.t_ms
            print(encode_telemetry(Telemetry(
                t_ms=r.t_ms, depth_mm=r.depth_mm, angle_deg=r.angle_deg,
                force_n=r.force_n, raw_v=r.raw_v, phase=r.phase,
                safety=r.safety, last_seq=0,
            )))
    _print_stats("pooled", trace_statistics(rows))
    for i, rs in enumerate(rep_statistics(rows), start=1):
        _print_stats(f"rep {i}", rs)
    return 0


# ----------------------------------------------------------------- serve


async def _serve_async(args: argparse.Namespace) -> None:
    cfg = _load_rig_config(args.config)
    profile = _resolve_profile(args.profile, args.seed)
    session = Session(cfg, profile, sensor_seed=args.sensor_seed)
    server = RobotServer(session, realtime=args.realtime, trace_path=args.out)
    await server.start(args.host, args.port)
    mode = "realtime" if args.realtime else "sim-time lockstep"
    print(f"listening on {args.host}:{server.port} ({mode})", flush=True)
    try:
        await server.serve_forever()
    finally:
        await server.stop()


def _cmd_serve(args: argparse.Namespace) -> int:
    try:
        asyncio.run(_serve_async(args))
    except KeyboardInterrupt:
        print("shutting down")
    return 0


# ------------------------------------------------------------------ main


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swabbot",
        description="teleoperated swab robot simulator and control stack",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("calibrate", help="run the simulated bench and fit the force curve")
    p.add_argument("--config", help="rig configuration file")
    p.add_argument("--grid-max", type=float, default=None, help="top of the force grid in N")
    p.add_argument("--grid-step", type=float, default=None, help="force grid step in N")
    p.add_argument("--out", help="write the raw record CSV here")
    p.add_argument("--curve-out", help="write the fitted curve CSV here")
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("run", help="run a command script against the closed-loop sim")
    p.add_argument("--config", help="rig configuration file")
    p.add_argument("--profile", default="phantom",
                   help="phantom, pig, or a profile file path")
    p.add_argument("--seed", type=int, default=1, help="specimen seed for the pig profile")
    p.add_argument("--sensor-seed", type=int, default=0, help="sensor noise stream seed")
    p.add_argument("--script", help="command script CSV (default: standard protocol)")
    p.add_argument("--reps", type=int, default=3,
                   help="repetitions of the standard protocol when no script is given")
    p.add_argument("--out", help="write the trace CSV here")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("replay", help="play a stored trace back as telemetry lines")
    p.add_argument("trace", help="trace CSV to replay")
    p.add_argument("--speed", type=float, default=50.0,
                   help="playback speed multiplier (must be > 0)")
    p.add_argument("--stats-only", action="store_true", help="skip playback, print statistics")
    p.set_defaults(func=_cmd_replay)

    p = sub.add_parser("serve", help="expose a live session over TCP/WebSocket")
    p.add_argument("--config", help="rig configuration file")
    p.add_argument("--profile", default="phantom",
                   help="phantom, pig, or a profile file path")
    p.add_argument("--seed", type=int, default=1, help="specimen seed for the pig profile")
    p.add_argument("--sensor-seed", type=int, default=0, help="sensor noise stream seed")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    p.add_argument("--realtime", action="store_true",
                   help="drive the session from the wall clock instead of client lockstep")
    p.add_argument("--out", help="write the session trace CSV here on exit")
    p.set_defaults(func=_cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ScriptError, TraceError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except (AcquisitionError, FitError) as exc:
        print(f"calibration failed: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
