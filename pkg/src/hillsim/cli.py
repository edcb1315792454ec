"""``hillsim`` command line: generate, scale, resample, simulate, validate.

Every command writes a ``<output>.manifest.json`` next to its primary output
holding the fully resolved argument list; ``hillsim rerun --manifest FILE``
replays it. Exit codes: 0 success, 2 validation or bounds failure, 1 I/O or
schema errors.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .control import GainSet
from .cw import (
    EARTH_MEAN_MOTION,
    OrbitalContext,
    bk_validation_report,
    nmt_initial_conditions,
    propagate_continuous,
    propagate_discrete,
)
from .docking import DockingConfig, PDDockingPolicy, ZeroPolicy, run_closed_loop, safe_random_initial_state
from .errors import BoundsError, HillsimError, SchemaError
from .io import (
    atomic_write_text,
    dump_json,
    gains_from_kv,
    params_from_kv,
    plot_data_csv,
    read_kv,
    read_trajectory,
    read_waypoints,
    write_metrics,
    write_simlog,
    write_trajectory,
    write_waypoints,
)
from .plant import DroneParams
from .scaling import LabVolume, ScaleConfig, check_bounds, resample_waypoints, scale_to_lab
from .simulation import SimConfig, SwarmMember, compute_metrics, run_swarm, run_tracking

log = logging.getLogger("hillsim")

EXIT_OK, EXIT_IO, EXIT_VALIDATION = 0, 1, 2
SEED_ENV = "HILLSIM_SEED"


class ValidationFailure(Exception):
    """Command finished its outputs but the result failed a check (exit 2)."""


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw.strip() == "":
        return 0
    try:
        return int(raw)
    except ValueError:
        raise SchemaError(f"{SEED_ENV}={raw!r} is not an integer") from None


def _manifest_path(out) -> Path:
    return Path(str(out) + ".manifest.json")


def _write_manifest(args, argv, inputs, outputs, seed=None) -> None:
    config = {k: v for k, v in vars(args).items() if k not in ("func", "config")}
    doc = {
        "tool": "hillsim",
        "version": __version__,
        "command": args.command,
        "argv": argv,
        "config": config,
        "inputs": [str(p) for p in inputs],
        "outputs": [str(p) for p in outputs],
        "seed": seed,
    }
    atomic_write_text(_manifest_path(outputs[0]), dump_json(doc))


# commands

def cmd_nmt_gen(args, argv):
    ctx = OrbitalContext(args.n, args.mass)
    ic = nmt_initial_conditions(args.x0, args.vx0, args.z0, args.vz0, ctx)
    span = args.periods * ctx.period
    if args.samples < 2:
        raise SchemaError("--samples must be >= 2")
    times = np.linspace(0.0, span, args.samples)
    if args.method == "rk45":
        traj = propagate_continuous(ic, None, ctx, (0.0, span), args.rtol, args.atol, t_eval=times)
    else:
        dt = span / (args.samples - 1)
        traj = propagate_discrete(ic, None, ctx, dt, args.samples - 1)
    write_trajectory(args.out, traj, args.format)
    _write_manifest(args, argv, [], [args.out])
    log.info("wrote %d samples over %.3f s to %s", len(traj), span, args.out)


def cmd_dock_gen(args, argv):
    ctx = OrbitalContext(args.n, args.mass)
    seed = _default_seed() if args.seed is None else args.seed
    cfg = DockingConfig(
        horizon=args.horizon, dt=args.dt, success_radius=args.success_radius,
        v_max=args.v_max, v_slope=args.v_slope, r_min=args.r_min, r_max=args.r_max, seed=seed,
    )
    ic = np.array(args.ic, dtype=float) if args.ic is not None else safe_random_initial_state(cfg, ctx)
    if args.policy == "pd":
        policy = PDDockingPolicy(args.kp, args.kd, ctx.m, args.thrust_cap)
    else:
        policy = ZeroPolicy(args.thrust_cap)
    ep = run_closed_loop(policy, ic, ctx, cfg)
    write_trajectory(args.out, ep.trajectory, args.format)
    summary_path = args.summary or str(args.out) + ".summary.json"
    summary = {"policy": args.policy, "seed": seed, "initial_state": ic.tolist(), **ep.summary()}
    atomic_write_text(summary_path, dump_json(summary))
    _write_manifest(args, argv, [], [args.out, summary_path], seed)
    log.info("docked=%s time_to_dock=%s", summary["success"], summary["time_to_dock"])


def cmd_scale(args, argv):
    traj = read_trajectory(args.inp)
    span = traj.span if args.source_span is None else args.source_span
    cfg = ScaleConfig(args.duration, span, args.distance_factor)
    vol = LabVolume(z_offset=args.z_offset)
    lab = scale_to_lab(traj, cfg, vol)
    write_trajectory(args.out, lab, args.format)
    _write_manifest(args, argv, [args.inp], [args.out])


def _volume(args) -> LabVolume:
    x, y, z = args.volume
    return LabVolume(x, y, z, args.z_offset)


def _violation_listing(bad) -> list[dict]:
    return [{"index": v.index, "axis": v.axis, "value": v.value} for v in bad]


def cmd_waypoints(args, argv):
    traj = read_trajectory(args.inp)
    wps = resample_waypoints(traj, args.rate, args.duration)
    bad = check_bounds(wps, _volume(args))
    write_waypoints(args.out, wps)
    report_path = args.bounds_report or str(args.out) + ".bounds.json"
    atomic_write_text(report_path, dump_json({"ok": not bad, "count": len(wps), "violations": _violation_listing(bad)}))
    _write_manifest(args, argv, [args.inp], [args.out, report_path])
    if bad:
        for v in bad[:20]:
            print(f"bounds violation: index {v.index} axis {v.axis} value {v.value!r}", file=sys.stderr)
        if len(bad) > 20:
            print(f"... {len(bad) - 20} more", file=sys.stderr)
        raise ValidationFailure(f"{len(bad)} waypoint(s) outside the flight volume")


def _load_gains(path) -> GainSet:
    return GainSet() if path is None else gains_from_kv(read_kv(path))


def _load_params(path) -> DroneParams:
    return DroneParams() if path is None else params_from_kv(read_kv(path))


def cmd_simulate(args, argv):
    wps = read_waypoints(args.waypoints)
    cfg = SimConfig(args.rate, args.physics_rate, args.duration)
    sim = run_tracking(wps, _load_params(args.params), _load_gains(args.gains), cfg,
                       _volume(args), args.force_bounds)
    metrics = compute_metrics(sim)
    outputs = [args.out_log]
    write_simlog(args.out_log, sim)
    if args.out_metrics:
        write_metrics(args.out_metrics, metrics)
        outputs.append(args.out_metrics)
    if args.out_plot:
        atomic_write_text(args.out_plot, plot_data_csv(sim))
        outputs.append(args.out_plot)
    inputs = [p for p in (args.waypoints, args.gains, args.params) if p]
    _write_manifest(args, argv, inputs, outputs)
    log.info("rms %s, final %.4g m", metrics.rms, metrics.final_error)


def _safe_name(uri: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]+", "_", uri).strip("_") or "drone"


def cmd_swarm(args, argv):
    mpath = Path(args.manifest)
    doc = json.loads(mpath.read_text())
    if not isinstance(doc, dict) or not isinstance(doc.get("drones"), list):
        raise SchemaError(f"{mpath}: expected an object with a 'drones' list")
    base = mpath.parent

    def rel(p):
        return None if p is None else str(base / p)

    members, inputs = [], [str(mpath)]
    for i, d in enumerate(doc["drones"]):
        if "uri" not in d or "waypoints" not in d:
            raise SchemaError(f"{mpath}: drone {i} needs 'uri' and 'waypoints'")
        wp = rel(d["waypoints"])
        inputs.append(wp)
        members.append(SwarmMember(str(d["uri"]), read_waypoints(wp),
                                   _load_gains(rel(d.get("gains"))), _load_params(rel(d.get("params")))))
    cfg = SimConfig(float(doc.get("rate", 48.0)), float(doc.get("physics_rate", 240.0)), doc.get("duration"))
    out_dir = Path(args.out_dir or base / doc.get("out_dir", "swarm_out"))
    logs = run_swarm(members, cfg, LabVolume(), bool(doc.get("force_bounds", False)) or args.force_bounds,
                     workers=args.workers)
    outputs, summary = [], {}
    used = set()
    for uri, sim in logs.items():
        name = _safe_name(uri)
        if name in used:
            raise SchemaError(f"URIs map to the same file name {name!r}")
        used.add(name)
        log_path = out_dir / f"{name}.log.csv"
        met_path = out_dir / f"{name}.metrics.json"
        metrics = compute_metrics(sim)
        write_simlog(log_path, sim)
        write_metrics(met_path, metrics, {"uri": uri})
        outputs += [log_path, met_path]
        summary[uri] = metrics.as_dict()
    summary_path = out_dir / "swarm_metrics.json"
    atomic_write_text(summary_path, dump_json(summary))
    _write_manifest(args, argv, inputs, [summary_path, *outputs])


def cmd_validate_bk(args, argv):
    report = bk_validation_report(OrbitalContext(args.n, args.mass), args.dt, args.threshold)
    if args.out:
        atomic_write_text(args.out, report)
        _write_manifest(args, argv, [], [args.out])
    else:
        sys.stdout.write(report)


def cmd_rerun(args, argv):
    doc = json.loads(Path(args.manifest).read_text())
    if doc.get("tool") != "hillsim" or "argv" not in doc:
        raise SchemaError(f"{args.manifest}: not a hillsim run manifest")
    if doc.get("version") != __version__:
        log.warning("manifest written by hillsim %s, running %s", doc.get("version"), __version__)
    return main(doc["argv"])


# parser

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH",
                   help="plain-text key = value file overriding this command's defaults "
                        "(keys are option names with underscores)")


def _volume_args(p) -> None:
    p.add_argument("--volume", nargs=3, type=float, default=[4.0, 3.0, 2.5], metavar=("X", "Y", "Z"),
                   help="flight volume extents [m] (default 4 3 2.5)")
    p.add_argument("--z-offset", type=float, default=1.0, help="hover-centre altitude [m] (default 1.0)")


def _orbit_args(p) -> None:
    p.add_argument("--n", type=float, default=EARTH_MEAN_MOTION, help="chief mean motion [rad/s]")
    p.add_argument("--mass", type=float, default=1.0, help="deputy mass [kg]")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hillsim", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"hillsim {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("nmt-gen", help="natural motion trajectory in Hill's frame (space scale)")
    _common(p)
    p.add_argument("--x0", type=float, default=800.0, help="initial radial offset [m]")
    p.add_argument("--vx0", type=float, default=0.16, help="initial radial velocity [m/s]")
    p.add_argument("--z0", type=float, default=0.0, help="initial out-of-plane offset [m]")
    p.add_argument("--vz0", type=float, default=0.0, help="initial out-of-plane velocity [m/s]")
    _orbit_args(p)
    p.add_argument("--periods", type=float, default=3.0, help="number of orbital periods [-]")
    p.add_argument("--samples", type=int, default=3001, help="output samples over the span [-]")
    p.add_argument("--method", choices=["rk45", "discrete"], default="rk45", help="propagator")
    p.add_argument("--rtol", type=float, default=1e-9, help="RK45 relative tolerance [-]")
    p.add_argument("--atol", type=float, default=1e-12, help="RK45 absolute tolerance [m, m/s]")
    p.add_argument("--format", choices=["csv", "json", "record"], help="output format (default from suffix)")
    p.add_argument("--out", required=True, help="output trajectory file")
    p.set_defaults(func=cmd_nmt_gen)

    p = sub.add_parser("dock-gen", help="closed-loop docking trajectory (space scale)")
    _common(p)
    p.add_argument("--policy", choices=["zero", "pd"], default="pd", help="thrust policy")
    p.add_argument("--seed", type=int, default=None, help=f"RNG seed [-] (default ${SEED_ENV} or 0)")
    p.add_argument("--horizon", type=float, default=10.0, help="episode length [s]")
    p.add_argument("--dt", type=float, default=0.1, help="control step [s]")
    p.add_argument("--success-radius", type=float, default=0.5, help="docking radius [m]")
    p.add_argument("--v-max", type=float, default=0.5, help="initial-velocity safety limit [m/s]")
    p.add_argument("--v-slope", type=float, default=None, help="distance-dependent limit slope [1/s]")
    p.add_argument("--r-min", type=float, default=50.0, help="inner sampling radius [m]")
    p.add_argument("--r-max", type=float, default=150.0, help="outer sampling radius [m]")
    p.add_argument("--ic", type=float, nargs=6, default=None, metavar="V",
                   help="explicit initial state x y z [m] vx vy vz [m/s] instead of sampling")
    p.add_argument("--kp", type=float, default=1.0, help="PD position gain [1/s^2]")
    p.add_argument("--kd", type=float, default=2.0, help="PD velocity gain [1/s]")
    p.add_argument("--thrust-cap", type=float, default=100.0, help="thrust magnitude cap [N]")
    _orbit_args(p)
    p.add_argument("--format", choices=["csv", "json", "record"], help="output format (default from suffix)")
    p.add_argument("--summary", default=None, help="episode summary JSON (default <out>.summary.json)")
    p.add_argument("--out", required=True, help="output trajectory file")
    p.set_defaults(func=cmd_dock_gen)

    p = sub.add_parser("scale", help="space-scale trajectory to lab scale")
    _common(p)
    p.add_argument("--in", dest="inp", required=True, help="space-frame trajectory file")
    p.add_argument("--distance-factor", type=float, default=4000.0, help="space metres per lab metre [-]")
    p.add_argument("--duration", type=float, default=10.0, help="lab run time [s]")
    p.add_argument("--source-span", type=float, default=None,
                   help="space time mapped onto --duration [s] (default: whole trajectory)")
    p.add_argument("--z-offset", type=float, default=1.0, help="added to lab z [m]")
    p.add_argument("--format", choices=["csv", "json", "record"], help="output format (default from suffix)")
    p.add_argument("--out", required=True, help="output lab trajectory file")
    p.set_defaults(func=cmd_scale)

    p = sub.add_parser("waypoints", help="fixed-rate waypoint list with bounds report")
    _common(p)
    p.add_argument("--in", dest="inp", required=True, help="lab-frame trajectory file")
    p.add_argument("--rate", type=float, default=48.0, help="control rate [Hz]")
    p.add_argument("--duration", type=float, default=10.0, help="run time [s]")
    _volume_args(p)
    p.add_argument("--bounds-report", default=None, help="bounds report JSON (default <out>.bounds.json)")
    p.add_argument("--out", required=True, help="output waypoint file (.csv or .json)")
    p.set_defaults(func=cmd_waypoints)

    p = sub.add_parser("simulate", help="track a waypoint list with the surrogate drone")
    _common(p)
    p.add_argument("--waypoints", required=True, help="waypoint file (.csv or .json)")
    p.add_argument("--gains", default=None, help="controller gains key = value file")
    p.add_argument("--params", default=None, help="drone parameter key = value file")
    p.add_argument("--rate", type=float, default=48.0, help="control rate [Hz]")
    p.add_argument("--physics-rate", type=float, default=240.0, help="plant integration rate [Hz]")
    p.add_argument("--duration", type=float, default=None, help="run time [s] (default: all waypoints)")
    _volume_args(p)
    p.add_argument("--force-bounds", action="store_true", help="fly even if waypoints leave the volume")
    p.add_argument("--out-log", required=True, help="simulation log (.csv or .json)")
    p.add_argument("--out-metrics", default=None, help="tracking metrics JSON [m]")
    p.add_argument("--out-plot", default=None, help="waypoint/position pairs CSV for plotting")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("swarm", help="simulate several drones from a URI assignment document")
    _common(p)
    p.add_argument("--manifest", required=True, help="JSON assignment: drones[{uri, waypoints, gains?, params?}]")
    p.add_argument("--out-dir", default=None, help="output directory (default from the assignment)")
    p.add_argument("--workers", type=int, default=1, help="parallel simulations [-]")
    p.add_argument("--force-bounds", action="store_true", help="fly even if waypoints leave the volume")
    p.set_defaults(func=cmd_swarm)

    p = sub.add_parser("validate-bk", help="published B_k vs quadrature oracle report")
    _common(p)
    p.add_argument("--n", type=float, default=EARTH_MEAN_MOTION, help="chief mean motion [rad/s]")
    p.add_argument("--mass", type=float, default=1.0, help="deputy mass [kg]")
    p.add_argument("--dt", type=float, default=10.0, help="discretisation step [s]")
    p.add_argument("--threshold", type=float, default=1e-6, help="listing threshold [abs]")
    p.add_argument("--out", default=None, help="report file (default: stdout)")
    p.set_defaults(func=cmd_validate_bk)

    p = sub.add_parser("rerun", help="replay a run manifest")
    p.add_argument("--manifest", required=True, help="*.manifest.json written by an earlier run")
    p.set_defaults(func=cmd_rerun)
    return parser


def _subparser(parser, name) -> argparse.ArgumentParser:
    for action in parser._actions:
        if isinstance(action, argparse._SubParsersAction):
            return action.choices[name]
    raise KeyError(name)


def _apply_config(parser, args, argv):
    sp = _subparser(parser, args.command)
    kv = read_kv(args.config)
    actions = {a.dest: a for a in sp._actions if a.option_strings and a.dest not in ("help", "config")}
    defaults = {}
    for key, raw in kv.items():
        dest = key.replace("-", "_")
        if dest not in actions:
            raise SchemaError(f"{args.config}: unknown option {key!r} for {args.command}")
        a = actions[dest]
        if isinstance(a, argparse._StoreTrueAction):
            defaults[dest] = raw.strip().lower() in ("1", "true", "yes", "on")
        elif a.nargs not in (None, "?"):
            conv = a.type or str
            defaults[dest] = [conv(v) for v in raw.replace(",", " ").split()]
        else:
            defaults[dest] = (a.type or str)(raw)
    sp.set_defaults(**defaults)
    return parser.parse_args(argv)


def _resolved_argv(parser, args) -> list[str]:
    """Explicit argument list reproducing ``args`` without config files or env."""
    sp = _subparser(parser, args.command)
    out = [args.command]
    for a in sp._actions:
        if not a.option_strings or a.dest in ("help", "config"):
            continue
        v = getattr(args, a.dest, None)
        flag = a.option_strings[-1]
        if isinstance(a, argparse._StoreTrueAction):
            if v:
                out.append(flag)
        elif v is None:
            continue
        elif isinstance(v, (list, tuple)):
            out += [flag, *(repr(x) if isinstance(x, float) else str(x) for x in v)]
        else:
            out += [flag, repr(v) if isinstance(v, float) else str(v)]
    return out


def main(argv=None) -> int:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if getattr(args, "config", None):
            args = _apply_config(parser, args, argv)
        if args.command == "dock-gen" and args.seed is None:
            args.seed = _default_seed()
        resolved = argv if args.command == "rerun" else _resolved_argv(parser, args)
        code = args.func(args, resolved)
    except ValidationFailure as exc:
        print(f"hillsim: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except BoundsError as exc:
        for v in exc.violations[:20]:
            print(f"bounds violation: index {v.index} axis {v.axis} value {v.value!r}", file=sys.stderr)
        print(f"hillsim: {exc} (use --force-bounds to fly anyway)", file=sys.stderr)
        return EXIT_VALIDATION
    except SchemaError as exc:
        print(f"hillsim: {exc}", file=sys.stderr)
        return EXIT_IO
    except HillsimError as exc:
        print(f"hillsim: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (OSError, json.JSONDecodeError, UnicodeDecodeError) as exc:
        print(f"hillsim: {exc}", file=sys.stderr)
        return EXIT_IO
    return code or EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
