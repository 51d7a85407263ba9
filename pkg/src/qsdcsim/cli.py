"""Command-line front end for reproducible runs and figure-data export.

Subcommands map onto the sweep, simulation and frame-pipeline modules;
curve tables are written as CSV plus JSON, structured results go to
stdout as JSON.  Every file output is accompanied by a manifest
(<path>.manifest.json) recording the resolved inputs and output
digests; ``replay`` re-runs a manifest and verifies the outputs are
reproduced bit for bit.

Exit codes: 0 success (including explicit null results), 2 usage
errors, 3 computation errors.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import tempfile
from typing import Dict, List, Optional

import numpy as np

from . import __version__
from .coding import IdentityCodec, RepetitionCodec, SyntheticChannel, run_frame_pipeline
from .mc import run_campaign
from .params import (
    InvalidParameterError,
    SystemParams,
    _parse_value,
    load_config,
    system_transmittance,
)
from .rates import gain, x_error
from .sweeps import (
    curve_to_csv,
    curve_to_json,
    dark_count_sweep,
    find_plob_crossing,
    max_distance,
    optimize_intensity,
    rate_curve,
)

CONFIG_ENV_VAR = "QSDCSIM_CONFIG"

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_COMPUTE = 3


# --- helpers -----------------------------------------------------------------

def _atomic_write(path: str, data: str) -> str:
    """Write text atomically; returns the sha256 digest of the bytes."""
    payload = data.encode("utf-8")
    directory = os.path.dirname(os.path.abspath(path)) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    return hashlib.sha256(payload).hexdigest()


def _resolve_params(args: argparse.Namespace) -> SystemParams:
    config = getattr(args, "config", None) or os.environ.get(CONFIG_ENV_VAR)
    overrides: Dict[str, object] = {}
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise InvalidParameterError(f"--set expects key=value, got {item!r}")
        key, raw = (s.strip() for s in item.split("=", 1))
        overrides[key] = _parse_value(key, raw)
    if config:
        return load_config(config, **overrides)
    return SystemParams(**overrides)


def _write_manifest(command: str, args_dict: dict, params: SystemParams,
                    outputs: Dict[str, str], anchor: str) -> None:
    manifest = {
        "tool": "qsdcsim",
        "version": __version__,
        "command": command,
        "args": args_dict,
        "params": params.to_dict(),
        "outputs": outputs,
    }
    _atomic_write(anchor + ".manifest.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")


def _emit(obj: dict) -> None:
    json.dump(obj, sys.stdout, indent=2, sort_keys=True, allow_nan=False, default=_jsonable)
    sys.stdout.write("\n")


def _jsonable(value):
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return float(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f"not JSON serializable: {type(value)}")


def _finite_or_none(x: Optional[float]) -> Optional[float]:
    if x is None or not math.isfinite(x):
        return None
    return x


# --- subcommands -------------------------------------------------------------

def cmd_rate_curve(args: argparse.Namespace) -> int:
    params = _resolve_params(args)
    if args.step <= 0:
        raise InvalidParameterError(f"--step must be > 0, got {args.step}")
    if args.dmax < args.dmin or args.dmin < 0:
        raise InvalidParameterError("need 0 <= dmin <= dmax")
    n_steps = int(round((args.dmax - args.dmin) / args.step))
    grid = [args.dmin + i * args.step for i in range(n_steps + 1)]
    points = rate_curve(params, grid)
    csv_path = args.out
    json_path = os.path.splitext(args.out)[0] + ".json"
    outputs = {
        csv_path: _atomic_write(csv_path, curve_to_csv(points)),
        json_path: _atomic_write(json_path, curve_to_json(points)),
    }
    _write_manifest("rate-curve", _args_dict(args), params, outputs, csv_path)
    _emit({"rows": len(points), "csv": csv_path, "json": json_path})
    return EXIT_OK


def cmd_plob_crossing(args: argparse.Namespace) -> int:
    params = _resolve_params(args)
    res = find_plob_crossing(params)
    _emit({
        "crossing_km": res.crossing_km,
        "searched_up_to_km": res.searched_up_to_km,
    })
    return EXIT_OK


def cmd_max_distance(args: argparse.Namespace) -> int:
    params = _resolve_params(args)
    res = max_distance(params)
    _emit({
        "max_distance_km": res.distance_km,
        "at_search_ceiling": res.at_ceiling,
        "positive_rate": res.distance_km is not None,
    })
    return EXIT_OK


def cmd_optimize_u(args: argparse.Namespace) -> int:
    params = _resolve_params(args)
    res = optimize_intensity(params, u_range=(args.umin, args.umax), tolerance=args.tolerance)
    _emit({
        "u_star": res.u_star,
        "d_max_km": res.d_max_km,
        "unimodal_scan": res.unimodal,
    })
    return EXIT_OK


def cmd_sweep_pd(args: argparse.Namespace) -> int:
    params = _resolve_params(args)
    try:
        pd_values = [float(x) for x in args.pd_list.split(",") if x.strip()]
    except ValueError as exc:
        raise InvalidParameterError(f"bad --pd-list: {exc}") from exc
    if not pd_values:
        raise InvalidParameterError("--pd-list is empty")
    grid = [float(d) for d in range(0, int(args.dmax) + 1)]
    curves = dark_count_sweep(params, pd_values, grid)
    outputs: Dict[str, str] = {}
    summary: List[dict] = []
    for curve in curves:
        path = f"{args.out_prefix}_pd{curve.p_d:g}.csv"
        outputs[path] = _atomic_write(path, curve_to_csv(curve.points))
        summary.append({
            "p_d": curve.p_d,
            "file": path,
            "crossing_km": curve.crossing.crossing_km,
            "max_distance_km": curve.max_distance_km,
        })
    _write_manifest("sweep-pd", _args_dict(args), params, outputs, args.out_prefix)
    _emit({"curves": summary})
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace) -> int:
    params = _resolve_params(args)
    if args.pulses < 1:
        raise InvalidParameterError(f"--pulses must be >= 1, got {args.pulses}")
    report = run_campaign(
        params, args.distance, args.pulses, seed=args.seed, shards=args.shards,
        misalignment=args.misalignment, backend=args.backend or None,
        workers=args.workers,
    )
    eta = system_transmittance(params, args.distance)
    q_ref = gain(params.u, eta, params.p_d)
    ex_ref = x_error(params.u, eta, params.p_d,
                     params.misalignment_sin2 if args.misalignment != "none" else 0.0)
    z_q = ((report.q_hat - q_ref) / report.q_se) if report.q_se else None
    z_ex = ((report.ex_hat - ex_ref) / report.ex_se) if report.ex_se else None
    payload = {
        "report": report.to_dict(),
        "analytic": {"Q": q_ref, "EX": ex_ref},
        "z_scores": {"Q": _finite_or_none(z_q), "EX": _finite_or_none(z_ex)},
    }
    if args.out:
        digest = _atomic_write(args.out, json.dumps(payload, indent=2, sort_keys=True,
                                                    default=_jsonable) + "\n")
        _write_manifest("simulate", _args_dict(args), params, {args.out: digest}, args.out)
    _emit(payload)
    return EXIT_OK


def cmd_frame_demo(args: argparse.Namespace) -> int:
    params = _resolve_params(args)
    with open(args.message_file, "rb") as fh:
        message = np.unpackbits(np.frombuffer(fh.read(), dtype=np.uint8))
    channel = SyntheticChannel(delivery_prob=args.delivery, flip_prob=args.qber, ez=args.ez)
    fec = RepetitionCodec(3) if args.fec == "repetition" else IdentityCodec()
    result = run_frame_pipeline(
        message, channel,
        k_i=args.k, n_ci=args.n, r_i=args.r,
        seed=args.seed, fec=fec, f=params.f,
        sacrifice_frac=args.sacrifice,
    )
    payload = result.to_dict()
    payload["message_bits"] = int(message.size)
    payload["seed"] = args.seed
    if result.status == "decode_failed":
        payload["note"] = f"decode failure in frame {result.failed_frame}"
    if args.out:
        digest = _atomic_write(args.out, json.dumps(payload, indent=2, sort_keys=True) + "\n")
        _write_manifest("frame-demo", _args_dict(args), params, {args.out: digest}, args.out)
    _emit(payload)
    return EXIT_OK


def cmd_replay(args: argparse.Namespace) -> int:
    with open(args.manifest, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    replay_argv = [manifest["command"]]
    for key, value in manifest["args"].items():
        if key in ("config", "set"):
            continue
        flag = "--" + key.replace("_", "-")
        if isinstance(value, bool):
            if value:
                replay_argv.append(flag)
        elif value is not None:
            replay_argv.extend([flag, str(value)])
    for key, value in manifest["params"].items():
        replay_argv.extend(["--set", f"{key}={value}"])
    code = main(replay_argv)
    if code != EXIT_OK:
        return code
    mismatches = {}
    for path, digest in manifest["outputs"].items():
        with open(path, "rb") as fh:
            actual = hashlib.sha256(fh.read()).hexdigest()
        if actual != digest:
            mismatches[path] = {"expected": digest, "actual": actual}
    _emit({"reproduced": not mismatches, "mismatches": mismatches})
    return EXIT_OK if not mismatches else EXIT_COMPUTE


def _args_dict(args: argparse.Namespace) -> dict:
    skip = {"func", "command"}
    return {k: v for k, v in vars(args).items() if k not in skip}


# --- parser ------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help=f"flat key=value parameter file (or ${CONFIG_ENV_VAR})")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override one parameter; repeatable")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qsdcsim",
        description="Secrecy-rate analytics and simulation for interference-based "
                    "secure direct communication.",
    )
    parser.add_argument("--version", action="version", version=f"qsdcsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("rate-curve", help="rate-vs-distance table (CSV + JSON)")
    _add_common(p)
    p.add_argument("--dmin", type=float, default=0.0)
    p.add_argument("--dmax", type=float, default=500.0)
    p.add_argument("--step", type=float, default=1.0)
    p.add_argument("--out", required=True, help="CSV output path")
    p.set_defaults(func=cmd_rate_curve)

    p = sub.add_parser("plob-crossing", help="distance where the rate first beats the PLOB bound")
    _add_common(p)
    p.set_defaults(func=cmd_plob_crossing)

    p = sub.add_parser("max-distance", help="largest distance with a positive rate")
    _add_common(p)
    p.set_defaults(func=cmd_max_distance)

    p = sub.add_parser("optimize-u", help="intensity maximizing the reachable distance")
    _add_common(p)
    p.add_argument("--umin", type=float, default=0.005)
    p.add_argument("--umax", type=float, default=0.2)
    p.add_argument("--tolerance", type=float, default=1e-3)
    p.set_defaults(func=cmd_optimize_u)

    p = sub.add_parser("sweep-pd", help="rate curves for a family of dark-count rates")
    _add_common(p)
    p.add_argument("--pd-list", required=True, help="comma-separated dark-count probabilities")
    p.add_argument("--dmax", type=float, default=500.0)
    p.add_argument("--out-prefix", required=True)
    p.set_defaults(func=cmd_sweep_pd)

    p = sub.add_parser("simulate", help="Monte Carlo campaign with analytic comparison")
    _add_common(p)
    p.add_argument("--distance", type=float, default=0.0)
    p.add_argument("--pulses", type=int, required=True)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--shards", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--misalignment", choices=["offset", "jitter", "none"], default="offset")
    p.add_argument("--backend", choices=["compiled", "numpy"], default=None)
    p.add_argument("--out", default=None, help="also write the report JSON here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("frame-demo", help="frame pipeline round trip over a synthetic channel")
    _add_common(p)
    p.add_argument("--message-file", required=True)
    p.add_argument("--qber", type=float, default=0.0)
    p.add_argument("--delivery", type=float, default=1.0)
    p.add_argument("--ez", type=float, default=0.0, help="phase-error proxy for the rate conditions")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--k", type=int, default=512, help="message bits per frame")
    p.add_argument("--n", type=int, default=1024, help="coded bits per frame")
    p.add_argument("--r", type=float, default=0.75, help="secure-coding rate")
    p.add_argument("--sacrifice", type=float, default=0.1)
    p.add_argument("--fec", choices=["identity", "repetition"], default="identity")
    p.add_argument("--out", default=None, help="write the transcript JSON here")
    p.set_defaults(func=cmd_frame_demo)

    p = sub.add_parser("replay", help="re-run a manifest and verify bit-identical outputs")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_replay)

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InvalidParameterError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        print(f"computation error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
