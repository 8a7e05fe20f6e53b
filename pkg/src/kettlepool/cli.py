"""Command line: run one simulation, compare policies, or host a live demo.

Exit codes: 0 success, 1 configuration error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Optional

from .report import format_comparison_table, write_comparison, write_report
from .sim import ConfigError, SimConfig, compare, run


class _CliError(Exception):
    """Bad command line; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _CliError(message)


def load_tariff_file(path: str) -> tuple[float, ...]:
    """Tariff file schema: {"multipliers": [per-bucket floats]}."""
    try:
        body = json.loads(Path(path).read_text())
    except OSError as exc:
        raise _CliError(f"cannot read tariff file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise _CliError(f"tariff file is not valid JSON: {exc}") from exc
    if not isinstance(body, dict) or "multipliers" not in body:
        raise _CliError('tariff file must be an object with a "multipliers" array')
    multipliers = body["multipliers"]
    if not isinstance(multipliers, list) or not all(
        isinstance(m, (int, float)) and not isinstance(m, bool) for m in multipliers
    ):
        raise _CliError("multipliers must be an array of numbers")
    return tuple(float(m) for m in multipliers)


def _add_sim_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--households", type=int, default=20, metavar="N")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--horizon-s", type=int, default=900,
                   help="bookable window length (default 900)")
    p.add_argument("--bucket-s", type=int, default=30,
                   help="profile bucket length (default 30)")
    p.add_argument("--kettle-w", type=int, default=2000,
                   help="kettle rated draw in watts")
    p.add_argument("--duration-s", type=int, default=180,
                   help="heating duration per boil")
    p.add_argument("--cap-w", type=int, default=None,
                   help="advisory contract cap on pool raw watts")
    p.add_argument("--tariff-file", default=None, metavar="PATH",
                   help='JSON {"multipliers": [...]}, one per bucket')
    p.add_argument("--demand", choices=["synchronized", "diurnal"],
                   default="synchronized")
    p.add_argument("--demand-peaks", default="300,600", metavar="S1,S2,...",
                   help="diurnal demand peak times in sim seconds")
    p.add_argument("--demand-jitter-s", type=int, default=120)
    p.add_argument("--background-w", type=int, default=0,
                   help="always-on per-household load in watts")
    p.add_argument("--sim-duration-s", type=int, default=1800)
    p.add_argument("--time-scale", type=float, default=0.0,
                   help="virtual seconds per real second; 0 = as fast as possible")
    p.add_argument("--debounce-s", type=int, default=0,
                   help="pool rebroadcast debounce (deterministic default 0)")
    p.add_argument("--out", default=None, metavar="PATH",
                   help="write the JSON report (plus .trace.tsv) here")


def build_config(args: argparse.Namespace, policy: Optional[str] = None) -> SimConfig:
    try:
        peaks = tuple(int(x) for x in str(args.demand_peaks).split(",") if x != "")
    except ValueError as exc:
        raise _CliError(f"--demand-peaks must be comma-separated integers: {exc}")
    tariff = load_tariff_file(args.tariff_file) if args.tariff_file else None
    cfg = SimConfig(
        households=args.households,
        seed=args.seed,
        horizon_s=args.horizon_s,
        bucket_s=args.bucket_s,
        kettle_w=args.kettle_w,
        heat_duration_s=args.duration_s,
        policy=policy or getattr(args, "policy", "immediate"),
        demand=args.demand,
        demand_peaks_s=peaks,
        demand_jitter_s=args.demand_jitter_s,
        background_w=args.background_w,
        tariff=tariff,
        cap_w=args.cap_w,
        sim_duration_s=args.sim_duration_s,
        time_scale=args.time_scale,
        debounce_s=args.debounce_s,
    )
    cfg.validate()
    return cfg


def cmd_run(args) -> int:
    cfg = build_config(args)
    report = run(cfg)
    print(f"policy={report.policy} seed={report.seed} households={cfg.households}")
    print(f"peak_w={report.peak_w}"
          + (f" at t={report.peak_time_s}s" if report.peak_time_s is not None else ""))
    print(f"load_factor={report.load_factor:.3f}")
    print(f"mean_wait_s={report.mean_wait_s:.1f} max_wait_s={report.max_wait_s}")
    print(f"delivered_ws={report.delivered_ws} "
          f"completed={report.completed_bookings}/{report.demand_count}")
    if args.out:
        path = write_report(report, args.out)
        print(f"report written to {path}")
    return 0


def cmd_compare(args) -> int:
    policies = [p.strip() for p in args.policies.split(",") if p.strip()]
    cfg = build_config(args, policy=policies[0] if policies else "immediate")
    cr = compare(cfg, policies)
    print(format_comparison_table(cr))
    if args.out:
        path = write_comparison(cr, args.out)
        print(f"comparison written to {path}")
    return 0


def cmd_serve(args) -> int:
    from .serve import serve

    cfg = build_config(args, policy=getattr(args, "policy", "manual"))
    serve(cfg, host=args.host, port=args.port)
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    parser = _Parser(prog="kettlepool",
                     description="Pooled kettle booking simulator and demo server")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one simulation", parents=[])
    _add_sim_flags(p_run)
    p_run.add_argument("--policy", choices=["immediate", "compliant", "manual"],
                       default="immediate")
    p_run.set_defaults(fn=cmd_run)

    p_cmp = sub.add_parser("compare", help="same demand under several policies")
    _add_sim_flags(p_cmp)
    p_cmp.add_argument("--policies", default="immediate,compliant",
                       help="comma-separated policy list")
    p_cmp.set_defaults(fn=cmd_compare)

    p_srv = sub.add_parser("serve", help="host the live demo and dashboard backend")
    _add_sim_flags(p_srv)
    p_srv.add_argument("--policy", choices=["immediate", "compliant", "manual"],
                       default="compliant",
                       help="scripted policy for the non-interactive kettles")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--port", type=int, default=8734)
    p_srv.set_defaults(fn=cmd_serve)

    try:
        args = parser.parse_args(argv)
    except _CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    try:
        return args.fn(args)
    except (_CliError, ConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 0
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
