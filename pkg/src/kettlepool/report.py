"""Run reports: every metric is derived from the event log, never sampled
on the side, so a report can always be recomputed from its own log."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .bus import LogEntry
from .protocol import Message, decode
from .sim import SimConfig


@dataclass
class SimReport:
    policy: str
    seed: int
    config: dict
    demand_count: int
    completed_bookings: int
    delivered_ws: int
    peak_w: int
    peak_time_s: Optional[int]
    load_factor: float
    mean_wait_s: float
    max_wait_s: int
    trace_bucket_s: int
    trace: list[float]
    event_log: list[str]


def parse_log(text: str) -> list[tuple[int, str, str, Message]]:
    """Read back the tab-separated event-log lines of a report."""
    entries = []
    for line in text.splitlines():
        if not line:
            continue
        t, src, dst, wire = line.split("\t", 3)
        entries.append((int(t), src, dst, decode(wire)))
    return entries


def derive_metrics(entries: Iterable[tuple[int, str, str, Message]],
                   sim_duration_s: int, bucket_s: int) -> dict:
    """Fold the wire traffic of one run into its metrics.

    The measured load timeline is the step function of LoadMeasurement
    reports; waits pair each Demand with the next PowerOn delivered to the
    same kettle; delivered energy counts booked watt-seconds of every
    power-on whose booked window fits inside the run.
    """
    deltas: dict[int, int] = {}
    last_draw: dict[str, int] = {}
    demands: list[tuple[int, str]] = []
    power_ons: dict[str, list[int]] = {}
    delivered_ws = 0
    completed = 0

    for t, src, dst, msg in entries:
        if msg.kind == "LoadMeasurement":
            appliance = msg.payload["appliance_id"]
            prev = last_draw.get(appliance, 0)
            draw = msg.payload["draw_w"]
            if draw != prev:
                deltas[t] = deltas.get(t, 0) + draw - prev
                last_draw[appliance] = draw
        elif msg.kind == "Demand":
            demands.append((t, dst))
        elif msg.kind == "PowerOn":
            power_ons.setdefault(dst, []).append(t)
            p = msg.payload
            if p["start_abs_s"] + p["duration_s"] <= sim_duration_s:
                delivered_ws += p["power_w"] * p["duration_s"]
                completed += 1

    draw = [0] * (sim_duration_s + 1)
    running = 0
    for t in range(sim_duration_s + 1):
        running += deltas.get(t, 0)
        draw[t] = running

    peak_w = max(draw)
    peak_time_s = draw.index(peak_w) if peak_w > 0 else None
    mean_w = sum(draw[:sim_duration_s]) / sim_duration_s
    load_factor = mean_w / peak_w if peak_w > 0 else 0.0
    bucket_count = sim_duration_s // bucket_s
    trace = [
        sum(draw[b * bucket_s:(b + 1) * bucket_s]) / bucket_s
        for b in range(bucket_count)
    ]

    waits = []
    cursor: dict[str, int] = {}
    for t, agent in demands:
        times = power_ons.get(agent, [])
        i = cursor.get(agent, 0)
        while i < len(times) and times[i] < t:
            i += 1
        if i < len(times):
            waits.append(times[i] - t)
            i += 1
        cursor[agent] = i

    return {
        "demand_count": len(demands),
        "completed_bookings": completed,
        "delivered_ws": delivered_ws,
        "peak_w": peak_w,
        "peak_time_s": peak_time_s,
        "load_factor": load_factor,
        "mean_wait_s": sum(waits) / len(waits) if waits else 0.0,
        "max_wait_s": max(waits) if waits else 0,
        "trace_bucket_s": bucket_s,
        "trace": trace,
    }


def build_report(cfg: SimConfig, policy: str, log: Sequence[LogEntry]) -> SimReport:
    entries = [(e.t, e.src, e.dst, e.message()) for e in log]
    metrics = derive_metrics(entries, cfg.sim_duration_s, cfg.bucket_s)
    config = asdict(cfg)
    config["policy"] = policy
    return SimReport(
        policy=policy,
        seed=cfg.seed,
        config=config,
        event_log=[e.format() for e in log],
        **metrics,
    )


@dataclass
class ComparisonReport:
    base_policy: str
    runs: list[SimReport]
    peak_reduction_pct: dict[str, float]
    mean_wait_delta_s: dict[str, float]
    energy_consistent: bool


def build_comparison(runs: list[SimReport]) -> ComparisonReport:
    base = runs[0]
    reductions, wait_deltas = {}, {}
    for r in runs:
        reductions[r.policy] = (
            (base.peak_w - r.peak_w) / base.peak_w * 100.0 if base.peak_w else 0.0
        )
        wait_deltas[r.policy] = r.mean_wait_s - base.mean_wait_s
    return ComparisonReport(
        base_policy=base.policy,
        runs=runs,
        peak_reduction_pct=reductions,
        mean_wait_delta_s=wait_deltas,
        energy_consistent=len({r.delivered_ws for r in runs}) == 1,
    )


def format_comparison_table(cr: ComparisonReport) -> str:
    header = (
        f"{'policy':<12} {'peak_w':>8} {'peak@s':>7} {'loadfac':>8} "
        f"{'meanwait':>9} {'maxwait':>8} {'energy_Ws':>12} {'peak_red%':>10}"
    )
    lines = [header, "-" * len(header)]
    for r in cr.runs:
        peak_at = r.peak_time_s if r.peak_time_s is not None else "-"
        lines.append(
            f"{r.policy:<12} {r.peak_w:>8} {peak_at:>7} {r.load_factor:>8.3f} "
            f"{r.mean_wait_s:>9.1f} {r.max_wait_s:>8} {r.delivered_ws:>12} "
            f"{cr.peak_reduction_pct[r.policy]:>10.1f}"
        )
    lines.append(
        f"energy conservation across policies: "
        f"{'ok' if cr.energy_consistent else 'VIOLATED'}"
    )
    return "\n".join(lines)


def _trace_path(path: Path) -> Path:
    return path.with_suffix(".trace.tsv") if path.suffix else Path(str(path) + ".trace.tsv")


def report_to_dict(report: SimReport) -> dict:
    return {"format": "kettlepool-report", "version": 1, **asdict(report)}


def write_report(report: SimReport, path: "str | Path") -> Path:
    """Write the JSON report plus a flat per-bucket trace table for plotting."""
    path = Path(path)
    path.write_text(json.dumps(report_to_dict(report), indent=1) + "\n")
    rows = ["bucket_start_s\tmean_draw_w"]
    for b, value in enumerate(report.trace):
        rows.append(f"{b * report.trace_bucket_s}\t{value:g}")
    _trace_path(path).write_text("\n".join(rows) + "\n")
    return path


def write_comparison(cr: ComparisonReport, path: "str | Path") -> Path:
    path = Path(path)
    body = {
        "format": "kettlepool-comparison",
        "version": 1,
        "base_policy": cr.base_policy,
        "peak_reduction_pct": cr.peak_reduction_pct,
        "mean_wait_delta_s": cr.mean_wait_delta_s,
        "energy_consistent": cr.energy_consistent,
        "runs": [report_to_dict(r) for r in cr.runs],
    }
    path.write_text(json.dumps(body, indent=1) + "\n")
    rows = ["bucket_start_s\t" + "\t".join(r.policy for r in cr.runs)]
    for b in range(len(cr.runs[0].trace)):
        cells = [f"{r.trace[b]:g}" for r in cr.runs]
        rows.append(f"{b * cr.runs[0].trace_bucket_s}\t" + "\t".join(cells))
    _trace_path(path).write_text("\n".join(rows) + "\n")
    return path
