"""Deterministic discrete-event simulation of a kettle pool.

Spins up a pooling service, N household booking services and N scripted
kettle agents in one process, drives them with TickSync messages on a
virtual clock, and injects seeded demand events. Nothing reads the wall
clock unless ``time_scale`` asks for a human-paced live run, so a
(config, seed) pair fully determines the event log.

Demand times come from Python's ``random.Random`` (MT19937), which is
reproducible across platforms and Python versions; the exact draw order is
documented in the README.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field, replace
from typing import Optional

from .booking import BookingService
from .bus import Network, Outbox
from .kettle import KettleAgent
from .pooling import PoolingService
from .profiles import Tariff, TimeGrid

POLICIES = ("immediate", "compliant", "manual")
DEMAND_MODELS = ("synchronized", "diurnal")


class ConfigError(ValueError):
    """Invalid simulation configuration; carries the offending field."""

    def __init__(self, fld: str, message: str):
        super().__init__(f"{fld}: {message}")
        self.field = fld


@dataclass(frozen=True)
class SimConfig:
    households: int = 20
    seed: int = 1
    horizon_s: int = 900
    bucket_s: int = 30
    kettle_w: int = 2000
    heat_duration_s: int = 180
    policy: str = "immediate"
    demand: str = "synchronized"
    demand_peaks_s: tuple[int, ...] = (300, 600)
    demand_jitter_s: int = 120
    background_w: int = 0
    tariff: Optional[tuple[float, ...]] = None
    cap_w: Optional[int] = None
    sim_duration_s: int = 1800
    time_scale: float = 0.0
    tick_s: int = 1
    debounce_s: int = 0

    def validate(self) -> None:
        if self.households < 1:
            raise ConfigError("households", "must be >= 1")
        try:
            grid = TimeGrid(self.horizon_s, self.bucket_s, 0)
        except ValueError as exc:
            raise ConfigError("horizon_s/bucket_s", str(exc)) from exc
        if self.kettle_w <= 0:
            raise ConfigError("kettle_w", "must be > 0")
        if self.heat_duration_s <= 0:
            raise ConfigError("heat_duration_s", "must be > 0")
        if self.heat_duration_s % self.bucket_s:
            raise ConfigError("heat_duration_s",
                              f"must be a multiple of bucket_s ({self.bucket_s})")
        if self.heat_duration_s > self.horizon_s:
            raise ConfigError("heat_duration_s", "cannot exceed the horizon")
        if self.policy not in POLICIES:
            raise ConfigError("policy", f"must be one of {POLICIES}")
        if self.demand not in DEMAND_MODELS:
            raise ConfigError("demand", f"must be one of {DEMAND_MODELS}")
        if self.sim_duration_s < self.horizon_s:
            raise ConfigError("sim_duration_s", "must cover at least one horizon")
        if self.demand == "diurnal":
            if not self.demand_peaks_s:
                raise ConfigError("demand_peaks_s", "diurnal model needs peak times")
            if self.demand_jitter_s < 0:
                raise ConfigError("demand_jitter_s", "must be >= 0")
            latest = max(self.demand_peaks_s) + self.demand_jitter_s
            if latest + self.horizon_s > self.sim_duration_s:
                raise ConfigError(
                    "demand_peaks_s",
                    "demand at peak+jitter could not finish heating before "
                    "sim_duration_s; extend the run or move the peak earlier",
                )
            if min(self.demand_peaks_s) - self.demand_jitter_s < 0:
                raise ConfigError("demand_peaks_s", "peak-jitter must be >= 0")
        if self.background_w < 0:
            raise ConfigError("background_w", "must be >= 0")
        if self.tariff is not None:
            if len(self.tariff) != grid.bucket_count:
                raise ConfigError(
                    "tariff",
                    f"needs {grid.bucket_count} multipliers, got {len(self.tariff)}",
                )
            if any(m < 0 for m in self.tariff):
                raise ConfigError("tariff", "multipliers must be >= 0")
        if self.cap_w is not None and self.cap_w <= 0:
            raise ConfigError("cap_w", "must be > 0 when set")
        if self.time_scale < 0:
            raise ConfigError("time_scale", "must be >= 0")
        if self.tick_s < 1:
            raise ConfigError("tick_s", "must be >= 1")
        if self.debounce_s < 0:
            raise ConfigError("debounce_s", "must be >= 0")

    def grid(self) -> TimeGrid:
        return TimeGrid(self.horizon_s, self.bucket_s, 0)


@dataclass(frozen=True)
class DemandEvent:
    time_s: int
    household: int


def household_id(i: int) -> str:
    return f"hh{i:03d}"


def kettle_id(i: int) -> str:
    return f"kettle{i:03d}"


def background_id(i: int) -> str:
    return f"bg{i:03d}"


def generate_demand(cfg: SimConfig) -> list[DemandEvent]:
    """One demand per household, deterministic in the seed.

    Draw order: one shuffle of the household list, then (diurnal only) one
    jitter draw per household in shuffled order. Synchronized demand puts
    everyone at t=0; the shuffle still fixes the arrival order.
    """
    cfg.validate()
    rng = random.Random(cfg.seed)
    order = list(range(cfg.households))
    rng.shuffle(order)
    events = []
    for hh in order:
        if cfg.demand == "synchronized":
            t = 0
        else:
            peak = cfg.demand_peaks_s[hh % len(cfg.demand_peaks_s)]
            jitter = rng.randrange(-cfg.demand_jitter_s, cfg.demand_jitter_s + 1) \
                if cfg.demand_jitter_s else 0
            t = min(max(peak + jitter, 0), cfg.sim_duration_s - cfg.horizon_s)
        events.append(DemandEvent(t, hh))
    events.sort(key=lambda e: e.time_s)  # stable: arrival order breaks time ties
    return events


@dataclass
class Deployment:
    net: Network
    pool: PoolingService
    services: list[BookingService]
    agents: list[KettleAgent]
    background: list[KettleAgent] = field(default_factory=list)


def build_deployment(cfg: SimConfig, policy: Optional[str] = None,
                     ui_handler=None) -> Deployment:
    """Wire up pool, households and agents on one in-process network."""
    policy = policy or cfg.policy
    grid = cfg.grid()
    net = Network()
    # Without a live UI, control echoes still land in the event log.
    net.register("ui", ui_handler if ui_handler is not None else lambda msg: None)

    tariff = Tariff.from_multipliers(cfg.tariff) if cfg.tariff else None
    pool = PoolingService(grid, Outbox(net, "pool"), tariff=tariff,
                          cap_w=cfg.cap_w, debounce_s=cfg.debounce_s)
    net.register("pool", pool.handle)

    services, agents, background = [], [], []
    for i in range(cfg.households):
        hid, kid = household_id(i), kettle_id(i)
        svc = BookingService(hid, grid, Outbox(net, hid))
        net.register(hid, svc.handle)
        agent = KettleAgent(kid, hid, grid, Outbox(net, kid),
                            rated_w=cfg.kettle_w,
                            heat_duration_s=cfg.heat_duration_s,
                            policy=policy)
        net.register(kid, agent.handle)
        svc.register_upstream()
        agent.register()
        services.append(svc)
        agents.append(agent)
        if cfg.background_w > 0:
            bid = background_id(i)
            bg = KettleAgent(bid, hid, grid, Outbox(net, bid),
                             rated_w=cfg.background_w,
                             heat_duration_s=cfg.horizon_s,
                             policy="manual")
            net.register(bid, bg.handle)
            bg.register()
            background.append(bg)
    net.pump()
    return Deployment(net, pool, services, agents, background)


class Simulation:
    """Tick-by-tick driver over one deployment; serve mode steps it live."""

    def __init__(self, cfg: SimConfig, policy: Optional[str] = None,
                 ui_handler=None):
        cfg.validate()
        self.cfg = cfg
        self.policy = policy or cfg.policy
        self.deployment = build_deployment(cfg, self.policy, ui_handler=ui_handler)
        self.clock = Outbox(self.deployment.net, "clock")
        self.sim_outbox = Outbox(self.deployment.net, "sim")
        self._demands_by_time: dict[int, list[DemandEvent]] = {}
        for ev in generate_demand(cfg):
            self._demands_by_time.setdefault(ev.time_s, []).append(ev)

    @property
    def net(self) -> Network:
        return self.deployment.net

    def step(self, t: int) -> None:
        """Advance the virtual clock to ``t`` and process everything due."""
        dep = self.deployment
        self.net.advance_to(t)
        everyone = (
            ["pool"]
            + [svc.household_id for svc in dep.services]
            + [agent.appliance_id for agent in dep.agents + dep.background]
        )
        self.clock.broadcast(everyone, "TickSync")
        self.net.pump()

        # Standing background load: one whole-window booking per horizon.
        if dep.background and t % self.cfg.horizon_s == 0 \
                and t + self.cfg.horizon_s <= self.cfg.sim_duration_s:
            for bg in dep.background:
                bg.press()
                self.net.pump()

        # Demands run strictly one at a time so each scripted user observes
        # the pool profile left behind by the previous booking.
        for ev in self._demands_by_time.get(t, []):
            self.sim_outbox.send(kettle_id(ev.household), "Demand")
            self.net.pump()

    def run_to_completion(self) -> None:
        pace = (self.cfg.tick_s / self.cfg.time_scale) if self.cfg.time_scale > 0 else 0
        for t in range(0, self.cfg.sim_duration_s + 1, self.cfg.tick_s):
            self.step(t)
            if pace:
                time.sleep(pace)


def run(cfg: SimConfig, policy: Optional[str] = None):
    """Run one full simulation and derive its report from the event log."""
    from .report import build_report

    sim = Simulation(cfg, policy)
    sim.run_to_completion()
    return build_report(cfg, sim.policy, sim.net.log)


def compare(cfg: SimConfig, policies: Optional[list[str]] = None):
    """Run the same demand under several policies, side by side."""
    from .report import build_comparison

    policies = list(policies) if policies else ["immediate", "compliant"]
    for p in policies:
        if p not in POLICIES:
            raise ConfigError("policy", f"unknown policy {p!r}")
    if not policies:
        raise ConfigError("policy", "need at least one policy")
    runs = [run(replace(cfg, policy=p)) for p in policies]
    return build_comparison(runs)
