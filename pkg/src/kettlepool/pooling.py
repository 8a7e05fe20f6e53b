"""Pooling service: aggregates household profiles, applies tariff and cap
biasing, and rebroadcasts the biased pool profile to every member."""

from __future__ import annotations

import logging
from typing import Optional

from .bus import Outbox
from .profiles import (
    BiasedProfile,
    LoadProfile,
    Tariff,
    TimeGrid,
    advance,
    aggregate,
    bias,
)
from .protocol import (
    Message,
    grid_payload,
    pool_update_payload,
    profile_from_report,
)

logger = logging.getLogger(__name__)


class PoolingService:
    def __init__(self, grid: TimeGrid, outbox: Outbox,
                 tariff: Optional[Tariff] = None, cap_w: Optional[int] = None,
                 debounce_s: int = 1):
        if cap_w is not None and cap_w <= 0:
            raise ValueError("cap_w must be > 0 when present")
        if debounce_s < 0:
            raise ValueError("debounce_s must be >= 0")
        self.bucket_s = grid.bucket_s
        self.horizon_s = grid.horizon_s
        self.origin = grid.origin
        self.now = grid.origin
        self.outbox = outbox
        self.tariff = tariff if tariff is not None else Tariff.neutral(grid.bucket_count)
        if len(self.tariff) != grid.bucket_count:
            raise ValueError("tariff length does not match grid")
        self.cap_w = cap_w
        self.debounce_s = debounce_s
        self.members: dict[str, LoadProfile] = {}
        self._member_seq: dict[str, int] = {}
        self.broadcast_seq = 0
        self.last_broadcast: Optional[BiasedProfile] = None
        self._last_broadcast_at: Optional[int] = None
        self._broadcast_pending = False

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(self.horizon_s, self.bucket_s, self.origin)

    def handle(self, msg: Message) -> None:
        if msg.kind == "RegisterHousehold":
            try:
                self.register_household(
                    msg.payload["household_id"],
                    TimeGrid(msg.payload["grid"]["horizon_s"],
                             msg.payload["grid"]["bucket_s"],
                             msg.payload["grid"]["origin"]),
                )
            except ValueError as exc:
                logger.warning("pool: registration rejected: %s", exc)
        elif msg.kind == "ProfileReport":
            self.on_profile_report(
                msg.payload["household_id"], profile_from_report(msg.payload), msg.seq
            )
        elif msg.kind == "TickSync":
            self.tick(msg.sent_at)
        else:
            logger.warning("pool: ignoring %s", msg.kind)

    def register_household(self, household_id: str, grid: TimeGrid) -> None:
        """Add a member with a zero profile; re-registration is a no-op."""
        if not grid.spans_match(self.grid):
            raise ValueError(
                f"household grid {grid.horizon_s}s/{grid.bucket_s}s does not match "
                f"pool grid {self.horizon_s}s/{self.bucket_s}s"
            )
        if household_id not in self.members:
            self.members[household_id] = LoadProfile(
                self.grid, (0,) * self.grid.bucket_count
            )

    def on_profile_report(self, household_id: str, profile: LoadProfile, seq: int) -> None:
        """Replace a member's profile, last write (by sender seq) wins."""
        if household_id not in self.members:
            logger.warning("pool: report from unregistered %r dropped", household_id)
            return
        if seq <= self._member_seq.get(household_id, 0):
            return
        if not profile.grid.spans_match(self.grid):
            logger.warning("pool: report with mismatched grid dropped")
            return
        if profile.grid.origin < self.origin:
            profile = advance(profile, self.origin)
        elif profile.grid.origin > self.origin:
            logger.warning("pool: report from the future dropped")
            return
        self._member_seq[household_id] = seq
        if profile == self.members[household_id]:
            return
        self.members[household_id] = profile
        self._request_broadcast()

    def set_tariff(self, tariff: Tariff) -> None:
        if len(tariff) != self.grid.bucket_count:
            raise ValueError(
                f"tariff has {len(tariff)} entries, grid has "
                f"{self.grid.bucket_count} buckets"
            )
        self.tariff = tariff
        self._request_broadcast()

    def set_cap(self, cap_w: Optional[int]) -> None:
        if cap_w is not None and cap_w <= 0:
            raise ValueError("cap_w must be > 0 when present")
        self.cap_w = cap_w
        self._request_broadcast()

    def tick(self, now: int) -> None:
        if now < self.now:
            raise ValueError(f"tick went backwards ({now} < {self.now})")
        self.now = now
        new_origin = (now // self.bucket_s) * self.bucket_s
        if new_origin != self.origin:
            self.members = {
                hid: advance(p, new_origin) for hid, p in self.members.items()
            }
            self.origin = new_origin
            self._request_broadcast()

    def compute_and_broadcast(self) -> BiasedProfile:
        """Recompute the biased aggregate and queue it to every member."""
        agg = aggregate(list(self.members.values()), self.grid)
        bp = bias(agg, self.tariff, self.cap_w)
        self.broadcast_seq += 1
        self.last_broadcast = bp
        self._last_broadcast_at = self.now
        payload = pool_update_payload(bp, self.broadcast_seq)
        self.outbox.broadcast(list(self.members), "PoolProfileUpdate", payload)
        return bp

    def _request_broadcast(self) -> None:
        if (self.debounce_s == 0 or self._last_broadcast_at is None
                or self.now - self._last_broadcast_at >= self.debounce_s):
            self.compute_and_broadcast()
        elif not self._broadcast_pending:
            self._broadcast_pending = True
            self.outbox.net.schedule(
                self._last_broadcast_at + self.debounce_s, self._deferred_broadcast
            )

    def _deferred_broadcast(self) -> None:
        self._broadcast_pending = False
        self.compute_and_broadcast()

    def metrics_payload(self) -> dict:
        """Community metrics derived from pool state; no side effects."""
        agg = aggregate(list(self.members.values()), self.grid)
        bp = bias(agg, self.tariff, self.cap_w)
        peak = agg.peak_w
        return {
            "member_count": len(self.members),
            "grid": grid_payload(self.grid),
            "raw": list(agg.watts),
            "biased_milli": list(bp.biased_milli),
            "peak_w": peak,
            "peak_bucket": agg.watts.index(peak),
            "load_factor": agg.mean_w / peak if peak > 0 else 0.0,
            "cap_w": self.cap_w,
        }

    def metrics_snapshot(self, dst: str = "ui") -> Message:
        """Send (and return) a MetricsSnapshot message for the community view."""
        return self.outbox.send(dst, "MetricsSnapshot", self.metrics_payload())
