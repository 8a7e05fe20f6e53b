"""Household booking service.

One instance per household: registers appliances, keeps the household's
predicted profile as the fold of its active bookings, reports changes
upstream to the pool, relays pool broadcasts down to appliances, and fires
deferred power-on events from the virtual clock.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Optional

from .bus import Outbox
from .profiles import BiasedProfile, LoadProfile, TimeGrid, profile_from_intervals
from .protocol import (
    Message,
    biased_from_update,
    pool_update_payload,
    profile_report_payload,
)

logger = logging.getLogger(__name__)


@dataclass
class ApplianceMeta:
    appliance_id: str
    kind: str
    rated_w: int
    last_draw_w: int = 0


@dataclass
class ActiveBooking:
    booking_id: str
    appliance_id: str
    start_abs_s: int
    duration_s: int
    power_w: int
    started: bool = False

    @property
    def end_abs_s(self) -> int:
        return self.start_abs_s + self.duration_s


class BookingService:
    def __init__(self, household_id: str, grid: TimeGrid, outbox: Outbox,
                 upstream: str = "pool"):
        self.household_id = household_id
        self.bucket_s = grid.bucket_s
        self.horizon_s = grid.horizon_s
        self.origin = grid.origin
        self.now = grid.origin
        self.upstream = upstream
        self.outbox = outbox
        self.appliances: dict[str, ApplianceMeta] = {}
        self.bookings: dict[str, ActiveBooking] = {}
        self.latest_pool: Optional[BiasedProfile] = None
        self._latest_pool_seq = 0
        self._last_tick = grid.origin
        self._booking_counter = 0
        self._last_report: Optional[LoadProfile] = None

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(self.horizon_s, self.bucket_s, self.origin)

    @property
    def household_profile(self) -> LoadProfile:
        """Predicted profile, always recomputed from the active booking set."""
        return profile_from_intervals(
            self.grid,
            ((b.start_abs_s, b.duration_s, b.power_w) for b in self.bookings.values()),
        )

    def handle(self, msg: Message) -> None:
        if msg.kind == "RegisterAppliance":
            p = msg.payload
            self.register_appliance(p["appliance_id"], p["appliance_kind"], p["rated_w"])
        elif msg.kind == "BookingRequest":
            p = msg.payload
            self.request_booking(
                p["appliance_id"], p["start_offset_s"], p["duration_s"], p["power_w"]
            )
        elif msg.kind == "CancelBooking":
            self.cancel_booking(msg.payload["booking_id"])
        elif msg.kind == "PoolProfileUpdate":
            self.on_pool_update(msg)
        elif msg.kind == "TickSync":
            self.tick(msg.sent_at)
        elif msg.kind == "LoadMeasurement":
            meta = self.appliances.get(msg.payload["appliance_id"])
            if meta is not None:
                meta.last_draw_w = msg.payload["draw_w"]
        else:
            logger.warning("%s: ignoring %s", self.household_id, msg.kind)

    def register_upstream(self) -> None:
        from .protocol import PROTOCOL_VERSION, grid_payload

        self.outbox.send(self.upstream, "RegisterHousehold", {
            "household_id": self.household_id,
            "protocol_version": PROTOCOL_VERSION,
            "grid": grid_payload(self.grid),
        })

    def register_appliance(self, appliance_id: str, kind: str, rated_w: int) -> str:
        """Add an appliance; duplicate registration of the same id is a no-op."""
        if rated_w <= 0:
            raise ValueError(f"rated_w must be > 0, got {rated_w}")
        if appliance_id not in self.appliances:
            self.appliances[appliance_id] = ApplianceMeta(appliance_id, kind, rated_w)
        return appliance_id

    def request_booking(self, appliance_id: str, start_offset_s: int,
                        duration_s: int, power_w: int) -> Message:
        """Book a draw; replies with BookingAck or BookingReject to the appliance.

        Bookings are advisory: one that would push the pool's raw aggregate
        over the contract cap is still accepted, only flagged over_cap.
        """
        reason = None
        if appliance_id not in self.appliances:
            reason = "unknown appliance"
        elif power_w <= 0 or duration_s <= 0:
            reason = "power_w and duration_s must be > 0"
        elif start_offset_s % self.bucket_s or duration_s % self.bucket_s:
            reason = f"booking not aligned to {self.bucket_s}s buckets"
        elif start_offset_s < 0 or start_offset_s + duration_s > self.horizon_s:
            reason = "booking ends beyond horizon"
        if reason is not None:
            return self.outbox.send(appliance_id, "BookingReject", {
                "op": "book", "appliance_id": appliance_id,
                "booking_id": None, "reason": reason,
            })

        self._booking_counter += 1
        booking_id = f"{self.household_id}-b{self._booking_counter:06d}"
        booking = ActiveBooking(
            booking_id=booking_id,
            appliance_id=appliance_id,
            start_abs_s=self.origin + start_offset_s,
            duration_s=duration_s,
            power_w=power_w,
        )
        over_cap = self._would_exceed_cap(booking)
        self.bookings[booking_id] = booking
        ack = self.outbox.send(appliance_id, "BookingAck", {
            "op": "book", "booking_id": booking_id, "appliance_id": appliance_id,
            "start_offset_s": start_offset_s, "start_abs_s": booking.start_abs_s,
            "duration_s": duration_s, "power_w": power_w, "over_cap": over_cap,
        })
        if booking.start_abs_s <= self.now:
            # Immediate delivery: the booked bucket is already running.
            self._power_on(booking)
        self._report()
        return ack

    def cancel_booking(self, booking_id: str) -> Message:
        booking = self.bookings.get(booking_id)
        if booking is None:
            return self.outbox.send(self._reply_target(booking_id), "BookingReject", {
                "op": "cancel", "appliance_id": self._reply_target(booking_id),
                "booking_id": booking_id, "reason": "unknown booking",
            })
        if booking.started:
            return self.outbox.send(booking.appliance_id, "BookingReject", {
                "op": "cancel", "appliance_id": booking.appliance_id,
                "booking_id": booking_id, "reason": "already started",
            })
        del self.bookings[booking_id]
        ack = self.outbox.send(booking.appliance_id, "BookingAck", {
            "op": "cancel", "booking_id": booking_id,
            "appliance_id": booking.appliance_id,
            "start_offset_s": None, "start_abs_s": None,
            "duration_s": None, "power_w": None, "over_cap": False,
        })
        self._report()
        return ack

    def on_pool_update(self, msg: Message) -> None:
        """Cache the newest pool profile and relay it to every appliance."""
        bp = biased_from_update(msg.payload)
        if bp.grid.bucket_s != self.bucket_s or bp.grid.horizon_s != self.horizon_s:
            logger.warning("%s: dropping pool update with mismatched grid",
                           self.household_id)
            return
        seq = msg.payload["broadcast_seq"]
        if seq <= self._latest_pool_seq:
            return
        self._latest_pool_seq = seq
        self.latest_pool = bp
        payload = pool_update_payload(bp, seq)
        for appliance_id in self.appliances:
            self.outbox.send(appliance_id, "PoolProfileUpdate", payload)

    def tick(self, now: int) -> list[Message]:
        """Advance the virtual clock: fire due power-ons, slide the window."""
        if now < self._last_tick:
            raise ValueError(f"tick went backwards ({now} < {self._last_tick})")
        self.now = now
        due = sorted(
            (b for b in self.bookings.values()
             if not b.started and self._last_tick < b.start_abs_s <= now),
            key=lambda b: b.booking_id,
        )
        events = [self._power_on(b) for b in due]
        self._last_tick = now

        new_origin = (now // self.bucket_s) * self.bucket_s
        if new_origin != self.origin:
            self.origin = new_origin
            for booking_id in [bid for bid, b in self.bookings.items()
                               if b.end_abs_s <= new_origin]:
                del self.bookings[booking_id]
            self._report()
        return events

    def _power_on(self, booking: ActiveBooking) -> Message:
        booking.started = True
        return self.outbox.send(booking.appliance_id, "PowerOn", {
            "booking_id": booking.booking_id,
            "appliance_id": booking.appliance_id,
            "start_abs_s": booking.start_abs_s,
            "duration_s": booking.duration_s,
            "power_w": booking.power_w,
        })

    def _report(self) -> None:
        profile = self.household_profile
        if profile != self._last_report:
            self._last_report = profile
            self.outbox.send(self.upstream, "ProfileReport",
                             profile_report_payload(self.household_id, profile))

    def _reply_target(self, booking_id: str) -> str:
        # Cancel of an unknown id has no appliance to route to; best effort.
        for b in self.bookings.values():
            if b.booking_id == booking_id:
                return b.appliance_id
        return next(iter(self.appliances), "unknown")

    def _would_exceed_cap(self, booking: ActiveBooking) -> bool:
        bp = self.latest_pool
        if bp is None or bp.cap_w is None:
            return False
        first = booking.start_abs_s
        while first < booking.end_abs_s:
            idx = (first - bp.grid.origin) // bp.grid.bucket_s
            if 0 <= idx < bp.grid.bucket_count:
                if bp.raw.watts[idx] + booking.power_w > bp.cap_w:
                    return True
            first += bp.grid.bucket_s
        return False
