"""Virtual socially aware kettle.

Models the rotating base (friction lookup against the latest pool
profile), the on-button booking flow with deferred heating, the LED
booking ring, and a simulated clamp meter. One control channel — the same
wire format as everything else — accepts Rotate/Press/Abort/Demand, so the
simulation harness and the browser UI drive the identical code path.
"""

from __future__ import annotations

import logging
from typing import Optional

from .bus import Outbox
from .profiles import (
    BiasedProfile,
    FrictionSample,
    TimeGrid,
    angle_to_offset,
    friction_at,
    offset_to_angle,
    recommend_slot,
)
from .protocol import PROTOCOL_VERSION, Message

logger = logging.getLogger(__name__)

POLICIES = ("manual", "immediate", "compliant")


class KettleAgent:
    def __init__(self, appliance_id: str, household: str, grid: TimeGrid,
                 outbox: Outbox, rated_w: int = 2000, heat_duration_s: int = 180,
                 policy: str = "manual", allow_abort: bool = True,
                 reply_to: str = "ui"):
        if policy not in POLICIES:
            raise ValueError(f"policy must be one of {POLICIES}")
        if rated_w <= 0 or heat_duration_s <= 0:
            raise ValueError("rated_w and heat_duration_s must be > 0")
        if heat_duration_s % grid.bucket_s or heat_duration_s > grid.horizon_s:
            raise ValueError("heat_duration_s must be bucket-aligned and fit the horizon")
        self.appliance_id = appliance_id
        self.household = household
        self.bucket_s = grid.bucket_s
        self.horizon_s = grid.horizon_s
        self.origin = grid.origin
        self.now = grid.origin
        self.outbox = outbox
        self.rated_w = rated_w
        self.heat_duration_s = heat_duration_s
        self.policy = policy
        self.allow_abort = allow_abort
        self.reply_to = reply_to
        self.angle_deg = 0.0
        self.awaiting_reply = False
        self.booking: Optional[dict] = None
        self.heating = False
        self.heat_end_s = 0
        self.latest_pool: Optional[BiasedProfile] = None
        self._latest_pool_seq = 0
        self.missed_updates = 0

    @property
    def grid(self) -> TimeGrid:
        return TimeGrid(self.horizon_s, self.bucket_s, self.origin)

    @property
    def draw_w(self) -> int:
        return self.booking["power_w"] if self.heating and self.booking else 0

    def handle(self, msg: Message) -> None:
        if msg.kind == "PoolProfileUpdate":
            self._on_pool_update(msg)
        elif msg.kind == "BookingAck":
            self._on_ack(msg)
        elif msg.kind == "BookingReject":
            self._on_reject(msg)
        elif msg.kind == "PowerOn":
            self.on_power_granted(msg)
        elif msg.kind == "TickSync":
            self.tick(msg.sent_at)
        elif msg.kind == "Rotate":
            self.rotate(msg.payload["angle_deg"])
        elif msg.kind == "Press":
            self.press()
        elif msg.kind == "Abort":
            self.abort()
        elif msg.kind == "Demand":
            self.on_demand()
        else:
            logger.warning("%s: ignoring %s", self.appliance_id, msg.kind)

    def register(self, kind: str = "kettle") -> None:
        self.outbox.send(self.household, "RegisterAppliance", {
            "appliance_id": self.appliance_id,
            "appliance_kind": kind,
            "rated_w": self.rated_w,
            "protocol_version": PROTOCOL_VERSION,
        })

    def rotate(self, angle_deg: float) -> FrictionSample:
        """Turn the base; returns (and echoes) what the hand would feel."""
        angle = min(max(float(angle_deg), 0.0), 360.0)
        self.angle_deg = angle
        if self.latest_pool is not None:
            sample = friction_at(self.latest_pool, angle)
        else:
            sample = FrictionSample(
                angle_deg=angle,
                offset_s=angle_to_offset(angle, self.grid),
                friction=0.0,
                over_cap=False,
            )
        self.outbox.send(self.reply_to, "FrictionEcho", {
            "angle_deg": sample.angle_deg,
            "offset_s": sample.offset_s,
            "friction": sample.friction,
            "over_cap": sample.over_cap,
        })
        return sample

    def press(self) -> Optional[Message]:
        """The ordinary on-button: book at the offset the dial points to."""
        if self.awaiting_reply or self.booking is not None or self.heating:
            logger.info("%s: press ignored, booking already in flight",
                        self.appliance_id)
            return None
        offset = angle_to_offset(self.angle_deg, self.grid)
        offset = min(offset, self.horizon_s - self.heat_duration_s)
        self.awaiting_reply = True
        return self.outbox.send(self.household, "BookingRequest", {
            "appliance_id": self.appliance_id,
            "start_offset_s": offset,
            "duration_s": self.heat_duration_s,
            "power_w": self.rated_w,
        })

    def abort(self) -> None:
        """Off-button during the countdown cancels the pending booking."""
        if not self.allow_abort:
            logger.info("%s: abort disabled by config", self.appliance_id)
            return
        if self.booking is None or self.heating:
            logger.info("%s: nothing to abort", self.appliance_id)
            return
        self.outbox.send(self.household, "CancelBooking",
                         {"booking_id": self.booking["booking_id"]})

    def on_demand(self) -> None:
        """Scripted user: a cup of tea is wanted right now.

        Immediate users slam the dial to zero; compliant users rotate to
        the recommended minimum-peak slot first. Manual kettles leave
        demands to a human.
        """
        if self.policy == "manual":
            logger.info("%s: demand ignored in manual mode", self.appliance_id)
            return
        offset = 0
        if self.policy == "compliant" and self.latest_pool is not None:
            offset = recommend_slot(
                self.latest_pool, self.heat_duration_s, self.rated_w, 0
            )
        offset = min(offset, self.horizon_s - self.heat_duration_s)
        self.rotate(offset_to_angle(offset, self.grid))
        self.press()

    def on_power_granted(self, msg: Message) -> None:
        """Deferred power-on arrived: start heating, report the draw."""
        p = msg.payload
        if self.booking is None or p["booking_id"] != self.booking["booking_id"]:
            logger.warning("%s: PowerOn for unknown booking %r ignored",
                           self.appliance_id, p["booking_id"])
            return
        self.heating = True
        self.heat_end_s = p["start_abs_s"] + p["duration_s"]
        self.outbox.send(self.household, "LoadMeasurement", {
            "appliance_id": self.appliance_id, "draw_w": p["power_w"],
        })
        self._send_status()

    def tick(self, now: int) -> None:
        self.now = now
        self.origin = (now // self.bucket_s) * self.bucket_s
        if self.heating and now >= self.heat_end_s:
            self.heating = False
            self.booking = None
            self.outbox.send(self.household, "LoadMeasurement", {
                "appliance_id": self.appliance_id, "draw_w": 0,
            })
            self._send_status()

    def led_state(self) -> tuple[bool, ...]:
        """One flag per bucket, lit where an own booking overlaps the window."""
        led = [False] * self.grid.bucket_count
        if self.booking is not None:
            lo = max(self.booking["start_abs_s"], self.origin)
            hi = min(self.booking["start_abs_s"] + self.booking["duration_s"],
                     self.origin + self.horizon_s)
            t = lo
            while t < hi:
                led[(t - self.origin) // self.bucket_s] = True
                t += self.bucket_s
        return tuple(led)

    def _on_pool_update(self, msg: Message) -> None:
        from .protocol import biased_from_update

        seq = msg.payload["broadcast_seq"]
        if seq <= self._latest_pool_seq:
            return
        if self._latest_pool_seq and seq > self._latest_pool_seq + 1:
            self.missed_updates += seq - self._latest_pool_seq - 1
        self._latest_pool_seq = seq
        self.latest_pool = biased_from_update(msg.payload)

    def _on_ack(self, msg: Message) -> None:
        p = msg.payload
        self.awaiting_reply = False
        if p["op"] == "book":
            self.booking = {
                "booking_id": p["booking_id"],
                "appliance_id": self.appliance_id,
                "start_abs_s": p["start_abs_s"],
                "duration_s": p["duration_s"],
                "power_w": p["power_w"],
            }
            if p["over_cap"]:
                logger.info("%s: booking accepted but over the pool cap",
                            self.appliance_id)
        else:  # cancel
            self.booking = None
        self._send_status()

    def _on_reject(self, msg: Message) -> None:
        self.awaiting_reply = False
        if msg.payload["op"] == "book":
            logger.warning("%s: booking rejected: %s", self.appliance_id,
                           msg.payload["reason"])
        self._send_status()

    def _send_status(self) -> None:
        self.outbox.send(self.reply_to, "KettleStatus", {
            "appliance_id": self.appliance_id,
            "angle_deg": self.angle_deg,
            "booking": dict(self.booking) if self.booking else None,
            "heating": self.heating,
            "led": list(self.led_state()),
            "origin": self.origin,
        })
