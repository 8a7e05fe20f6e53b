"""Newline-delimited wire protocol spoken by kettles, household services,
the pool and the UI.

One message is one UTF-8 JSON line with a fixed envelope::

    {"kind": ..., "sender": ..., "seq": ..., "sent_at": ..., "payload": {...}}

Encoding is canonical (fixed key order, compact separators, ASCII escapes)
so identical messages always encode to identical bytes. The full
field-by-field payload schema lives in ``protocol.md`` at the repo root.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Optional

from .profiles import BiasedProfile, LoadProfile, TimeGrid

PROTOCOL_VERSION = 1
MAX_LINE_BYTES = 1 << 20

# Core service-to-service kinds (Figure-4 style topology).
CORE_KINDS = (
    "RegisterHousehold",
    "RegisterAppliance",
    "ProfileReport",
    "PoolProfileUpdate",
    "BookingRequest",
    "BookingAck",
    "BookingReject",
    "CancelBooking",
    "PowerOn",
    "TickSync",
    "MetricsSnapshot",
)

# Kettle control-channel and telemetry kinds, same framing. The UI and the
# simulation harness both drive agents through these.
CONTROL_KINDS = (
    "Rotate",
    "Press",
    "Abort",
    "Demand",
    "FrictionEcho",
    "KettleStatus",
    "LoadMeasurement",
)

KINDS = frozenset(CORE_KINDS + CONTROL_KINDS)


class ProtocolError(ValueError):
    """Base for anything wrong with a wire line."""


class ParseError(ProtocolError):
    """Malformed syntax; carries the byte offset of the problem."""

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class VersionError(ProtocolError):
    """Syntactically fine but an unknown message kind."""

    def __init__(self, kind: str):
        super().__init__(f"unknown message kind {kind!r}")
        self.kind = kind


class ValidationError(ProtocolError):
    """Well-formed line whose content violates an invariant."""


@dataclass(frozen=True)
class Message:
    kind: str
    sender: str
    seq: int
    sent_at: int
    payload: dict


def _is_id(v: Any) -> bool:
    return (
        isinstance(v, str)
        and 0 < len(v) <= 64
        and not any(c in v for c in "\n\r\t")
        and v == v.strip()
    )


def _check_id(name: str, v: Any) -> None:
    if not _is_id(v):
        raise ValidationError(f"{name} must be a short non-blank identifier, got {v!r}")


def _check_int(name: str, v: Any, minimum: Optional[int] = None) -> None:
    if not isinstance(v, int) or isinstance(v, bool):
        raise ValidationError(f"{name} must be an integer, got {v!r}")
    if minimum is not None and v < minimum:
        raise ValidationError(f"{name} must be >= {minimum}, got {v}")


def _check_number(name: str, v: Any) -> None:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValidationError(f"{name} must be a number, got {v!r}")
    if isinstance(v, float) and not math.isfinite(v):
        raise ValidationError(f"{name} must be finite")


def _check_bool(name: str, v: Any) -> None:
    if not isinstance(v, bool):
        raise ValidationError(f"{name} must be a boolean, got {v!r}")


def _check_int_array(name: str, v: Any, length: Optional[int] = None) -> None:
    if not isinstance(v, list):
        raise ValidationError(f"{name} must be an array")
    for x in v:
        if x.__class__ is not int or x < 0:
            _check_int(f"{name}[]", x, minimum=0)
    if length is not None and len(v) != length:
        raise ValidationError(f"{name} must have {length} entries, got {len(v)}")


def _check_grid(name: str, v: Any) -> TimeGrid:
    if not isinstance(v, dict) or set(v) != {"origin", "horizon_s", "bucket_s"}:
        raise ValidationError(f"{name} must be an object with origin/horizon_s/bucket_s")
    _check_int(f"{name}.origin", v["origin"], minimum=0)
    _check_int(f"{name}.horizon_s", v["horizon_s"], minimum=1)
    _check_int(f"{name}.bucket_s", v["bucket_s"], minimum=1)
    try:
        return TimeGrid(v["horizon_s"], v["bucket_s"], v["origin"])
    except ValueError as exc:
        raise ValidationError(f"{name}: {exc}") from exc


def _check_booking_obj(name: str, v: Any) -> None:
    if not isinstance(v, dict) or set(v) != {
        "booking_id", "appliance_id", "start_abs_s", "duration_s", "power_w",
    }:
        raise ValidationError(f"{name} must be a booking object")
    _check_id(f"{name}.booking_id", v["booking_id"])
    _check_id(f"{name}.appliance_id", v["appliance_id"])
    _check_int(f"{name}.start_abs_s", v["start_abs_s"], minimum=0)
    _check_int(f"{name}.duration_s", v["duration_s"], minimum=1)
    _check_int(f"{name}.power_w", v["power_w"], minimum=1)


def _validate_payload(kind: str, p: dict) -> None:
    """Check a payload against its kind's schema; raises ValidationError."""

    def require(*fields: str) -> None:
        if set(p) != set(fields):
            missing = set(fields) - set(p)
            extra = set(p) - set(fields)
            parts = []
            if missing:
                parts.append(f"missing {sorted(missing)}")
            if extra:
                parts.append(f"unexpected {sorted(extra)}")
            raise ValidationError(f"{kind} payload: {', '.join(parts)}")

    if kind == "RegisterHousehold":
        require("household_id", "protocol_version", "grid")
        _check_id("household_id", p["household_id"])
        _check_int("protocol_version", p["protocol_version"], minimum=1)
        _check_grid("grid", p["grid"])
    elif kind == "RegisterAppliance":
        require("appliance_id", "appliance_kind", "rated_w", "protocol_version")
        _check_id("appliance_id", p["appliance_id"])
        _check_id("appliance_kind", p["appliance_kind"])
        _check_int("rated_w", p["rated_w"], minimum=1)
        _check_int("protocol_version", p["protocol_version"], minimum=1)
    elif kind == "ProfileReport":
        require("household_id", "grid", "watts")
        _check_id("household_id", p["household_id"])
        grid = _check_grid("grid", p["grid"])
        _check_int_array("watts", p["watts"], length=grid.bucket_count)
    elif kind == "PoolProfileUpdate":
        require("broadcast_seq", "grid", "raw", "biased_milli", "cap_w")
        _check_int("broadcast_seq", p["broadcast_seq"], minimum=1)
        grid = _check_grid("grid", p["grid"])
        _check_int_array("raw", p["raw"], length=grid.bucket_count)
        _check_int_array("biased_milli", p["biased_milli"], length=grid.bucket_count)
        if p["cap_w"] is not None:
            _check_int("cap_w", p["cap_w"], minimum=1)
    elif kind == "BookingRequest":
        require("appliance_id", "start_offset_s", "duration_s", "power_w")
        _check_id("appliance_id", p["appliance_id"])
        _check_int("start_offset_s", p["start_offset_s"], minimum=0)
        _check_int("duration_s", p["duration_s"], minimum=1)
        _check_int("power_w", p["power_w"], minimum=1)
    elif kind == "BookingAck":
        require("op", "booking_id", "appliance_id", "start_offset_s",
                "start_abs_s", "duration_s", "power_w", "over_cap")
        if p["op"] not in ("book", "cancel"):
            raise ValidationError(f"BookingAck op must be book|cancel, got {p['op']!r}")
        _check_id("booking_id", p["booking_id"])
        _check_id("appliance_id", p["appliance_id"])
        if p["op"] == "book":
            _check_int("start_offset_s", p["start_offset_s"], minimum=0)
            _check_int("start_abs_s", p["start_abs_s"], minimum=0)
            _check_int("duration_s", p["duration_s"], minimum=1)
            _check_int("power_w", p["power_w"], minimum=1)
        _check_bool("over_cap", p["over_cap"])
    elif kind == "BookingReject":
        require("op", "appliance_id", "booking_id", "reason")
        if p["op"] not in ("book", "cancel"):
            raise ValidationError(f"BookingReject op must be book|cancel, got {p['op']!r}")
        _check_id("appliance_id", p["appliance_id"])
        if p["booking_id"] is not None:
            _check_id("booking_id", p["booking_id"])
        if not isinstance(p["reason"], str) or not p["reason"]:
            raise ValidationError("reason must be a non-empty string")
    elif kind == "CancelBooking":
        require("booking_id")
        _check_id("booking_id", p["booking_id"])
    elif kind == "PowerOn":
        require("booking_id", "appliance_id", "start_abs_s", "duration_s", "power_w")
        _check_id("booking_id", p["booking_id"])
        _check_id("appliance_id", p["appliance_id"])
        _check_int("start_abs_s", p["start_abs_s"], minimum=0)
        _check_int("duration_s", p["duration_s"], minimum=1)
        _check_int("power_w", p["power_w"], minimum=1)
    elif kind == "TickSync":
        require()
    elif kind == "MetricsSnapshot":
        require("member_count", "grid", "raw", "biased_milli",
                "peak_w", "peak_bucket", "load_factor", "cap_w")
        _check_int("member_count", p["member_count"], minimum=0)
        grid = _check_grid("grid", p["grid"])
        _check_int_array("raw", p["raw"], length=grid.bucket_count)
        _check_int_array("biased_milli", p["biased_milli"], length=grid.bucket_count)
        _check_int("peak_w", p["peak_w"], minimum=0)
        _check_int("peak_bucket", p["peak_bucket"], minimum=0)
        _check_number("load_factor", p["load_factor"])
        if not 0 <= p["load_factor"] <= 1:
            raise ValidationError("load_factor must be within [0, 1]")
        if p["cap_w"] is not None:
            _check_int("cap_w", p["cap_w"], minimum=1)
    elif kind == "Rotate":
        require("angle_deg")
        _check_number("angle_deg", p["angle_deg"])
    elif kind in ("Press", "Abort", "Demand"):
        require()
    elif kind == "FrictionEcho":
        require("angle_deg", "offset_s", "friction", "over_cap")
        _check_number("angle_deg", p["angle_deg"])
        _check_int("offset_s", p["offset_s"], minimum=0)
        _check_number("friction", p["friction"])
        if not 0 <= p["friction"] <= 1:
            raise ValidationError("friction must be within [0, 1]")
        _check_bool("over_cap", p["over_cap"])
    elif kind == "KettleStatus":
        require("appliance_id", "angle_deg", "booking", "heating", "led", "origin")
        _check_id("appliance_id", p["appliance_id"])
        _check_number("angle_deg", p["angle_deg"])
        if p["booking"] is not None:
            _check_booking_obj("booking", p["booking"])
        _check_bool("heating", p["heating"])
        if not isinstance(p["led"], list):
            raise ValidationError("led must be an array of booleans")
        for x in p["led"]:
            _check_bool("led[]", x)
        _check_int("origin", p["origin"], minimum=0)
    elif kind == "LoadMeasurement":
        require("appliance_id", "draw_w")
        _check_id("appliance_id", p["appliance_id"])
        _check_int("draw_w", p["draw_w"], minimum=0)
    else:  # pragma: no cover - guarded by KINDS check before dispatch
        raise VersionError(kind)


# Canonical payload key order per kind; encode always emits every field.
_FIELD_ORDER = {
    "RegisterHousehold": ("household_id", "protocol_version", "grid"),
    "RegisterAppliance": ("appliance_id", "appliance_kind", "rated_w", "protocol_version"),
    "ProfileReport": ("household_id", "grid", "watts"),
    "PoolProfileUpdate": ("broadcast_seq", "grid", "raw", "biased_milli", "cap_w"),
    "BookingRequest": ("appliance_id", "start_offset_s", "duration_s", "power_w"),
    "BookingAck": ("op", "booking_id", "appliance_id", "start_offset_s",
                   "start_abs_s", "duration_s", "power_w", "over_cap"),
    "BookingReject": ("op", "appliance_id", "booking_id", "reason"),
    "CancelBooking": ("booking_id",),
    "PowerOn": ("booking_id", "appliance_id", "start_abs_s", "duration_s", "power_w"),
    "TickSync": (),
    "MetricsSnapshot": ("member_count", "grid", "raw", "biased_milli",
                        "peak_w", "peak_bucket", "load_factor", "cap_w"),
    "Rotate": ("angle_deg",),
    "Press": (),
    "Abort": (),
    "Demand": (),
    "FrictionEcho": ("angle_deg", "offset_s", "friction", "over_cap"),
    "KettleStatus": ("appliance_id", "angle_deg", "booking", "heating", "led", "origin"),
    "LoadMeasurement": ("appliance_id", "draw_w"),
}

_GRID_KEYS = ("origin", "horizon_s", "bucket_s")


def _canonical_value(kind: str, key: str, value: Any) -> Any:
    if isinstance(value, dict):
        if set(value) == set(_GRID_KEYS):
            return {k: value[k] for k in _GRID_KEYS}
        return {k: value[k] for k in sorted(value)}
    return value


def validate_message(m: Message) -> None:
    """Raise a ProtocolError subclass unless ``m`` is a legal message."""
    if m.kind not in KINDS:
        raise VersionError(m.kind)
    _check_id("sender", m.sender)
    _check_int("seq", m.seq, minimum=1)
    _check_int("sent_at", m.sent_at, minimum=0)
    if not isinstance(m.payload, dict):
        raise ValidationError("payload must be an object")
    _validate_payload(m.kind, m.payload)


def encode(m: Message) -> bytes:
    """Encode to one canonical newline-terminated UTF-8 line."""
    validate_message(m)
    body = {
        "kind": m.kind,
        "sender": m.sender,
        "seq": m.seq,
        "sent_at": m.sent_at,
        "payload": {
            key: _canonical_value(m.kind, key, m.payload[key])
            for key in _FIELD_ORDER[m.kind]
        },
    }
    return (json.dumps(body, separators=(",", ":"), ensure_ascii=True) + "\n").encode("ascii")


def decode(line: "bytes | str") -> Message:
    """Parse one wire line back into a Message.

    Raises ParseError for broken syntax (with a byte offset), VersionError
    for unknown kinds, ValidationError for invariant violations. Never
    raises anything else for inputs up to 1 MiB.
    """
    if isinstance(line, str):
        data = line.encode("utf-8", errors="surrogatepass")
    else:
        data = bytes(line)
    if len(data) > MAX_LINE_BYTES:
        raise ParseError(f"line exceeds {MAX_LINE_BYTES} bytes", offset=MAX_LINE_BYTES)
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"invalid UTF-8: {exc.reason}", offset=exc.start) from exc
    text = text[:-1] if text.endswith("\n") else text
    for bad in ("\n", "\r"):
        if bad in text:
            raise ParseError("interior newline", offset=text.find(bad))
    try:
        body = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"bad JSON: {exc.msg}", offset=exc.pos) from exc
    if not isinstance(body, dict):
        raise ValidationError("top level must be an object")
    expected = {"kind", "sender", "seq", "sent_at", "payload"}
    if set(body) != expected:
        raise ValidationError(
            f"envelope keys must be {sorted(expected)}, got {sorted(body)}"
        )
    if not isinstance(body["kind"], str):
        raise ValidationError("kind must be a string")
    m = Message(
        kind=body["kind"],
        sender=body["sender"],
        seq=body["seq"],
        sent_at=body["sent_at"],
        payload=body["payload"],
    )
    validate_message(m)
    return m


class SequenceTracker:
    """Detects dropped or stale messages from per-sender seq counters."""

    def __init__(self):
        self._last: dict[str, int] = {}

    def observe(self, sender: str, seq: int) -> tuple[int, bool]:
        """Returns (missed_count, is_stale) and remembers the newest seq."""
        last = self._last.get(sender)
        if last is None:
            self._last[sender] = seq
            return 0, False
        if seq <= last:
            return 0, True
        self._last[sender] = seq
        return seq - last - 1, False


def grid_payload(grid: TimeGrid) -> dict:
    return {"origin": grid.origin, "horizon_s": grid.horizon_s, "bucket_s": grid.bucket_s}


def grid_from_payload(p: dict) -> TimeGrid:
    return TimeGrid(p["horizon_s"], p["bucket_s"], p["origin"])


def profile_report_payload(household_id: str, profile: LoadProfile) -> dict:
    return {
        "household_id": household_id,
        "grid": grid_payload(profile.grid),
        "watts": list(profile.watts),
    }


def profile_from_report(p: dict) -> LoadProfile:
    return LoadProfile(grid_from_payload(p["grid"]), tuple(p["watts"]))


def pool_update_payload(bp: BiasedProfile, broadcast_seq: int) -> dict:
    return {
        "broadcast_seq": broadcast_seq,
        "grid": grid_payload(bp.grid),
        "raw": list(bp.raw.watts),
        "biased_milli": list(bp.biased_milli),
        "cap_w": bp.cap_w,
    }


def biased_from_update(p: dict) -> BiasedProfile:
    grid = grid_from_payload(p["grid"])
    return BiasedProfile(
        grid=grid,
        biased_milli=tuple(p["biased_milli"]),
        raw=LoadProfile(grid, tuple(p["raw"])),
        cap_w=p["cap_w"],
    )
