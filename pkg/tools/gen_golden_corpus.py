#!/usr/bin/env python3
"""Regenerate the frozen wire-protocol corpus under tests/golden/.

Run from the repo root after a deliberate protocol change:

    python3 tools/gen_golden_corpus.py

The valid file is the exact byte concatenation of canonical encodings; the
invalid file maps base64 payloads to the error class decode must raise.
"""

import base64
import json
from pathlib import Path

from kettlepool.protocol import Message, encode

GOLDEN = Path(__file__).resolve().parent.parent / "tests" / "golden"

GRID = {"origin": 0, "horizon_s": 900, "bucket_s": 30}
SMALL_GRID = {"origin": 120, "horizon_s": 120, "bucket_s": 30}


def messages():
    m = Message
    yield m("RegisterHousehold", "hh01", 1, 0,
            {"household_id": "hh01", "protocol_version": 1, "grid": GRID})
    yield m("RegisterHousehold", "hh-åkesson", 2, 5,
            {"household_id": "hh-åkesson", "protocol_version": 1, "grid": SMALL_GRID})
    yield m("RegisterAppliance", "kettle01", 1, 0,
            {"appliance_id": "kettle01", "appliance_kind": "kettle",
             "rated_w": 2000, "protocol_version": 1})
    yield m("ProfileReport", "hh01", 3, 42,
            {"household_id": "hh01", "grid": GRID, "watts": [0] * 30})
    yield m("ProfileReport", "hh02", 9, 90,
            {"household_id": "hh02", "grid": GRID,
             "watts": [2000] * 6 + [0] * 23 + [150]})
    yield m("PoolProfileUpdate", "pool", 17, 91,
            {"broadcast_seq": 4, "grid": GRID,
             "raw": [4000] * 6 + [0] * 24,
             "biased_milli": [8000000] * 6 + [0] * 24,
             "cap_w": 6000})
    yield m("PoolProfileUpdate", "pool", 18, 92,
            {"broadcast_seq": 5, "grid": SMALL_GRID,
             "raw": [0, 1, 2, 3], "biased_milli": [0, 500, 1000, 1500],
             "cap_w": None})
    yield m("BookingRequest", "kettle01", 4, 100,
            {"appliance_id": "kettle01", "start_offset_s": 180,
             "duration_s": 180, "power_w": 2000})
    yield m("BookingAck", "hh01", 11, 100,
            {"op": "book", "booking_id": "hh01-b000001", "appliance_id": "kettle01",
             "start_offset_s": 180, "start_abs_s": 180, "duration_s": 180,
             "power_w": 2000, "over_cap": False})
    yield m("BookingAck", "hh01", 12, 130,
            {"op": "cancel", "booking_id": "hh01-b000001", "appliance_id": "kettle01",
             "start_offset_s": None, "start_abs_s": None, "duration_s": None,
             "power_w": None, "over_cap": False})
    yield m("BookingReject", "hh01", 13, 131,
            {"op": "book", "appliance_id": "kettle01", "booking_id": None,
             "reason": "booking ends beyond horizon"})
    yield m("CancelBooking", "kettle01", 5, 120,
            {"booking_id": "hh01-b000001"})
    yield m("PowerOn", "hh01", 14, 180,
            {"booking_id": "hh01-b000002", "appliance_id": "kettle01",
             "start_abs_s": 180, "duration_s": 180, "power_w": 2000})
    yield m("TickSync", "clock", 1, 0, {})
    yield m("TickSync", "clock", 901, 900, {})
    yield m("MetricsSnapshot", "pool", 19, 93,
            {"member_count": 20, "grid": GRID,
             "raw": [8000] * 30, "biased_milli": [8000000] * 30,
             "peak_w": 8000, "peak_bucket": 0, "load_factor": 1.0, "cap_w": None})
    yield m("Rotate", "ui", 1, 50, {"angle_deg": 72.0})
    yield m("Rotate", "ui", 2, 51, {"angle_deg": 360})
    yield m("Press", "ui", 3, 52, {})
    yield m("Abort", "ui", 4, 53, {})
    yield m("Demand", "sim", 7, 0, {})
    yield m("FrictionEcho", "kettle01", 6, 52,
            {"angle_deg": 72.0, "offset_s": 180, "friction": 0.5, "over_cap": False})
    yield m("KettleStatus", "kettle01", 7, 52,
            {"appliance_id": "kettle01", "angle_deg": 72.0,
             "booking": {"booking_id": "hh01-b000002", "appliance_id": "kettle01",
                         "start_abs_s": 180, "duration_s": 180, "power_w": 2000},
             "heating": False, "led": [False] * 6 + [True] * 6 + [False] * 18,
             "origin": 0})
    yield m("KettleStatus", "kettle01", 8, 400,
            {"appliance_id": "kettle01", "angle_deg": 0,
             "booking": None, "heating": True, "led": [False] * 30, "origin": 390})
    yield m("LoadMeasurement", "kettle01", 9, 180,
            {"appliance_id": "kettle01", "draw_w": 2000})
    yield m("LoadMeasurement", "kettle01", 10, 360,
            {"appliance_id": "kettle01", "draw_w": 0})


INVALID = [
    ("truncated-json", b'{"kind":"TickSync","sender":"x"', "parse"),
    ("empty-line", b"", "parse"),
    ("bad-utf8", b'\xff\xfe{"kind":"TickSync"}', "parse"),
    ("interior-newline", b'{"a":1}\nmore\n', "parse"),
    ("trailing-garbage", b'{"kind":"TickSync"} extra\n', "parse"),
    ("not-an-object", b"[1,2,3]\n", "validation"),
    ("missing-envelope-keys", b'{"kind":"TickSync"}\n', "validation"),
    ("extra-envelope-key",
     b'{"kind":"TickSync","sender":"clock","seq":1,"sent_at":0,"payload":{},"x":1}\n',
     "validation"),
    ("non-string-kind",
     b'{"kind":5,"sender":"clock","seq":1,"sent_at":0,"payload":{}}\n',
     "validation"),
    ("unknown-kind",
     b'{"kind":"FutureThing","sender":"clock","seq":1,"sent_at":0,"payload":{}}\n',
     "version"),
    ("zero-seq",
     b'{"kind":"TickSync","sender":"clock","seq":0,"sent_at":0,"payload":{}}\n',
     "validation"),
    ("negative-watts",
     b'{"kind":"ProfileReport","sender":"hh01","seq":1,"sent_at":0,"payload":'
     b'{"household_id":"hh01","grid":{"origin":0,"horizon_s":60,"bucket_s":30},'
     b'"watts":[-5,0]}}\n',
     "validation"),
    ("watts-length-mismatch",
     b'{"kind":"ProfileReport","sender":"hh01","seq":1,"sent_at":0,"payload":'
     b'{"household_id":"hh01","grid":{"origin":0,"horizon_s":900,"bucket_s":30},'
     b'"watts":[0,0]}}\n',
     "validation"),
    ("bad-grid-division",
     b'{"kind":"ProfileReport","sender":"hh01","seq":1,"sent_at":0,"payload":'
     b'{"household_id":"hh01","grid":{"origin":0,"horizon_s":900,"bucket_s":29},'
     b'"watts":[0,0]}}\n',
     "validation"),
    ("friction-out-of-range",
     b'{"kind":"FrictionEcho","sender":"k","seq":1,"sent_at":0,"payload":'
     b'{"angle_deg":0,"offset_s":0,"friction":1.5,"over_cap":false}}\n',
     "validation"),
    ("bool-for-int",
     b'{"kind":"LoadMeasurement","sender":"k","seq":1,"sent_at":0,"payload":'
     b'{"appliance_id":"k","draw_w":true}}\n',
     "validation"),
    ("ticksync-with-payload",
     b'{"kind":"TickSync","sender":"clock","seq":1,"sent_at":0,"payload":{"now":4}}\n',
     "validation"),
    ("bad-ack-op",
     b'{"kind":"BookingAck","sender":"hh01","seq":1,"sent_at":0,"payload":'
     b'{"op":"frobnicate","booking_id":"b1","appliance_id":"k","start_offset_s":0,'
     b'"start_abs_s":0,"duration_s":30,"power_w":100,"over_cap":false}}\n',
     "validation"),
    ("blank-sender",
     b'{"kind":"TickSync","sender":"  ","seq":1,"sent_at":0,"payload":{}}\n',
     "validation"),
]


def main():
    GOLDEN.mkdir(parents=True, exist_ok=True)
    lines = b"".join(encode(m) for m in messages())
    (GOLDEN / "valid_lines.txt").write_bytes(lines)
    cases = [
        {"name": name, "base64": base64.b64encode(raw).decode("ascii"), "error": err}
        for name, raw, err in INVALID
    ]
    (GOLDEN / "invalid_cases.json").write_text(json.dumps(cases, indent=2) + "\n")
    print(f"wrote {len(lines.splitlines())} valid lines, {len(cases)} invalid cases")


if __name__ == "__main__":
    main()
