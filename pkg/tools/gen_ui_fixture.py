#!/usr/bin/env python3
"""Record a scripted control-channel session for the dashboard tests.

Replays a short manual session (rotate, rotate, press, tick) against a
real deployment and captures every UI-bound wire line, exactly as the
live server would stream them. Output is frozen at
frontend/tests/fixtures/session.txt; regenerate after protocol changes:

    python3 tools/gen_ui_fixture.py
"""

from pathlib import Path

from kettlepool.protocol import encode, pool_update_payload
from kettlepool.sim import SimConfig, Simulation, kettle_id

OUT = Path(__file__).resolve().parent.parent / "frontend" / "tests" / "fixtures"


def main():
    lines: list[bytes] = []
    cfg = SimConfig(
        households=2,
        seed=5,
        policy="manual",
        sim_duration_s=900,
        tariff=tuple([2.0] * 10 + [1.0] * 20),
        cap_w=3500,
    )
    sim = Simulation(cfg, ui_handler=lambda msg: lines.append(encode(msg)))
    pool = sim.deployment.pool
    demo = kettle_id(0)

    def ui_update():
        if pool.last_broadcast is not None:
            pool.outbox.send("ui", "PoolProfileUpdate",
                             pool_update_payload(pool.last_broadcast,
                                                 pool.broadcast_seq))
        pool.metrics_snapshot("ui")
        sim.net.pump()

    sim.step(0)
    # the second household books first, so the pool shows existing load
    sim.sim_outbox.send(kettle_id(1), "Rotate", {"angle_deg": 0})
    sim.sim_outbox.send(kettle_id(1), "Press")
    sim.net.pump()
    ui_update()

    # scripted user session on the demo kettle
    for angle in (45, 90.5, 216):
        sim.sim_outbox.send(demo, "Rotate", {"angle_deg": angle})
        sim.net.pump()
    sim.sim_outbox.send(demo, "Press")
    sim.net.pump()

    sim.step(1)
    ui_update()

    OUT.mkdir(parents=True, exist_ok=True)
    (OUT / "session.txt").write_bytes(b"".join(lines))
    print(f"wrote {len(lines)} lines to {OUT / 'session.txt'}")


if __name__ == "__main__":
    main()
