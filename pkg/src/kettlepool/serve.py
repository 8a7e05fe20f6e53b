"""Live demo backend for the browser dashboard.

Runs one simulation on a paced virtual clock and exposes it over HTTP:

    GET  /api/stream    server-sent events; each event's data is one wire
                        line (PoolProfileUpdate, MetricsSnapshot, friction
                        echoes, kettle status)
    GET  /api/snapshot  the latest MetricsSnapshot and PoolProfileUpdate
                        lines, newline separated
    GET  /api/info      session bootstrap (grid, demo kettle id, ...)
    POST /api/control   wire lines (Rotate/Press/Abort) for the demo kettle
    GET  /...           static dashboard files, when built

The first kettle is switched to manual and belongs to the browser; the
remaining kettles keep their scripted policy so the community graph has
life in it.
"""

from __future__ import annotations

import json
import logging
import queue
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional

from .bus import Outbox
from .protocol import ProtocolError, decode, encode, grid_payload
from .sim import Simulation, SimConfig, kettle_id

logger = logging.getLogger(__name__)

CONTROL_KINDS_ALLOWED = ("Rotate", "Press", "Abort")
STATIC_TYPES = {
    ".html": "text/html; charset=utf-8",
    ".js": "text/javascript; charset=utf-8",
    ".css": "text/css; charset=utf-8",
    ".map": "application/json",
    ".svg": "image/svg+xml",
}

FALLBACK_PAGE = b"""<!doctype html>
<html><head><title>kettlepool</title></head>
<body style="font-family: sans-serif">
<h1>kettlepool live session</h1>
<p>The dashboard is not built. Build it with:</p>
<pre>cd frontend && npm install && npm run build</pre>
<p>Raw endpoints: <a href="/api/info">/api/info</a>,
<a href="/api/snapshot">/api/snapshot</a>, /api/stream (SSE)</p>
</body></html>
"""


def default_static_dir() -> Optional[Path]:
    candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    return candidate if candidate.is_dir() else None


class KettleServer:
    """One live session: paced simulation thread plus an HTTP front."""

    def __init__(self, cfg: SimConfig, host: str = "127.0.0.1", port: int = 0,
                 static_dir: Optional[Path] = None, metrics_every_s: int = 1):
        cfg.validate()
        self.cfg = cfg
        self.lock = threading.RLock()
        self.subscribers: list[queue.SimpleQueue] = []
        self.last_lines: dict[str, bytes] = {}
        self.metrics_every_s = max(metrics_every_s, 1)
        self.sim = Simulation(cfg, ui_handler=self._on_ui_message)
        self.demo_kettle = kettle_id(0)
        self.sim.deployment.agents[0].policy = "manual"
        self._ui_outbox = Outbox(self.sim.net, "uiclient")
        self._seen_broadcast_seq = 0
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None
        self.static_dir = static_dir if static_dir is not None else default_static_dir()
        handler = type("Handler", (_Handler,), {"server_ref": self})
        self.httpd = ThreadingHTTPServer((host, port), handler)
        self.httpd.daemon_threads = True

    @property
    def address(self) -> tuple[str, int]:
        return self.httpd.server_address[0], self.httpd.server_address[1]

    # -- simulation side -----------------------------------------------------

    def _on_ui_message(self, msg) -> None:
        line = encode(msg)
        self.last_lines[msg.kind] = line
        for q in list(self.subscribers):
            q.put(line)

    def _pace(self) -> float:
        scale = self.cfg.time_scale if self.cfg.time_scale > 0 else 1.0
        return self.cfg.tick_s / scale

    def _tick_loop(self) -> None:
        t = 0
        pace = self._pace()
        pool = self.sim.deployment.pool
        while not self._stop.is_set():
            with self.lock:
                self.sim.step(t)
                if pool.broadcast_seq != self._seen_broadcast_seq \
                        and pool.last_broadcast is not None:
                    self._seen_broadcast_seq = pool.broadcast_seq
                    from .protocol import pool_update_payload

                    pool.outbox.send("ui", "PoolProfileUpdate",
                                     pool_update_payload(pool.last_broadcast,
                                                         pool.broadcast_seq))
                if t % self.metrics_every_s == 0:
                    pool.metrics_snapshot("ui")
                self.sim.net.pump()
            t += self.cfg.tick_s
            self._stop.wait(pace)

    # -- HTTP side -----------------------------------------------------------

    def subscribe(self) -> queue.SimpleQueue:
        q = queue.SimpleQueue()
        with self.lock:
            for kind in ("PoolProfileUpdate", "MetricsSnapshot", "KettleStatus",
                         "FrictionEcho"):
                if kind in self.last_lines:
                    q.put(self.last_lines[kind])
            self.subscribers.append(q)
        return q

    def unsubscribe(self, q) -> None:
        with self.lock:
            if q in self.subscribers:
                self.subscribers.remove(q)

    def snapshot_lines(self) -> bytes:
        with self.lock:
            parts = [self.last_lines[k] for k in ("MetricsSnapshot", "PoolProfileUpdate")
                     if k in self.last_lines]
        return b"".join(parts)

    def info(self) -> dict:
        with self.lock:
            return {
                "grid": grid_payload(self.sim.deployment.pool.grid),
                "households": self.cfg.households,
                "demo_kettle": self.demo_kettle,
                "policy": self.sim.policy,
                "heat_duration_s": self.cfg.heat_duration_s,
                "kettle_w": self.cfg.kettle_w,
                "cap_w": self.cfg.cap_w,
                "tick_s": self.cfg.tick_s,
            }

    def inject_control(self, body: bytes) -> int:
        """Validate and forward UI control lines to the demo kettle."""
        count = 0
        for raw in body.splitlines():
            if not raw.strip():
                continue
            msg = decode(raw)
            if msg.kind not in CONTROL_KINDS_ALLOWED:
                raise ProtocolError(f"kind {msg.kind} not allowed on the control channel")
            with self.lock:
                self._ui_outbox.send(self.demo_kettle, msg.kind, msg.payload)
                self.sim.net.pump()
            count += 1
        return count

    # -- lifecycle -----------------------------------------------------------

    def start(self) -> None:
        self._thread = threading.Thread(target=self._tick_loop, daemon=True,
                                        name="kettlepool-sim")
        self._thread.start()
        threading.Thread(target=self.httpd.serve_forever, daemon=True,
                         name="kettlepool-http").start()

    def stop(self) -> None:
        self._stop.set()
        self.httpd.shutdown()
        self.httpd.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)


class _Handler(BaseHTTPRequestHandler):
    server_ref: KettleServer

    def log_message(self, fmt, *args):  # quiet by default
        logger.debug("http: " + fmt, *args)

    def _reply(self, status: int, body: bytes, content_type: str) -> None:
        self.send_response(status)
        self.send_header("Content-Type", content_type)
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def do_GET(self):
        srv = self.server_ref
        if self.path == "/api/stream":
            self._stream(srv)
        elif self.path == "/api/snapshot":
            self._reply(200, srv.snapshot_lines(), "text/plain; charset=utf-8")
        elif self.path == "/api/info":
            body = json.dumps(srv.info()).encode()
            self._reply(200, body, "application/json")
        else:
            self._static(srv)

    def do_POST(self):
        srv = self.server_ref
        if self.path != "/api/control":
            self._reply(404, b"not found\n", "text/plain")
            return
        length = int(self.headers.get("Content-Length", "0"))
        body = self.rfile.read(length)
        try:
            count = srv.inject_control(body)
        except ProtocolError as exc:
            self._reply(400, f"{exc}\n".encode(), "text/plain")
            return
        self._reply(202, json.dumps({"accepted": count}).encode() + b"\n",
                    "application/json")

    def _stream(self, srv: KettleServer) -> None:
        self.send_response(200)
        self.send_header("Content-Type", "text/event-stream")
        self.send_header("Cache-Control", "no-cache")
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        q = srv.subscribe()
        try:
            while True:
                try:
                    line = q.get(timeout=5.0)
                except queue.Empty:
                    self.wfile.write(b": ping\n\n")
                    self.wfile.flush()
                    continue
                self.wfile.write(b"data: " + line.rstrip(b"\n") + b"\n\n")
                self.wfile.flush()
        except (BrokenPipeError, ConnectionResetError, OSError):
            pass
        finally:
            srv.unsubscribe(q)

    def _static(self, srv: KettleServer) -> None:
        path = self.path.split("?", 1)[0]
        if path in ("/", "/index.html"):
            rel = "index.html"
        else:
            rel = path.lstrip("/")
        if srv.static_dir is None:
            if rel == "index.html":
                self._reply(200, FALLBACK_PAGE, "text/html; charset=utf-8")
            else:
                self._reply(404, b"not found\n", "text/plain")
            return
        target = (srv.static_dir / rel).resolve()
        if not str(target).startswith(str(srv.static_dir.resolve())) \
                or not target.is_file():
            self._reply(404, b"not found\n", "text/plain")
            return
        ctype = STATIC_TYPES.get(target.suffix, "application/octet-stream")
        self._reply(200, target.read_bytes(), ctype)


def serve(cfg: SimConfig, host: str = "127.0.0.1", port: int = 8734) -> None:
    """Run a live session until interrupted."""
    server = KettleServer(cfg, host=host, port=port)
    server.start()
    shown_host, shown_port = server.address
    print(f"kettlepool live session on http://{shown_host}:{shown_port}/ "
          f"(demo kettle: {server.demo_kettle}, Ctrl-C to stop)")
    try:
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        pass
    finally:
        server.stop()
