"""In-process message routing on a virtual clock.

Every send is encoded to its wire line, appended to the event log, and
decoded again at delivery, so components only ever talk through the real
protocol and the log is the complete wire traffic of a run. Delivery is
FIFO and single-threaded, which makes runs deterministic.
"""

from __future__ import annotations

import heapq
import logging
from collections import deque
from typing import Callable, Optional

from .protocol import Message, decode, encode

logger = logging.getLogger(__name__)


class LogEntry:
    __slots__ = ("t", "src", "dst", "line", "_message")

    def __init__(self, t: int, src: str, dst: str, line: bytes,
                 message: Optional[Message] = None):
        self.t = t
        self.src = src
        self.dst = dst
        self.line = line
        self._message = message

    def format(self) -> str:
        return f"{self.t}\t{self.src}\t{self.dst}\t{self.line.decode('ascii').rstrip()}"

    def message(self) -> Message:
        if self._message is None:
            self._message = decode(self.line)
        return self._message


BROADCAST = "*"


class Network:
    """Single-threaded router: named endpoints, a FIFO queue, timers."""

    def __init__(self):
        self.now = 0
        self.log: list[LogEntry] = []
        self._handlers: dict[str, Callable[[Message], None]] = {}
        self._queue: deque[tuple[str, tuple[str, ...], bytes]] = deque()
        self._timers: list[tuple[int, int, Callable[[], None]]] = []
        self._timer_seq = 0

    def register(self, name: str, handler: Callable[[Message], None]) -> None:
        if name in self._handlers:
            raise ValueError(f"endpoint {name!r} already registered")
        self._handlers[name] = handler

    def send(self, src: str, dst: str, message: Message) -> None:
        line = encode(message)
        self.log.append(LogEntry(self.now, src, dst, line, message))
        self._queue.append((src, (dst,), line))

    def broadcast(self, src: str, dsts: "list[str] | tuple[str, ...]",
                  message: Message) -> None:
        """One message fanned out to many endpoints: encoded and logged once."""
        line = encode(message)
        self.log.append(LogEntry(self.now, src, BROADCAST, line, message))
        if dsts:
            self._queue.append((src, tuple(dsts), line))

    def schedule(self, at: int, fn: Callable[[], None]) -> None:
        """Run ``fn`` once the clock reaches ``at`` (virtual seconds)."""
        self._timer_seq += 1
        heapq.heappush(self._timers, (max(at, self.now), self._timer_seq, fn))

    def pump(self) -> int:
        """Deliver queued messages until quiescent; returns deliveries made."""
        delivered = 0
        while self._queue:
            src, dsts, line = self._queue.popleft()
            message = decode(line)
            for dst in dsts:
                handler = self._handlers.get(dst)
                if handler is None:
                    logger.warning("dropping message for unknown endpoint %r", dst)
                    continue
                handler(message)
                delivered += 1
        return delivered

    def advance_to(self, t: int) -> None:
        """Move the virtual clock forward, firing due timers in order."""
        if t < self.now:
            raise ValueError(f"clock cannot go backwards ({t} < {self.now})")
        self.now = t
        while self._timers and self._timers[0][0] <= t:
            _, _, fn = heapq.heappop(self._timers)
            fn()
            self.pump()

    def format_log(self) -> str:
        return "".join(entry.format() + "\n" for entry in self.log)


class Outbox:
    """Per-component sender identity with its monotone seq counter."""

    def __init__(self, net: Network, sender_id: str):
        self.net = net
        self.sender_id = sender_id
        self._seq = 0

    @property
    def now(self) -> int:
        return self.net.now

    def send(self, dst: str, kind: str, payload: Optional[dict] = None) -> Message:
        message = self._build(kind, payload)
        self.net.send(self.sender_id, dst, message)
        return message

    def broadcast(self, dsts: "list[str] | tuple[str, ...]", kind: str,
                  payload: Optional[dict] = None) -> Message:
        message = self._build(kind, payload)
        self.net.broadcast(self.sender_id, dsts, message)
        return message

    def _build(self, kind: str, payload: Optional[dict]) -> Message:
        self._seq += 1
        return Message(
            kind=kind,
            sender=self.sender_id,
            seq=self._seq,
            sent_at=self.net.now,
            payload=payload if payload is not None else {},
        )
