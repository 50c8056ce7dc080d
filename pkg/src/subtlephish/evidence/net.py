"""Process-wide live/replay switch consulted before any socket is opened."""

from __future__ import annotations

import threading
import time
from contextlib import contextmanager

from ..errors import NetworkDisabled

_live = False
_lock = threading.Lock()


def is_live() -> bool:
    return _live


def set_live(live: bool) -> None:
    global _live
    with _lock:
        _live = bool(live)


@contextmanager
def live_mode(live: bool = True):
    previous = _live
    set_live(live)
    try:
        yield
    finally:
        set_live(previous)


def require_network(what: str) -> None:
    if not _live:
        raise NetworkDisabled(f"{what}: network access is disabled in replay mode")


class RateLimiter:
    """Minimum spacing between calls to one service, shared across threads."""

    def __init__(self, per_second: float | None):
        self.interval = 1.0 / per_second if per_second else 0.0
        self._next = 0.0
        self._lock = threading.Lock()

    def wait(self):
        if not self.interval:
            return
        with self._lock:
            now = time.monotonic()
            delay = self._next - now
            self._next = max(now, self._next) + self.interval
        if delay > 0:
            time.sleep(delay)
