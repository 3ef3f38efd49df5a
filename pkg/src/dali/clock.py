"""Injectable clocks. Services never call time.time() directly."""

from __future__ import annotations

import time


class LogicalClock:
    """Deterministic clock owned by the harness; integer UTC seconds."""

    # 2026-01-01T00:00:00Z
    DEFAULT_START = 1767225600

    def __init__(self, start: int = DEFAULT_START):
        self._now = int(start)

    def now(self) -> int:
        return self._now

    def advance(self, seconds: int) -> int:
        if seconds < 0:
            raise ValueError("clock cannot move backwards")
        self._now += int(seconds)
        return self._now

    def set(self, seconds: int) -> None:
        self._now = int(seconds)


class SystemClock:
    """Wall clock for live (non-simulated) deployments."""

    def now(self) -> int:
        return int(time.time())

    def advance(self, seconds: int) -> int:  # pragma: no cover - no-op by design
        return self.now()
