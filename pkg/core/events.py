"""
Pub/sub event bus between the filter run, the batch pool, the checks and the CLI.

Handlers run synchronously in the emitting thread, so a replay stays
single-threaded and its event order is reproducible. History is kept per
event type: a long run that rejects many updates does not push the early
stationarity events out of reach. Counts are kept for every type and never
roll over.
"""

from __future__ import annotations

import heapq
import itertools
import logging
import time
from collections import Counter, defaultdict, deque
from dataclasses import dataclass, field
from enum import Enum
from threading import Lock
from typing import Any, Callable, Optional

logger = logging.getLogger(__name__)


class EventType(str, Enum):
    """All event types in limbfusion."""

    # Run lifecycle
    RUN_STARTED = "run.started"
    RUN_COMPLETED = "run.completed"
    RUN_DIVERGED = "run.diverged"

    # Inside one filter cycle
    FILTER_UPDATE_REJECTED = "filter.update.rejected"
    FILTER_CHANNEL_SKIPPED = "filter.channel.skipped"
    STATIONARY_CHANGED = "stationary.changed"

    # Batch / acceptance / simulator
    BATCH_JOB_COMPLETED = "batch.job.completed"
    CHECK_COMPLETED = "check.completed"
    SCENARIO_GENERATED = "scenario.generated"


@dataclass
class Event:
    """One emitted event. `timestamp` is wall clock; `t` is the run clock when the emitter knows it."""
    type: EventType
    data: dict[str, Any] = field(default_factory=dict)
    source: str = "system"
    timestamp: float = field(default_factory=time.time)
    seq: int = -1

    @property
    def t(self) -> Optional[float]:
        return self.data.get("t")

    def get(self, key: str, default: Any = None) -> Any:
        return self.data.get(key, default)

    def __repr__(self) -> str:
        at = f", t={self.t:.3f}" if isinstance(self.t, (int, float)) else ""
        return f"Event({self.type.value}{at}, source={self.source}, keys={sorted(self.data)})"


Handler = Callable[[Event], None]


@dataclass
class _Subscription:
    handler: Handler
    once: bool = False


class EventBus:
    """
    Thread-safe publish-subscribe bus.

    Usage:
        bus = EventBus()
        bus.on(EventType.FILTER_CHANNEL_SKIPPED, count_skips)
        bus.emit(EventType.FILTER_CHANNEL_SKIPPED, {"channel": "gravity[1]", "t": 4.2})
        bus.once(EventType.RUN_COMPLETED, on_done)
        bus.count(EventType.FILTER_CHANNEL_SKIPPED)   # -> 1
    """

    def __init__(self, history_size: int = 256) -> None:
        self._subs: dict[EventType, list[_Subscription]] = defaultdict(list)
        self._lock = Lock()
        self._history: dict[EventType, deque[Event]] = defaultdict(lambda: deque(maxlen=history_size))
        self._counts: Counter[EventType] = Counter()
        self._seq = itertools.count()

    def on(self, event_type: EventType, handler: Handler) -> Callable[[], None]:
        """Subscribe to an event type. Returns an unsubscribe function."""
        with self._lock:
            self._subs[event_type].append(_Subscription(handler))
        return lambda: self.off(event_type, handler)

    def once(self, event_type: EventType, handler: Handler) -> None:
        """Subscribe for the next event of this type only."""
        with self._lock:
            self._subs[event_type].append(_Subscription(handler, once=True))

    def off(self, event_type: EventType, handler: Handler) -> None:
        with self._lock:
            self._subs[event_type] = [s for s in self._subs[event_type] if s.handler != handler]

    def emit(self, event_type: EventType, data: dict[str, Any] | None = None, source: str = "system") -> None:
        """Record the event and deliver it to every subscriber; one failing handler doesn't stop the rest."""
        event = Event(type=event_type, data=data or {}, source=source)
        with self._lock:
            event.seq = next(self._seq)
            self._history[event_type].append(event)
            self._counts[event_type] += 1
            subs = list(self._subs.get(event_type, ()))
            # one-shot handlers are dropped before delivery so a re-entrant emit can't fire them twice
            if any(s.once for s in subs):
                self._subs[event_type] = [s for s in self._subs[event_type] if not s.once]

        for sub in subs:
            try:
                sub.handler(event)
            except Exception as e:
                logger.error(f"Handler for {event_type.value} from {event.source} failed: {e}", exc_info=True)

    def clear(self, event_type: Optional[EventType] = None) -> None:
        """Drop the subscribers of one event type, or of all of them."""
        with self._lock:
            if event_type:
                self._subs[event_type].clear()
            else:
                self._subs.clear()

    def get_history(self, event_type: Optional[EventType] = None, limit: int = 20) -> list[Event]:
        """Most recent events, oldest first; across all types when no type is given."""
        with self._lock:
            if event_type is not None:
                events = list(self._history.get(event_type, ()))
            else:
                events = list(heapq.merge(*self._history.values(), key=lambda e: e.seq))
        return events[-limit:] if limit else events

    def count(self, event_type: EventType) -> int:
        """Events of this type emitted so far."""
        return self._counts[event_type]

    @property
    def counts(self) -> dict[str, int]:
        return {et.value: n for et, n in self._counts.items()}

    @property
    def stats(self) -> dict[str, int]:
        """Subscriber counts per event type."""
        with self._lock:
            return {et.value: len(subs) for et, subs in self._subs.items() if subs}


_bus: Optional[EventBus] = None


def get_event_bus() -> EventBus:
    """Get or create the process-wide bus. Batch workers each build their own."""
    global _bus
    if _bus is None:
        _bus = EventBus()
    return _bus


def reset_event_bus() -> EventBus:
    """Replace the process-wide bus with a fresh one."""
    global _bus
    _bus = EventBus()
    return _bus
