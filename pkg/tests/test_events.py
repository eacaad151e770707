"""Tests for the pub-sub event bus: subscribe, emit, unsubscribe, one-shot."""

import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT))


def test_event_bus_subscribe_emit():
    """EventBus should deliver events to subscribers."""
    from core.events import Event, EventBus, EventType

    bus = EventBus()
    received = []

    def handler(event: Event):
        received.append(event)

    bus.on(EventType.FILTER_CHANNEL_SKIPPED, handler)
    bus.emit(EventType.FILTER_CHANNEL_SKIPPED, {"channel": "gravity[1]", "t": 4.2})

    assert len(received) == 1
    assert received[0].data["channel"] == "gravity[1]"
    assert received[0].get("t") == 4.2


def test_event_bus_multiple_subscribers():
    """Multiple handlers for same event type."""
    from core.events import EventBus, EventType

    bus = EventBus()
    count = [0]

    def h1(e):
        count[0] += 1

    def h2(e):
        count[0] += 10

    bus.on(EventType.RUN_COMPLETED, h1)
    bus.on(EventType.RUN_COMPLETED, h2)
    bus.emit(EventType.RUN_COMPLETED)

    assert count[0] == 11


def test_event_bus_unsubscribe():
    """Unsubscribed handler should not receive events."""
    from core.events import EventBus, EventType

    bus = EventBus()
    received = []

    def handler(e):
        received.append(e)

    bus.on(EventType.RUN_DIVERGED, handler)
    bus.off(EventType.RUN_DIVERGED, handler)
    bus.emit(EventType.RUN_DIVERGED, {"t": 1.0})

    unsubscribe = bus.on(EventType.RUN_DIVERGED, handler)
    unsubscribe()
    bus.emit(EventType.RUN_DIVERGED, {"t": 2.0})

    assert len(received) == 0


def test_event_bus_once():
    """One-shot handlers fire a single time."""
    from core.events import EventBus, EventType

    bus = EventBus()
    received = []
    bus.once(EventType.CHECK_COMPLETED, received.append)
    bus.emit(EventType.CHECK_COMPLETED, {"name": "census"})
    bus.emit(EventType.CHECK_COMPLETED, {"name": "jacobians"})

    assert [e.get("name") for e in received] == ["census"]


def test_event_bus_history_order():
    """History keeps emission order across types; each event carries its run time."""
    from core.events import EventBus, EventType

    bus = EventBus()
    bus.emit(EventType.FILTER_UPDATE_REJECTED, {"t": 0.1})
    bus.emit(EventType.STATIONARY_CHANGED, {"link": 0})
    bus.emit(EventType.FILTER_UPDATE_REJECTED, {"t": 0.2})

    rejected = bus.get_history(EventType.FILTER_UPDATE_REJECTED)
    assert [e.t for e in rejected] == [0.1, 0.2]
    assert [e.type for e in bus.get_history()] == [
        EventType.FILTER_UPDATE_REJECTED, EventType.STATIONARY_CHANGED, EventType.FILTER_UPDATE_REJECTED,
    ]


def test_handler_errors_are_contained():
    """A failing handler must not stop the others."""
    from core.events import EventBus, EventType

    bus = EventBus()
    seen = []

    def broken(e):
        raise RuntimeError("boom")

    bus.on(EventType.BATCH_JOB_COMPLETED, broken)
    bus.on(EventType.BATCH_JOB_COMPLETED, seen.append)
    bus.emit(EventType.BATCH_JOB_COMPLETED, {"index": 0})

    assert len(seen) == 1


def test_event_types_exist():
    """Core event types should be defined."""
    from core.events import EventType

    required = [
        "RUN_STARTED", "RUN_COMPLETED", "RUN_DIVERGED",
        "FILTER_UPDATE_REJECTED", "FILTER_CHANNEL_SKIPPED", "STATIONARY_CHANGED",
        "BATCH_JOB_COMPLETED", "CHECK_COMPLETED", "SCENARIO_GENERATED",
    ]
    for name in required:
        assert hasattr(EventType, name), f"Missing EventType.{name}"


def test_history_is_kept_per_type():
    """A burst of one event type does not evict the history of another."""
    from core.events import EventBus, EventType

    bus = EventBus(history_size=5)
    bus.emit(EventType.STATIONARY_CHANGED, {"link": 0, "stationary": True, "t": 0.25})
    for k in range(50):
        bus.emit(EventType.FILTER_UPDATE_REJECTED, {"t": 0.01 * k})

    assert len(bus.get_history(EventType.STATIONARY_CHANGED)) == 1
    assert len(bus.get_history(EventType.FILTER_UPDATE_REJECTED, limit=0)) == 5
    assert bus.count(EventType.FILTER_UPDATE_REJECTED) == 50
    assert bus.counts == {"stationary.changed": 1, "filter.update.rejected": 50}

    merged = bus.get_history(limit=0)
    assert merged[0].type == EventType.STATIONARY_CHANGED
    assert [e.seq for e in merged] == sorted(e.seq for e in merged)
    assert merged[0].t == 0.25


def test_reset_event_bus():
    """The process-wide bus can be replaced; the old subscribers go with it."""
    from core.events import EventType, get_event_bus, reset_event_bus

    old = get_event_bus()
    old.on(EventType.RUN_STARTED, lambda e: None)
    fresh = reset_event_bus()
    assert fresh is get_event_bus() and fresh is not old
    assert fresh.stats == {}
