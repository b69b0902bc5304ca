import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nanmac import simengine as se
from nanmac.errors import DomainError, PastEvent


def test_events_fire_in_time_then_insertion_order():
    sim = se.Simulator(record_trace=True)
    seen = []
    for t, tag in [(5, "a"), (1, "b"), (5, "c"), (0, "d")]:
        sim.schedule(t, "x", 0, seen.append, tag)
    sim.run_until(10)
    assert seen == ["d", "b", "a", "c"]
    assert [e[0] for e in sim.trace] == [0, 1, 5, 5]
    assert sim.now == 10


def test_run_until_leaves_future_events():
    sim = se.Simulator()
    hits = []
    sim.schedule(3, "x", 0, lambda: hits.append(3))
    sim.schedule(30, "x", 0, lambda: hits.append(30))
    sim.run_until(10)
    assert hits == [3]
    assert sim.queue.peek_time() == 30
    sim.run_until(30)
    assert hits == [3, 30]


def test_past_scheduling_rejected():
    sim = se.Simulator()
    sim.run_until(100)
    with pytest.raises(PastEvent):
        sim.schedule(50, "x", 0)
    with pytest.raises(PastEvent):
        sim.run_until(10)


def test_actions_may_schedule_more_events():
    sim = se.Simulator()
    count = []

    def tick():
        count.append(sim.now)
        if len(count) < 5:
            sim.schedule_in(7, "tick", 0, tick)
    sim.schedule(0, "tick", 0, tick)
    sim.run_until(1000)
    assert count == [0, 7, 14, 21, 28]


def test_streams_are_reproducible_and_independent():
    a = se.RandomStreams(42)
    b = se.RandomStreams(42)
    assert np.array_equal(a.stream(1, 3).random(5), b.stream(1, 3).random(5))
    assert not np.array_equal(a.stream(1, 3).random(5), a.stream(1, 4).random(5))
    assert not np.array_equal(a.stream(1, 3).random(5), a.stream(2, 3).random(5))
    assert not np.array_equal(se.RandomStreams(1).topology().random(3),
                              se.RandomStreams(2).topology().random(3))


def test_topology_count_and_density():
    assert se.meter_count_for_density(1200, 1e-3) == 4524
    t = se.sample_topology(1200, se.RandomStreams(0).topology(), density_per_m2=1e-3)
    assert t.meter_count == 4524
    xy = t.cartesian()
    assert np.all(np.hypot(xy[:, 0], xy[:, 1]) <= 1200 + 1e-9)
    with pytest.raises(DomainError):
        se.sample_topology(1200, se.RandomStreams(0).topology())
    with pytest.raises(DomainError):
        se.sample_topology(0.5, se.RandomStreams(0).topology(), count=3)


def test_topology_is_uniform_on_the_disk():
    t = se.sample_topology(1000, se.RandomStreams(5).topology(), count=20000)
    r = np.array([p[0] for p in t.positions])
    # P(r < R/2) = 1/4 for a uniform disk
    assert abs(np.mean(r < 500) - 0.25) < 0.01


@given(st.lists(st.integers(0, 10 ** 6), min_size=1, max_size=50))
def test_dispatch_order_is_sorted(times):
    sim = se.Simulator(record_trace=True)
    for t in times:
        sim.schedule(t, "x", 0)
    sim.run_until(10 ** 6)
    got = [e[0] for e in sim.trace]
    assert got == sorted(times)
