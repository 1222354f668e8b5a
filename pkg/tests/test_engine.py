import pytest

from pqos_sim.engine import (
    MILLISECOND,
    SECOND,
    SchedulingError,
    Simulator,
    seconds,
    to_seconds,
)


def test_time_conversions_are_integer_microseconds():
    assert seconds(1.0) == 1_000_000
    assert seconds(0.1) == 100_000
    assert seconds(80.0) == 80 * SECOND
    assert to_seconds(1_500_000) == 1.5
    assert isinstance(seconds(0.0001), int)


def test_events_fire_in_time_order():
    sim = Simulator()
    fired = []
    sim.schedule_at(300, lambda: fired.append(300))
    sim.schedule_at(100, lambda: fired.append(100))
    sim.schedule_at(200, lambda: fired.append(200))
    sim.run_until(1_000)
    assert fired == [100, 200, 300]
    assert sim.now == 1_000


def test_same_time_events_fire_in_insertion_order():
    sim = Simulator()
    fired = []
    for tag in range(10):
        sim.schedule_at(500, lambda tag=tag: fired.append(tag))
    sim.run_until(500)
    assert fired == list(range(10))


def test_event_scheduled_during_dispatch_at_same_time_runs_after_existing():
    sim = Simulator()
    fired = []

    def first():
        fired.append("first")
        sim.schedule_at(100, lambda: fired.append("nested"))

    sim.schedule_at(100, first)
    sim.schedule_at(100, lambda: fired.append("second"))
    sim.run_until(100)
    assert fired == ["first", "second", "nested"]


def test_scheduling_in_the_past_raises():
    sim = Simulator()
    sim.schedule_at(50, lambda: None)
    sim.run_until(100)
    with pytest.raises(SchedulingError):
        sim.schedule_at(99, lambda: None)
    with pytest.raises(SchedulingError):
        sim.schedule_in(-1, lambda: None)


def test_cancelled_event_does_not_fire():
    sim = Simulator()
    fired = []
    handle = sim.schedule_at(100, lambda: fired.append("no"))
    sim.schedule_at(100, lambda: fired.append("yes"))
    handle.cancel()
    assert handle.cancelled
    sim.run_until(200)
    assert fired == ["yes"]


def test_run_until_is_inclusive_of_end_time():
    sim = Simulator()
    fired = []
    sim.schedule_at(1_000, lambda: fired.append("at-end"))
    sim.schedule_at(1_001, lambda: fired.append("after-end"))
    report = sim.run_until(1_000)
    assert fired == ["at-end"]
    assert report.events_dispatched == 1
    sim.run_until(2_000)
    assert fired == ["at-end", "after-end"]


def test_rng_streams_reproducible_and_independent():
    a = Simulator(seed=42).rng
    b = Simulator(seed=42).rng
    c = Simulator(seed=43).rng
    assert a.stream("channel").random(5).tolist() == b.stream("channel").random(5).tolist()
    assert a.stream("agent").random(5).tolist() != a.stream("channel").random(5).tolist()
    assert b.stream("channel").random(5).tolist() != c.stream("channel").random(5).tolist()


def test_rng_stream_draws_do_not_perturb_other_streams():
    a = Simulator(seed=7).rng
    b = Simulator(seed=7).rng
    a.stream("app:ue1").random(1000)
    assert a.stream("agent").random(3).tolist() == b.stream("agent").random(3).tolist()


def test_repeated_runs_dispatch_identically():
    def workload():
        sim = Simulator(seed=5)
        trace = []
        rng = sim.rng.stream("x")

        def tick(i=0):
            trace.append((sim.now, round(float(rng.random()), 12)))
            if sim.now < 10 * MILLISECOND:
                sim.schedule_in(MILLISECOND, tick)

        sim.schedule_at(0, tick)
        sim.run_until(20 * MILLISECOND)
        return trace

    assert workload() == workload()
