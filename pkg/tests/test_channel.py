import math

import numpy as np
import pytest

from pqos_sim.channel import (
    ChannelTrace,
    LinkBudgetConfig,
    SynthChannelConfig,
    TraceError,
    UnknownLinkError,
    Waypoint,
    WaypointSet,
    parse_trace,
    path_loss_db,
    rx_power_dbm,
    serialize_trace,
    snr_db,
    synthesize_trace,
    traces_equal,
)

TRACE = """time,txId,rxId,lossDb
0.0,1,0,80.0
0.0,0,1,81.0
0.1,1,0,82.5
0.2,1,0,85.0
"""

TRACE_SMALL_SCALE = """time,txId,rxId,lossDb,smallScaleDb
0.0,1,0,80.0,-2.5
0.1,1,0,80.0,3.0
"""


def test_noise_floor_matches_hand_computation():
    cfg = LinkBudgetConfig(tx_power_dbm=23.0, bandwidth_hz=50e6, noise_figure_db=5.0)
    # -174 dBm/Hz + 10 log10(50 MHz) + 5 dB noise figure
    assert cfg.noise_floor_dbm() == pytest.approx(-92.01029995663981, abs=1e-12)


def test_link_budget_chain():
    cfg = LinkBudgetConfig(tx_power_dbm=23.0, bandwidth_hz=50e6, noise_figure_db=5.0)
    rx = rx_power_dbm(cfg, 100.0)
    assert rx == pytest.approx(-77.0, abs=1e-12)
    assert snr_db(cfg, rx) == pytest.approx(15.010299956639813, abs=1e-12)


def test_parse_trace_zero_order_hold():
    trace = parse_trace(TRACE)
    assert trace.loss_at(1, 0, 0) == 80.0
    assert trace.loss_at(1, 0, 99_999) == 80.0
    assert trace.loss_at(1, 0, 100_000) == 82.5
    assert trace.loss_at(1, 0, 150_000) == 82.5
    assert trace.loss_at(1, 0, 10_000_000) == 85.0
    assert trace.loss_at(0, 1, 50_000) == 81.0
    assert trace.time_step_s == pytest.approx(0.1)


def test_trace_before_first_snapshot_uses_first_value():
    trace = parse_trace("time,txId,rxId,lossDb\n1.0,1,0,90.0\n")
    assert trace.loss_at(1, 0, 0) == 90.0


def test_small_scale_column_adds_to_loss():
    trace = parse_trace(TRACE_SMALL_SCALE)
    assert trace.loss_at(1, 0, 0) == pytest.approx(77.5)
    assert trace.loss_at(1, 0, 100_000) == pytest.approx(83.0)


def test_unknown_link_raises():
    trace = parse_trace(TRACE)
    with pytest.raises(UnknownLinkError):
        trace.loss_at(9, 0, 0)


@pytest.mark.parametrize(
    "content,fragment",
    [
        ("", "missing header"),
        ("time,txId,lossDb\n", "unknown column layout"),
        ("time,txId,rxId,lossDb\n", "no data rows"),
        ("time,txId,rxId,lossDb\n0.0,1,0\n", "line 2: expected 4 fields"),
        ("time,txId,rxId,lossDb\n0.0,1,0,abc\n", "line 2"),
        ("time,txId,rxId,lossDb\n0.0,1,0,-3.0\n", ">= 0"),
        ("time,txId,rxId,lossDb\n0.0,1,0,inf\n", "finite"),
        ("time,txId,rxId,lossDb\n0.2,1,0,80\n0.1,1,0,80\n", "non-monotone"),
        ("time,txId,rxId,lossDb\n0.1,1,0,80\n0.1,1,0,81\n", "duplicate"),
        ("time,txId,rxId,lossDb\n0.0,-1,0,80\n", "unsigned"),
    ],
)
def test_parse_trace_rejects_malformed_input(content, fragment):
    with pytest.raises(TraceError) as err:
        parse_trace(content)
    assert fragment in str(err.value)


def test_serialize_round_trip():
    trace = parse_trace(TRACE)
    again = parse_trace(serialize_trace(trace))
    assert traces_equal(trace, again)


def test_cursor_matches_bisect_lookup():
    trace = parse_trace(TRACE)
    cursor = trace.cursor(1, 0)
    for t in (0, 50_000, 100_000, 100_001, 199_999, 200_000, 900_000):
        assert cursor.loss_at(t) == trace.loss_at(1, 0, t)


def test_waypoint_linear_interpolation():
    mob = WaypointSet({1: [Waypoint(0.0, 0.0, 0.0), Waypoint(10.0, 90.0, 0.0)]})
    assert mob.position(1, 0.0) == (0.0, 0.0)
    assert mob.position(1, 5.0) == (45.0, 0.0)
    assert mob.position(1, 10.0) == (90.0, 0.0)
    with pytest.raises(ValueError):
        mob.position(1, 11.0)
    with pytest.raises(ValueError):
        mob.position(2, 0.0)


def test_path_loss_log_distance():
    cfg = SynthChannelConfig(pl0_db=61.0, ref_distance_m=10.0, exponent=2.7)
    assert path_loss_db(cfg, 10.0) == pytest.approx(61.0)
    assert path_loss_db(cfg, 100.0) == pytest.approx(88.0)
    assert path_loss_db(cfg, 1000.0) == pytest.approx(115.0)
    # distances below the floor clamp to the floor
    assert path_loss_db(cfg, 0.0) == path_loss_db(cfg, cfg.min_distance_m)


def test_synthesized_trace_covers_duration_with_deterministic_loss(rng):
    mob = WaypointSet(
        {
            0: [Waypoint(0.0, 0.0, 25.0), Waypoint(2.0, 0.0, 25.0)],
            1: [Waypoint(0.0, -100.0, 0.0), Waypoint(2.0, -82.0, 0.0)],
        }
    )
    model = SynthChannelConfig(shadow_sigma_db=0.0)
    trace = synthesize_trace(mob, model, rng, gnb_id=0, ue_ids=[1], duration_s=2.0)
    times, losses = trace.links[(1, 0)]
    assert len(times) == 21  # 0.1 s grid over [0, 2] inclusive
    assert times[0] == 0 and times[-1] == 2_000_000
    d0 = math.hypot(-100.0 - 0.0, 0.0 - 25.0)
    assert losses[0] == pytest.approx(path_loss_db(model, d0), abs=1e-12)
    # vehicle approaches the gNB, so loss decreases monotonically here
    assert all(a >= b for a, b in zip(losses, losses[1:]))


def test_synthesized_shadowing_is_seeded_and_stationary():
    mob = WaypointSet(
        {
            0: [Waypoint(0.0, 0.0, 25.0), Waypoint(100.0, 0.0, 25.0)],
            1: [Waypoint(0.0, 50.0, 0.0), Waypoint(100.0, 50.0, 0.0)],
        }
    )
    model = SynthChannelConfig(shadow_sigma_db=4.0, shadow_corr=0.9)
    t1 = synthesize_trace(mob, model, np.random.default_rng(9), 0, [1], 100.0)
    t2 = synthesize_trace(mob, model, np.random.default_rng(9), 0, [1], 100.0)
    t3 = synthesize_trace(mob, model, np.random.default_rng(10), 0, [1], 100.0)
    assert traces_equal(t1, t2)
    assert not traces_equal(t1, t3)
    # static geometry: variation comes from shadowing alone, sigma ~ configured
    _, losses = t1.links[(1, 0)]
    static = path_loss_db(model, math.hypot(50.0, 25.0))
    devs = np.array(losses) - static
    assert 2.0 < float(np.std(devs)) < 6.0


def test_synthesized_trace_losses_never_negative(rng):
    mob = WaypointSet(
        {
            0: [Waypoint(0.0, 0.0, 1.0), Waypoint(1.0, 0.0, 1.0)],
            1: [Waypoint(0.0, 0.5, 0.0), Waypoint(1.0, 0.5, 0.0)],
        }
    )
    model = SynthChannelConfig(pl0_db=1.0, shadow_sigma_db=10.0)
    trace = synthesize_trace(mob, model, rng, 0, [1], 1.0)
    assert all(loss >= 0.0 for loss in trace.links[(1, 0)][1])
