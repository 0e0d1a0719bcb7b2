import json

import numpy as np
import pytest

from tdgame.convex_sets import NormBall
from tdgame.errors import DimensionError, ValidationError
from tdgame.game_core import GameConfig, GameState, Region, barrier
from tdgame.simulator import (
    OUTCOME_HORIZON,
    Scenario,
    TrajectoryRecord,
    _segment_min_distance,
    _switch_times,
    simulate,
    straightness_deviation,
)
from tdgame.strategies import DirectTo, PurePursuit, RandomHeading, attack_plan

CFG = GameConfig(0.5, 2)
BALL = NormBall(np.zeros(2), 0.5)


def fast(x_P0, x_E0, **kw):
    kw.setdefault("dt", 1e-2)
    kw.setdefault("capture_radius", 1e-2)
    return Scenario(CFG, BALL, x_P0, x_E0, **kw)


@pytest.fixture(scope="module")
def capture_run():
    return simulate(fast((0, 1.0), (1.5, 1.5)))


@pytest.fixture(scope="module")
def attack_run():
    return simulate(fast((0, 1.0), (0.8, 0.3)))


def test_scenario_validation():
    with pytest.raises(ValidationError):
        fast((0, 1), (1, 1), dt=0.0)
    with pytest.raises(ValidationError):
        fast((0, 1), (1, 1), t_max=-1.0)
    with pytest.raises(ValidationError):
        fast((0, 1), (1, 1), capture_radius=-1e-3)
    with pytest.raises(ValidationError):
        fast((0, 1), (1, 1), policy_P=DirectTo([0, 0]))
    with pytest.raises(ValidationError):
        fast((0, 1), (1, 1), policy_E=PurePursuit())
    with pytest.raises(ValidationError):
        fast((0, 1), (1, 1), policy_E=DirectTo([3, 0]))
    with pytest.raises(DimensionError):
        Scenario(GameConfig(0.5, 3), BALL, (0, 1, 0), (1, 1, 0))


def test_optimal_capture_run(capture_run):
    rec = capture_run
    b0 = barrier(CFG, GameState((0, 1.0), (1.5, 1.5)), BALL).value
    assert rec.outcome == "Captured" and rec.switch_times == []
    assert abs(rec.payoff - b0) < 1e-2
    assert np.max(np.abs(rec.barrier - b0)) < 1e-9
    assert straightness_deviation(rec, "P") < 1e-6
    assert straightness_deviation(rec, "E") < 1e-6
    assert all(r == Region.CAPTURE.value for r in rec.regime)


def test_optimal_attack_run(attack_run):
    rec = attack_run
    s0 = GameState((0, 1.0), (0.8, 0.3))
    assert rec.outcome == "Attacked" and rec.switch_times == []
    assert abs(rec.payoff - attack_plan(CFG, s0, BALL).value) < 1e-6
    assert straightness_deviation(rec, "P") < 1e-6
    assert straightness_deviation(rec, "E") < 1e-6
    # the attack value (not the barrier) is conserved along optimal play
    for k in range(0, len(rec) - 1, 10):
        s = GameState(rec.x_P[k], rec.x_E[k])
        assert abs(attack_plan(CFG, s, BALL).value - rec.payoff) < 1e-6


def test_timestamps_and_speed_fidelity(capture_run):
    rec = capture_run
    assert np.all(np.diff(rec.t) > 0)
    h = np.diff(rec.t)
    vP = np.linalg.norm(np.diff(rec.x_P, axis=0), axis=1) / h
    vE = np.linalg.norm(np.diff(rec.x_E, axis=0), axis=1) / h
    # straight runs: chord length equals arc length
    np.testing.assert_allclose(vP, 1.0, atol=1e-9)
    np.testing.assert_allclose(vE, 0.5, atol=1e-9)


def test_speed_fidelity_random_headings():
    rec = simulate(fast((0, 3.0), (2.0, 2.0), policy_P=RandomHeading(1, period=0.05),
                        policy_E=RandomHeading(2, period=0.05), t_max=0.5))
    assert rec.outcome == OUTCOME_HORIZON and np.isnan(rec.payoff)
    # headings are constant within each 0.05 bin; the 0.01 steps never straddle one
    h = np.diff(rec.t)
    vP = np.linalg.norm(np.diff(rec.x_P, axis=0), axis=1) / h
    np.testing.assert_allclose(vP, 1.0, atol=1e-9)
    assert rec.t_f == pytest.approx(0.5)


def test_pure_pursuit_is_curved():
    rec = simulate(fast((0, 1.0), (1.5, 1.5), policy_P=PurePursuit()))
    assert straightness_deviation(rec, "P") > 1e-3


def test_determinism():
    sc = fast((0, 1.0), (0.8, 0.3), seed=4)
    a, b = simulate(sc), simulate(sc)
    assert a.to_json() == b.to_json()
    assert a.to_csv() == b.to_csv()


def test_exports(capture_run):
    rec = capture_run
    rows = rec.to_csv().splitlines()
    assert rows[0].split(",")[:5] == ["t", "x_P0", "x_P1", "x_E0", "x_E1"]
    assert len(rows) == len(rec) + 1
    doc = json.loads(rec.to_json())
    assert doc["outcome"] == "Captured" and doc["steps"] == len(rec) - 1
    assert float(rows[-1].split(",")[0]) == rec.t_f


def test_already_terminal_start():
    rec = simulate(fast((0, 1.0), (0, 0.2)))
    assert rec.outcome == "Attacked" and len(rec) == 1 and rec.t_f == 0.0
    assert rec.payoff == pytest.approx(0.8)
    rec = simulate(fast((1, 1.0), (1, 1.0)))
    assert rec.outcome == "Captured"


def test_terminal_refinement():
    # E heads straight in (distance 1.0 at speed 0.5); P cannot catch up, so
    # the attack happens at t = 2.0, well inside the coarse 0.3 step
    rec = simulate(Scenario(CFG, BALL, (0, 3.0), (0, 1.5), policy_P=PurePursuit(),
                            policy_E=DirectTo([0.0, 0.0]), dt=0.3, capture_radius=1e-2))
    assert rec.outcome == "Attacked"
    assert rec.t_f == pytest.approx(2.0, abs=1e-6)
    assert BALL.distance(rec.x_E[-1]) == pytest.approx(0.0, abs=1e-6)


def test_tunneling_is_detected():
    # P and E approach head-on faster than 2 * capture_radius per step
    rec = simulate(Scenario(CFG, NormBall(np.array([0.0, -10.0]), 0.5), (0, 1.0), (0, 0.0),
                            policy_P=PurePursuit(), policy_E=DirectTo([0.0, -10.0]),
                            dt=0.25, capture_radius=1e-3))
    assert rec.outcome == "Captured"
    assert rec.t_f == pytest.approx((1.0 - 1e-3) / 0.5, abs=1e-5)


def test_switch_time_helper():
    t = np.array([0.0, 1.0, 2.0, 3.0])
    B = np.array([1.0, 0.5, -0.5, -1.0])
    regs = ["CaptureRegion", "CaptureRegion", "AttackRegion", "AttackRegion"]
    assert _switch_times(t, B, regs) == [1.5]
    regs = ["CaptureRegion", "OnBarrier", "AttackRegion", "AttackRegion"]
    B = np.array([1.0, 0.0, -1.0, -1.0])
    assert _switch_times(t, B, regs) == [1.0]
    assert _switch_times(t, B, ["CaptureRegion"] * 4) == []


def test_segment_min_distance():
    assert _segment_min_distance(np.array([1.0, 1.0]), np.array([-1.0, 1.0])) == pytest.approx(1.0)
    assert _segment_min_distance(np.array([1.0, 0.0]), np.array([2.0, 0.0])) == pytest.approx(1.0)
    assert _segment_min_distance(np.array([1.0, 0.0]), np.array([1.0, 0.0])) == pytest.approx(1.0)


def test_straightness_edge_cases():
    two = TrajectoryRecord(
        t=np.array([0.0, 1.0]), x_P=np.array([[0.0, 0.0], [1.0, 0.0]]), x_E=np.array([[0.0, 1.0], [0.0, 1.0]]),
        barrier=np.zeros(2), regime=["CaptureRegion"] * 2, dir_P=np.zeros((2, 2)), dir_E=np.zeros((2, 2)),
        outcome="Captured", t_f=1.0, switch_times=[], payoff=0.0, capture_radius=0.0, dt=1.0, seed=0,
    )
    assert straightness_deviation(two, "P") == 0.0
    with pytest.raises(ValidationError):
        straightness_deviation(two, "E")
    with pytest.raises(ValidationError):
        straightness_deviation(two, "X")
