import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tdgame.convex_sets import Ellipsoid, HalfSpace, NormBall, Singleton
from tdgame.errors import DimensionError, ValidationError
from tdgame.game_core import (
    TAU_B,
    GameConfig,
    GameState,
    Region,
    Termination,
    apollonius,
    barrier,
    check_termination,
    classify,
)
from tdgame.strategies import capture_plan

G2 = GameConfig(0.5, 2)
G3 = GameConfig(0.5, 3)
coord = st.floats(-3.0, 3.0, allow_nan=False)
gammas = st.floats(0.05, 0.95)


def test_config_validation():
    with pytest.raises(ValidationError, match=r"gamma must lie in \(0,1\)"):
        GameConfig(1.2, 2)
    with pytest.raises(ValidationError):
        GameConfig(0.0, 2)
    with pytest.raises(ValidationError):
        GameConfig(0.5, 2, v_P=-1.0)
    with pytest.raises(ValidationError):
        GameConfig(0.5, 2, v_P=2.0, v_E=0.9)
    assert GameConfig(0.5, 2, v_P=2.0).v_E == 1.0


def test_state_dimension_checks():
    with pytest.raises(DimensionError):
        GameState([0, 0], [0, 0, 0])
    with pytest.raises(DimensionError):
        apollonius(G3, GameState([0, 0], [1, 0]))


def test_state_vector_round_trip():
    s = GameState([1, 2], [3, 4], t=0.5)
    s2 = GameState.from_vector(s.vector, s.t)
    np.testing.assert_array_equal(s2.x_P, s.x_P)
    np.testing.assert_array_equal(s2.x_E, s.x_E)


@pytest.mark.parametrize(
    "xP, xE, alpha, beta",
    [
        ((0, 0), (1, 0), (4 / 3, 0), 2 / 3),
        ((1, 1), (1, 1), (1, 1), 0.0),
        ((1, 0), (0.7, 0), (0.6, 0), 0.2),
    ],
)
def test_apollonius_examples(xP, xE, alpha, beta):
    ap = apollonius(G2, GameState(xP, xE))
    np.testing.assert_allclose(ap.alpha, alpha, atol=1e-15)
    assert ap.beta == pytest.approx(beta, abs=1e-15)


@pytest.mark.parametrize(
    "xE, value, region",
    [
        ((0.5, 0), 0.0, Region.ON_BARRIER),
        ((0.4, 0), -0.2, Region.ATTACK),
        ((0.7, 0), 0.4, Region.CAPTURE),
    ],
)
def test_barrier_singleton_examples(xE, value, region):
    br = barrier(G2, GameState((1, 0), xE), Singleton([0, 0]))
    assert br.value == pytest.approx(value, abs=1e-12)
    assert br.region is region


def test_barrier_ellipsoid_scenario_states():
    E = Ellipsoid([0.8, 0.4, 0.4])
    assert barrier(G3, GameState((-0.8, 0, 0.5), (0.2, 0.4, 0.9)), E).region is Region.CAPTURE
    assert barrier(G3, GameState((-0.8, 0, 0.5), (0.2, 0.2, 0.7)), E).region is Region.ATTACK


def test_classify_dead_band():
    assert classify(2 * TAU_B) is Region.CAPTURE
    assert classify(-2 * TAU_B) is Region.ATTACK
    assert classify(0.5 * TAU_B) is Region.ON_BARRIER
    assert classify(-0.5 * TAU_B) is Region.ON_BARRIER


def test_termination_examples():
    ball = NormBall(np.zeros(2), 1.0)
    assert check_termination(G2, GameState((2, 2), (2, 2)), ball, 1e-3) is Termination.CAPTURED
    assert check_termination(G2, GameState((3, 0), (0.5, 0)), ball, 1e-3) is Termination.ATTACKED
    assert check_termination(G2, GameState((2, 0), (2.5, 0)), ball, 1e-3) is Termination.RUNNING
    # capture wins when both hold
    assert check_termination(G2, GameState((0.5, 0), (0.5, 0)), ball, 1e-3) is Termination.CAPTURED
    with pytest.raises(ValidationError):
        check_termination(G2, GameState((2, 0), (2.5, 0)), ball, -1.0)


def test_coincident_players_barrier_nonnegative():
    br = barrier(G2, GameState((2, 0), (2, 0)), NormBall(np.zeros(2), 1.0))
    assert br.apollonius.beta == 0.0
    assert br.value == pytest.approx(1.0)


@given(gammas, st.lists(coord, min_size=6, max_size=6), st.lists(st.floats(-1, 1), min_size=3, max_size=3))
def test_apollonius_defining_property(gamma, xs, u):
    cfg = GameConfig(gamma, 3)
    s = GameState(xs[:3], xs[3:])
    u = np.array(u)
    if np.linalg.norm(u) < 1e-3:
        return
    u /= np.linalg.norm(u)
    ap = apollonius(cfg, s)
    z = ap.alpha + ap.beta * u
    scale = 1.0 + np.linalg.norm(s.x_P) + np.linalg.norm(s.x_E)
    assert abs(np.linalg.norm(z - s.x_E) - gamma * np.linalg.norm(z - s.x_P)) <= 1e-9 * scale / (1 - gamma**2)
    assert ap.contains(s.x_E, tol=1e-12)


@given(st.lists(coord, min_size=6, max_size=6))
def test_sign_consistency_with_direct_comparison(xs):
    s = GameState(xs[:3], xs[3:])
    for target in (Singleton([0, 0, 0]), HalfSpace([0, 0, 1], 0.0), NormBall(np.zeros(3), 1.0), Ellipsoid([0.8, 0.4, 0.4])):
        br = barrier(G3, s, target)
        d = np.linalg.norm(br.projection_point - br.apollonius.alpha)
        if br.region is Region.ATTACK:
            assert d < br.apollonius.beta
        elif br.region is Region.CAPTURE:
            assert d > br.apollonius.beta


@given(st.lists(coord, min_size=6, max_size=6))
def test_barrier_equals_capture_value(xs):
    s = GameState(xs[:3], xs[3:])
    target = Ellipsoid([0.8, 0.4, 0.4])
    br = barrier(G3, s, target)
    if br.region is Region.CAPTURE and np.linalg.norm(s.x_P - s.x_E) > 1e-9:
        assert capture_plan(G3, s, target).value == br.value


@given(st.lists(coord, min_size=6, max_size=6), st.floats(0.1, 10.0))
def test_barrier_scaling_covariance(xs, k):
    s = GameState(xs[:3], xs[3:])
    ks = GameState(k * s.x_P, k * s.x_E)
    for t, kt in (
        (NormBall(np.zeros(3), 1.0), NormBall(np.zeros(3), k)),
        (Ellipsoid([0.8, 0.4, 0.4]), Ellipsoid([0.8 * k, 0.4 * k, 0.4 * k])),
        (HalfSpace([0, 0, 1], 0.3), HalfSpace([0, 0, 1], 0.3 * k)),
    ):
        v, kv = barrier(G3, s, t).value, barrier(G3, ks, kt).value
        assert kv == pytest.approx(k * v, abs=1e-9 * k * (1 + np.abs(xs).max()))
