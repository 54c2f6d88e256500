import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mrcnoma.scenario import (
    ChannelParams,
    DegenerateGeometryError,
    NomaConfig,
    Position,
    Scenario,
    derive_thresholds,
    load_scenario,
    parse_config,
    path_loss,
    polar_of,
    scenario_from_config,
)

coord = st.floats(-1e3, 1e3, allow_nan=False)


def test_polar_examples():
    g = polar_of(Position(100, 10))
    assert g.m == pytest.approx(math.sqrt(10100), rel=1e-12)
    assert g.m == pytest.approx(100.4988, abs=1e-4)
    assert g.theta == pytest.approx(math.atan2(10, 100), rel=1e-12)
    assert g.theta == pytest.approx(0.0997, abs=1e-4)
    assert polar_of(Position(0, 0)) == polar_of(Position(0.0, -0.0))
    assert (polar_of(Position(0, 0)).m, polar_of(Position(0, 0)).theta) == (0.0, 0.0)
    g = polar_of(Position(0, 50))
    assert (g.m, g.theta) == (50.0, pytest.approx(math.pi / 2))


def test_polar_angle_range():
    for pos in (Position(-1, -1e-300), Position(1, -1e-17), Position(-5, 0), Position(0, -3)):
        assert 0.0 <= polar_of(pos).theta < 2 * math.pi


def _roundtrip_ok(x, y):
    back = polar_of(Position(x, y)).to_position()
    scale = max(math.hypot(x, y), 1e-300)
    return math.hypot(back.x - x, back.y - y) <= 1e-9 * scale


def test_polar_roundtrip_bulk():
    rng = np.random.default_rng(0)
    pts = rng.uniform(-1e3, 1e3, size=(10_000, 2))
    assert all(_roundtrip_ok(x, y) for x, y in pts)


@given(coord, coord)
def test_polar_roundtrip_property(x, y):
    assert _roundtrip_ok(x, y)


@pytest.mark.parametrize("b, alpha, expected", [((100, 0), 2, 1e-4), ((1, 0), 3.7, 1.0), ((50, 0), 4, 1.6e-7)])
def test_path_loss_examples(b, alpha, expected):
    assert path_loss(Position(0, 0), Position(*b), alpha) == pytest.approx(expected, rel=1e-12)


def test_path_loss_coincident():
    with pytest.raises(DegenerateGeometryError):
        path_loss(Position(3, 4), Position(3, 4), 2.0)


@given(st.floats(0.01, 1e4), st.floats(1.01, 1.5), st.floats(1.1, 6))
def test_path_loss_monotone(r, k, alpha):
    o = Position(0, 0)
    assert path_loss(o, Position(r * k, 0), alpha) < path_loss(o, Position(r, 0), alpha)
    hi = alpha + 0.5
    if r > 1:
        assert path_loss(o, Position(r, 0), hi) < path_loss(o, Position(r, 0), alpha)
    elif r < 1:
        assert path_loss(o, Position(r, 0), hi) > path_loss(o, Position(r, 0), alpha)


def test_threshold_examples():
    th = derive_thresholds(NomaConfig(a1=0.6, a2=0.4, rate1=0.5, rate2=0.5))
    assert th.theta1 == pytest.approx(1.0)
    assert th.g1 == pytest.approx(5.0)
    assert th.theta2 == pytest.approx(1.0)
    assert th.g2 == pytest.approx(2.5)
    assert th.gmax == pytest.approx(5.0)


def test_threshold_infeasible():
    eps = 1e-3
    noma = NomaConfig(a1=0.5 + eps, a2=0.5 - eps, rate1=0.5, rate2=0.5)  # Theta1 = 1 < a1/a2
    assert derive_thresholds(noma).feasible
    noma = NomaConfig(a1=0.5 + eps, a2=0.5 - eps, rate1=1.0, rate2=0.5)  # Theta1 = 3 > a1/a2
    th = derive_thresholds(noma)
    assert not th.feasible and th.g1 is None and th.gmax is None


@given(st.floats(0.5, 0.999), st.floats(0.01, 3.0))
def test_feasibility_is_exact_comparison(a1, rate1):
    noma = NomaConfig.from_a1(a1, rate1=rate1)
    th = derive_thresholds(noma)
    assert th.feasible == (th.theta1 * noma.a2 < noma.a1)
    if th.feasible:
        assert th.gmax == max(th.g1, th.g2)


def test_noma_config_invariants():
    with pytest.raises(ValueError):
        NomaConfig(a1=0.7, a2=0.2)
    with pytest.raises(ValueError):
        NomaConfig(a1=0.25, a2=0.75)
    with pytest.raises(ValueError):
        NomaConfig(rate1=0.0)


def test_channel_invariants():
    with pytest.raises(ValueError):
        ChannelParams(alpha=1.0)
    with pytest.raises(ValueError):
        ChannelParams(p=1.5)


def test_scenario_distinct_nodes():
    with pytest.raises(DegenerateGeometryError):
        Scenario(r=Position(0, 0))


def test_config_parsing(tmp_path):
    text = """
    # comment line
      s.x =  5   # trailing
    A1=0.8
    lambda_x = 0.01
    """
    cfg = parse_config(text)
    assert cfg == {"s.x": "5", "a1": "0.8", "lambda_x": "0.01"}
    scn = scenario_from_config(cfg)
    assert scn.s == Position(5.0, 0.0)
    assert scn.noma.a1 == 0.8 and scn.noma.a2 == pytest.approx(0.2)
    assert scn.channel.lambda_x == 0.01 and scn.channel.lambda_y == 0.005
    path = tmp_path / "x.cfg"
    path.write_text(text)
    assert load_scenario(path) == scn


def test_config_rejects_unknown_and_malformed():
    with pytest.raises(ValueError):
        scenario_from_config({"bogus": "1"})
    with pytest.raises(ValueError):
        parse_config("no equals sign here")
    assert scenario_from_config({"sweep.variable": "a1", "mc.trials": "5"}) == Scenario()
