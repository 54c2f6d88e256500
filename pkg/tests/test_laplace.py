import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mrcnoma.laplace import (
    LaplaceArg,
    ModelError,
    Road,
    interference_integral,
    interference_integral_ds,
    joint_j,
    joint_j_log_slope,
    laplace,
    laplace_closed_alpha2,
    laplace_numeric,
)
from mrcnoma.scenario import ChannelParams, ReceiverGeometry

CH = ChannelParams(alpha=2.0, lambda_x=0.01, lambda_y=0.01, p=0.5)


def riemann_integral(s, offset, alpha, half=1e5, step=0.05):
    """Midpoint sum of s / (s + d^alpha) over [-half, half]."""
    x = np.arange(-half + step / 2, half, step)
    d_alpha = (offset * offset + x * x) ** (alpha / 2)
    return float(np.sum(s / (s + d_alpha)) * step)


def arg(s, m, theta):
    return LaplaceArg(s, ReceiverGeometry(m, theta))


@pytest.mark.parametrize("fn", [laplace_numeric, laplace_closed_alpha2])
def test_reference_values(fn):
    a = arg(100, 50, 0.0)
    assert fn(a, Road.X, CH) == pytest.approx(math.exp(-0.05 * math.pi), abs=1e-12)
    assert fn(a, Road.Y, CH) == pytest.approx(math.exp(-0.5 * math.pi / math.sqrt(2600)), abs=1e-12)
    assert fn(a, Road.Y, CH) == pytest.approx(0.969663, abs=1e-6)
    on_node = arg(1, 0, 0.0)
    full = ChannelParams(alpha=2.0, lambda_x=0.01, lambda_y=0.01, p=1.0)
    for road in Road:
        assert fn(on_node, road, full) == pytest.approx(math.exp(-0.01 * math.pi), abs=1e-12)


def test_joint_reference_value():
    expected = math.exp(-0.05 * math.pi) * math.exp(-0.5 * math.pi / math.sqrt(2600))
    assert joint_j(arg(100, 50, 0.0), CH) == pytest.approx(expected, abs=1e-12)


def test_riemann_oracle_matches_both_routes():
    # road X seen from (50, 0): offset 0; road Y: offset 50
    for road, offset in ((Road.X, 0.0), (Road.Y, 50.0)):
        brute = math.exp(-0.005 * riemann_integral(100.0, offset, 2.0))
        a = arg(100, 50, 0.0)
        assert laplace_numeric(a, road, CH) == pytest.approx(brute, rel=2e-5)
        assert laplace_closed_alpha2(a, road, CH) == pytest.approx(brute, rel=2e-5)


@pytest.mark.parametrize("alpha, s, offset", [(3.0, 50.0, 20.0), (4.0, 1e6, 5.0), (2.5, 1.0, 0.0)])
def test_riemann_oracle_general_alpha(alpha, s, offset):
    assert interference_integral(s, offset, alpha) == pytest.approx(riemann_integral(s, offset, alpha), rel=1e-4)


def test_trivial_cases():
    a = arg(0.0, 10, 0.3)
    assert laplace_numeric(a, Road.X, CH) == 1.0 and joint_j(a, CH) == 1.0
    for ch in (ChannelParams(p=0.0), ChannelParams(lambda_x=0.0, lambda_y=0.0)):
        assert joint_j(arg(1e4, 10, 0.3), ch) == 1.0


def test_one_empty_road():
    ch = ChannelParams(alpha=2.0, lambda_x=0.0, lambda_y=0.01, p=0.5)
    a = arg(100, 50, 0.0)
    assert joint_j(a, ch) == laplace(a, Road.Y, ch)


def test_closed_vs_numeric_grid():
    worst = 0.0
    for s in np.logspace(-2, 6, 17):
        for m in (0.0, 10.0, 100.0, 1000.0):
            for theta in (0.0, math.pi / 6, math.pi / 4, math.pi / 2):
                for road in Road:
                    a = arg(float(s), m, theta)
                    c = laplace_closed_alpha2(a, road, CH)
                    worst = max(worst, abs(c - laplace_numeric(a, road, CH)) / c)
    assert worst <= 1e-6


@settings(max_examples=60, deadline=None)
# s capped so J stays above double underflow at the heaviest tails (alpha near 1.2)
@given(st.floats(1e-3, 1e4), st.floats(0, 500), st.floats(0, 2 * math.pi), st.floats(1.2, 5.0))
def test_range_and_strict_monotonicity(s, m, theta, alpha):
    ch = ChannelParams(alpha=alpha, lambda_x=0.01, lambda_y=0.004, p=0.5)
    a = arg(s, m, theta)
    j = joint_j(a, ch)
    assert 0.0 < j < 1.0
    assert joint_j(arg(2 * s, m, theta), ch) < j
    assert joint_j(a, ChannelParams(alpha=alpha, lambda_x=0.01, lambda_y=0.004, p=0.9)) < j
    assert joint_j(a, ChannelParams(alpha=alpha, lambda_x=0.02, lambda_y=0.008, p=0.5)) < j


@settings(max_examples=40, deadline=None)
@given(st.floats(1e-2, 1e5), st.floats(0, 500), st.floats(0, math.pi / 2), st.sampled_from([2.0, 3.0]))
def test_road_swap_symmetry(s, m, theta, alpha):
    ch = ChannelParams(alpha=alpha, lambda_x=0.01, lambda_y=0.003, p=0.6)
    swapped = ChannelParams(alpha=alpha, lambda_x=0.003, lambda_y=0.01, p=0.6)
    assert joint_j(arg(s, m, theta), ch) == pytest.approx(joint_j(arg(s, m, math.pi / 2 - theta), swapped), rel=1e-9)


@pytest.mark.parametrize("alpha", [2.0, 4.0])
@pytest.mark.parametrize("theta", [0.0, 0.1, math.pi / 4, 1.3])
def test_intersection_is_worst_case(alpha, theta):
    ch = ChannelParams(alpha=alpha, lambda_x=0.01, lambda_y=0.01, p=0.5)
    s = 1e3 if alpha == 2.0 else 1e6
    at_zero = joint_j(arg(s, 0.0, theta), ch)
    assert all(joint_j(arg(s, m, theta), ch) > at_zero for m in (1.0, 10.0, 50.0, 200.0, 1000.0))


def test_errors():
    with pytest.raises(ValueError):
        LaplaceArg(-1.0, ReceiverGeometry(1, 0))
    with pytest.raises(ValueError):
        laplace_closed_alpha2(arg(1, 1, 0), Road.X, ChannelParams(alpha=3.0))
    with pytest.raises(ModelError):
        interference_integral(1.0, 0.0, 1.0)


@pytest.mark.parametrize("alpha, s, offset", [(2.0, 30.0, 10.0), (3.0, 30.0, 10.0), (4.0, 1e5, 0.0)])
def test_derivative_matches_finite_difference(alpha, s, offset):
    h = 1e-4 * s
    fd = (interference_integral(s + h, offset, alpha) - interference_integral(s - h, offset, alpha)) / (2 * h)
    assert interference_integral_ds(s, offset, alpha) == pytest.approx(fd, rel=1e-5)


def test_log_slope_matches_finite_difference():
    ch = ChannelParams(alpha=3.0, lambda_x=0.01, lambda_y=0.004, p=0.5)
    s, h = 200.0, 0.02
    geom = ReceiverGeometry(40.0, 0.4)
    fd = -(math.log(joint_j(LaplaceArg(s + h, geom), ch)) - math.log(joint_j(LaplaceArg(s - h, geom), ch))) / (2 * h)
    assert joint_j_log_slope(LaplaceArg(s, geom), ch) == pytest.approx(fd, rel=1e-5)


@pytest.mark.parametrize("alpha", [1.05, 1.5, 6.0])
def test_quadrature_converges_across_alpha(alpha):
    for s in (1e-2, 1.0, 1e4):
        for off in (0.0, 100.0):
            v = interference_integral(s, off, alpha)
            assert math.isfinite(v) and v > 0
