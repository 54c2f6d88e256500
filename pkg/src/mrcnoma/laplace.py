"""Laplace transforms of the interference generated by one road.

For a receiver at polar position ``(m, theta)`` the active vehicles of road X
form a thinned 1D Poisson process; with unit-mean exponential fading the
transform is ``exp(-p * lambda_X * F(s))`` where

    F(s) = integral over the road of 1 / (1 + dist**alpha / s).

``dist`` is measured from the receiver, whose perpendicular offset from road X
is ``m * sin(theta)`` (``m * cos(theta)`` for road Y).  For ``alpha == 2`` the
integral has the closed form ``pi * s / sqrt(offset**2 + s)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from scipy import integrate

from .scenario import ChannelParams, ReceiverGeometry

__all__ = [
    "LaplaceArg",
    "ModelError",
    "Road",
    "interference_integral",
    "interference_integral_ds",
    "joint_j",
    "joint_j_log_slope",
    "laplace_closed_alpha2",
    "laplace_numeric",
    "road_offset",
]

EPSABS = 1e-10
EPSREL = 1e-8
_QUAD_LIMIT = 200


class ModelError(ArithmeticError):
    """The interference integral does not converge for the given model."""


class Road(enum.Enum):
    X = "X"
    Y = "Y"


@dataclass(frozen=True)
class LaplaceArg:
    s: float
    receiver: ReceiverGeometry

    def __post_init__(self):
        if not self.s >= 0.0:
            raise ValueError(f"transform argument must be nonnegative, got {self.s}")


def road_offset(receiver: ReceiverGeometry, road: Road) -> float:
    """Perpendicular distance between the receiver and ``road``."""
    if road is Road.X:
        return abs(receiver.m * math.sin(receiver.theta))
    return abs(receiver.m * math.cos(receiver.theta))


def _road_density(ch: ChannelParams, road: Road) -> float:
    return ch.p * (ch.lambda_x if road is Road.X else ch.lambda_y)


def _half_line(integrand, scale: float) -> float:
    # t = scale * tan(u) maps [0, inf) onto [0, pi/2)
    def g(u: float) -> float:
        c = math.cos(u)
        return scale * integrand(scale * math.tan(u)) / (c * c)

    value, abserr, info = integrate.quad(
        g, 0.0, math.pi / 2, epsabs=EPSABS / 2, epsrel=EPSREL, limit=_QUAD_LIMIT, full_output=1
    )[:3]
    if not math.isfinite(value) or abserr > max(EPSABS, 10 * EPSREL * abs(value)):
        raise ModelError(f"quadrature did not converge (estimate {value}, error {abserr})")
    return value


def _check_alpha(alpha: float):
    if not alpha > 1.0:
        raise ModelError(f"interference integral diverges for alpha={alpha} <= 1")


def interference_integral(s: float, offset: float, alpha: float) -> float:
    """``F(s)`` by adaptive Gauss-Kronrod quadrature over the whole road.

    The integrand is symmetric about the receiver's projection onto the road,
    so the two half-lines are equal and only one is evaluated.
    """
    _check_alpha(alpha)
    if s < 0:
        raise ValueError(f"transform argument must be nonnegative, got {s}")
    if s == 0.0:
        return 0.0
    off2 = offset * offset
    scale = max(s ** (1.0 / alpha), offset)

    def f(t: float) -> float:
        d_alpha = (off2 + t * t) ** (alpha / 2)
        return s / (s + d_alpha)

    return 2.0 * _half_line(f, scale)


def interference_integral_ds(s: float, offset: float, alpha: float) -> float:
    """Derivative ``dF/ds`` by the same quadrature scheme."""
    _check_alpha(alpha)
    if s < 0:
        raise ValueError(f"transform argument must be nonnegative, got {s}")
    if alpha == 2.0:
        return _closed_ds(s, offset)
    off2 = offset * offset
    scale = max(s ** (1.0 / alpha), offset) if s > 0 else max(offset, 1.0)

    def f(t: float) -> float:
        d_alpha = (off2 + t * t) ** (alpha / 2)
        return d_alpha / (s + d_alpha) ** 2

    return 2.0 * _half_line(f, scale)


def _closed_integral(s: float, offset: float) -> float:
    return math.pi * s / math.sqrt(offset * offset + s) if s > 0 else 0.0


def _closed_ds(s: float, offset: float) -> float:
    q = offset * offset + s
    if q == 0.0:
        raise ModelError("dF/ds is unbounded at s=0 for a receiver on the road")
    return math.pi * (offset * offset + s / 2) / q**1.5


def laplace_numeric(arg: LaplaceArg, road: Road, ch: ChannelParams) -> float:
    """Transform of one road's interference, integral evaluated numerically."""
    _check_alpha(ch.alpha)
    density = _road_density(ch, road)
    if arg.s == 0.0 or density == 0.0:
        return 1.0
    return math.exp(-density * interference_integral(arg.s, road_offset(arg.receiver, road), ch.alpha))


def laplace_closed_alpha2(arg: LaplaceArg, road: Road, ch: ChannelParams) -> float:
    """Closed-form transform, valid only for a path-loss exponent of exactly 2."""
    if ch.alpha != 2.0:
        raise ValueError(f"closed form requires alpha == 2, got {ch.alpha}")
    density = _road_density(ch, road)
    if arg.s == 0.0 or density == 0.0:
        return 1.0
    return math.exp(-density * _closed_integral(arg.s, road_offset(arg.receiver, road)))


def laplace(arg: LaplaceArg, road: Road, ch: ChannelParams) -> float:
    if ch.alpha == 2.0:
        return laplace_closed_alpha2(arg, road, ch)
    return laplace_numeric(arg, road, ch)


def joint_j(arg: LaplaceArg, ch: ChannelParams) -> float:
    """Product of the road-X and road-Y transforms at the same argument."""
    return laplace(arg, Road.X, ch) * laplace(arg, Road.Y, ch)


def joint_j_log_slope(arg: LaplaceArg, ch: ChannelParams) -> float:
    """``-d log J / ds`` i.e. ``E[I exp(-sI)] / E[exp(-sI)]`` for the total interference."""
    total = 0.0
    for road in Road:
        density = _road_density(ch, road)
        if density:
            total += density * interference_integral_ds(arg.s, road_offset(arg.receiver, road), ch.alpha)
    return total
