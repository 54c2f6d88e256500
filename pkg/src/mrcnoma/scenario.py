"""Intersection geometry, channel/protocol parameters and NOMA thresholds.

The intersection of the horizontal road X and the vertical road Y is the
origin.  Node positions are stored in Cartesian form; the polar view used by
the Laplace transforms is always derived through :func:`polar_of`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from itertools import combinations
from pathlib import Path
from typing import Mapping

__all__ = [
    "ChannelParams",
    "DegenerateGeometryError",
    "DerivedThresholds",
    "NomaConfig",
    "Position",
    "ReceiverGeometry",
    "Scenario",
    "default_scenario",
    "derive_thresholds",
    "load_scenario",
    "path_loss",
    "polar_of",
    "read_config",
    "scenario_from_config",
]


class DegenerateGeometryError(ValueError):
    """Two nodes share a location, so the path loss between them is undefined."""


@dataclass(frozen=True)
class Position:
    x: float
    y: float

    def __post_init__(self):
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"position must be finite, got ({self.x}, {self.y})")

    def __sub__(self, other: "Position") -> "Position":
        return Position(self.x - other.x, self.y - other.y)

    def __add__(self, other: "Position") -> "Position":
        return Position(self.x + other.x, self.y + other.y)

    def scaled(self, k: float) -> "Position":
        return Position(k * self.x, k * self.y)

    def norm(self) -> float:
        return math.hypot(self.x, self.y)


@dataclass(frozen=True)
class ReceiverGeometry:
    """Distance ``m`` to the intersection and angle ``theta`` from road X."""

    m: float
    theta: float

    def to_position(self) -> Position:
        return Position(self.m * math.cos(self.theta), self.m * math.sin(self.theta))


@dataclass(frozen=True)
class ChannelParams:
    """Path-loss exponent, road intensities (vehicles/m) and ALOHA access probability."""

    alpha: float = 2.0
    lambda_x: float = 0.005
    lambda_y: float = 0.005
    p: float = 0.5

    def __post_init__(self):
        if not self.alpha > 1.0:
            raise ValueError(f"alpha must exceed 1 for a line of interferers, got {self.alpha}")
        if self.lambda_x < 0 or self.lambda_y < 0:
            raise ValueError("road intensities must be nonnegative")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"ALOHA probability must lie in [0, 1], got {self.p}")


@dataclass(frozen=True)
class NomaConfig:
    """Power split and target rates (bits/s/Hz) of the two NOMA messages."""

    a1: float = 0.75
    a2: float = 0.25
    rate1: float = 0.5
    rate2: float = 0.5

    def __post_init__(self):
        if self.a1 + self.a2 != 1.0:
            raise ValueError(f"power fractions must sum to 1, got {self.a1} + {self.a2}")
        if not self.a1 >= self.a2 > 0.0:
            raise ValueError("power fractions must satisfy a1 >= a2 > 0")
        if not (self.rate1 > 0 and self.rate2 > 0):
            raise ValueError("target rates must be positive")

    @classmethod
    def from_a1(cls, a1: float, rate1: float = 0.5, rate2: float = 0.5) -> "NomaConfig":
        # 1 - a1 is exact for a1 in [0.5, 1], so the sum is exactly one
        return cls(a1=a1, a2=1.0 - a1, rate1=rate1, rate2=rate2)


@dataclass(frozen=True)
class DerivedThresholds:
    """SIR thresholds and the gain factors they induce.

    ``g1`` is ``None`` when the first message cannot be decoded at any SIR
    (``theta1 >= a1 / a2``).  Consumers treat that as certain outage.
    """

    theta1: float
    theta2: float
    g1: float | None
    g2: float

    @property
    def feasible(self) -> bool:
        return self.g1 is not None

    @property
    def gmax(self) -> float | None:
        if self.g1 is None:
            return None
        return max(self.g1, self.g2)


def sir_threshold(rate: float, slots: int = 2) -> float:
    """SIR threshold ``2**(slots * rate) - 1`` for a rate spread over ``slots`` slots."""
    return 2.0 ** (slots * rate) - 1.0


def derive_thresholds(noma: NomaConfig) -> DerivedThresholds:
    theta1 = sir_threshold(noma.rate1)
    theta2 = sir_threshold(noma.rate2)
    margin = noma.a1 - theta1 * noma.a2
    g1 = theta1 / margin if theta1 * noma.a2 < noma.a1 else None
    return DerivedThresholds(theta1=theta1, theta2=theta2, g1=g1, g2=theta2 / noma.a2)


def polar_of(pos: Position) -> ReceiverGeometry:
    """Polar form of ``pos`` about the intersection, angle in [0, 2*pi)."""
    m = math.hypot(pos.x, pos.y)
    if m == 0.0:
        return ReceiverGeometry(0.0, 0.0)
    theta = math.atan2(pos.y, pos.x)
    if theta < 0.0:
        theta += 2.0 * math.pi
        if theta >= 2.0 * math.pi:  # -0.0 style rounding
            theta = 0.0
    return ReceiverGeometry(m, theta)


def path_loss(a: Position, b: Position, alpha: float) -> float:
    """Distance-based gain ``||a - b|| ** -alpha``."""
    r = math.hypot(a.x - b.x, a.y - b.y)
    if r == 0.0:
        raise DegenerateGeometryError(f"coincident nodes at ({a.x}, {a.y})")
    return r**-alpha


@dataclass(frozen=True)
class Scenario:
    """Source, relay, two destinations and everything needed to score outage."""

    s: Position = Position(0.0, 0.0)
    r: Position = Position(50.0, 0.0)
    d1: Position = Position(100.0, 10.0)
    d2: Position = Position(100.0, -10.0)
    channel: ChannelParams = ChannelParams()
    noma: NomaConfig = NomaConfig()

    def __post_init__(self):
        for (na, a), (nb, b) in combinations(self.nodes().items(), 2):
            if a == b:
                raise DegenerateGeometryError(f"nodes {na} and {nb} coincide at ({a.x}, {a.y})")

    def nodes(self) -> dict[str, Position]:
        return {"s": self.s, "r": self.r, "d1": self.d1, "d2": self.d2}

    def loss(self, a: str, b: str) -> float:
        nodes = self.nodes()
        return path_loss(nodes[a], nodes[b], self.channel.alpha)

    @property
    def thresholds(self) -> DerivedThresholds:
        return derive_thresholds(self.noma)

    def with_channel(self, **changes) -> "Scenario":
        return replace(self, channel=replace(self.channel, **changes))

    def with_noma(self, **changes) -> "Scenario":
        return replace(self, noma=replace(self.noma, **changes))

    def with_lambda(self, lam: float) -> "Scenario":
        return self.with_channel(lambda_x=lam, lambda_y=lam)

    def with_a1(self, a1: float) -> "Scenario":
        return replace(self, noma=NomaConfig.from_a1(a1, self.noma.rate1, self.noma.rate2))

    def translated(self, dx: float, dy: float) -> "Scenario":
        t = Position(dx, dy)
        return replace(self, s=self.s + t, r=self.r + t, d1=self.d1 + t, d2=self.d2 + t)


def default_scenario() -> Scenario:
    """Reference geometry S=(0,0), R=(50,0), D1=(100,10), D2=(100,-10).

    Road intensity 0.005 /m, p = 0.5, a1 = 0.75 and unit rates of 0.5
    bits/s/Hz are declared assumptions.
    """
    return Scenario()


_POSITION_KEYS = ("s.x", "s.y", "r.x", "r.y", "d1.x", "d1.y", "d2.x", "d2.y")
_CHANNEL_KEYS = ("alpha", "lambda_x", "lambda_y", "p")
_NOMA_KEYS = ("a1", "a2", "rate1", "rate2")
SCENARIO_KEYS = _POSITION_KEYS + _CHANNEL_KEYS + _NOMA_KEYS


def read_config(path: str | Path) -> dict[str, str]:
    """Read a ``key = value`` file; ``#`` starts a comment, whitespace is ignored."""
    text = Path(path).read_text()
    return parse_config(text)


def parse_config(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        key = "".join(key.split()).lower()
        if not key:
            raise ValueError(f"line {lineno}: empty key")
        out[key] = value
    return out


def scenario_from_config(cfg: Mapping[str, str], base: Scenario | None = None) -> Scenario:
    """Build a scenario from config keys, falling back to ``base`` for missing ones.

    Keys outside the scenario vocabulary are rejected unless they belong to the
    ``sweep.`` or ``mc.`` namespaces used by the experiment driver.
    """
    base = base or default_scenario()
    unknown = [k for k in cfg if k not in SCENARIO_KEYS and not k.startswith(("sweep.", "mc."))]
    if unknown:
        raise ValueError(f"unknown configuration keys: {', '.join(sorted(unknown))}")

    def num(key: str, fallback: float) -> float:
        return float(cfg[key]) if key in cfg else fallback

    def pos(name: str, fallback: Position) -> Position:
        return Position(num(f"{name}.x", fallback.x), num(f"{name}.y", fallback.y))

    channel = ChannelParams(
        alpha=num("alpha", base.channel.alpha),
        lambda_x=num("lambda_x", base.channel.lambda_x),
        lambda_y=num("lambda_y", base.channel.lambda_y),
        p=num("p", base.channel.p),
    )
    a1 = num("a1", base.noma.a1)
    a2 = num("a2", 1.0 - a1 if "a1" in cfg else base.noma.a2)
    noma = NomaConfig(
        a1=a1, a2=a2, rate1=num("rate1", base.noma.rate1), rate2=num("rate2", base.noma.rate2)
    )
    return Scenario(
        s=pos("s", base.s),
        r=pos("r", base.r),
        d1=pos("d1", base.d1),
        d2=pos("d2", base.d2),
        channel=channel,
        noma=noma,
    )


def load_scenario(path: str | Path) -> Scenario:
    return scenario_from_config(read_config(path))
