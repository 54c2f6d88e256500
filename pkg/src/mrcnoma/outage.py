"""Closed-form outage probabilities for cooperative NOMA with MRC.

Each destination's outage splits into two disjoint parts:

* the relay fails to decode and the direct link alone fails, and
* the relay decodes, but the combined direct + relayed power still falls
  short at the destination.

Integrating the Rayleigh fades analytically leaves expectations of
``exp(-s I)`` over the interference.  Those are the joint Laplace factors
``J`` from :mod:`mrcnoma.laplace`, evaluated at ``s = G / l``.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .laplace import LaplaceArg, joint_j, joint_j_log_slope
from .scenario import Scenario, polar_of, sir_threshold

__all__ = [
    "OutageReport",
    "Scheme",
    "analyze",
    "hypoexp_tail",
    "mrc_outage_parts",
    "oma_thresholds",
    "outage_d1_mrc",
    "outage_d1_relay",
    "outage_d2_mrc",
    "outage_d2_relay",
    "outage_mrc_noma",
    "outage_mrc_oma",
    "outage_relay_noma",
    "outage_relay_oma",
]

DEGENERATE_RTOL = 1e-12
# below this relative gap the divided difference is replaced by the mean of its derivative
_SMOOTH_RTOL = 0.05
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)
CLAMP_SLACK = 1e-9


class Scheme(enum.Enum):
    MRC_NOMA = "mrc_noma"
    RELAY_NOMA = "relay_noma"
    MRC_OMA = "mrc_oma"
    RELAY_OMA = "relay_oma"

    @property
    def is_noma(self) -> bool:
        return self in (Scheme.MRC_NOMA, Scheme.RELAY_NOMA)

    @property
    def uses_mrc(self) -> bool:
        return self in (Scheme.MRC_NOMA, Scheme.MRC_OMA)


@dataclass(frozen=True)
class OutageReport:
    p_out_d1: float
    p_out_d2: float
    scheme: Scheme
    feasible: bool = True

    def __post_init__(self):
        for p in (self.p_out_d1, self.p_out_d2):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"outage probability {p} outside [0, 1]")
        if not self.feasible and (self.p_out_d1, self.p_out_d2) != (1.0, 1.0):
            raise ValueError("an infeasible report must carry certain outage")

    @property
    def modeled_baseline(self) -> bool:
        """True for the OMA baselines, whose threshold model is our own reading."""
        return not self.scheme.is_noma

    def by_destination(self, dest: int) -> float:
        return {1: self.p_out_d1, 2: self.p_out_d2}[dest]


def hypoexp_tail(l_a: float, l_b: float, z: float) -> float:
    """``P[E_a * l_a + E_b * l_b >= z]`` for independent unit-mean exponentials."""
    if not (l_a > 0 and l_b > 0):
        raise ValueError("scales must be positive")
    if z < 0:
        raise ValueError(f"threshold must be nonnegative, got {z}")
    if abs(l_a - l_b) <= DEGENERATE_RTOL * max(l_a, l_b):
        ell = 0.5 * (l_a + l_b)
        return (1.0 + z / ell) * math.exp(-z / ell)
    return (l_a * math.exp(-z / l_a) - l_b * math.exp(-z / l_b)) / (l_a - l_b)


def oma_thresholds(scn: Scenario) -> tuple[float, float]:
    """Rate-fair OMA thresholds: each user gets half the slots, hence ``2**(4R) - 1``."""
    return sir_threshold(scn.noma.rate1, slots=4), sir_threshold(scn.noma.rate2, slots=4)


def _clamp(value: float, what: str) -> float:
    if value < -CLAMP_SLACK or value > 1.0 + CLAMP_SLACK:
        warnings.warn(f"{what} evaluated to {value!r}; clamping to [0, 1]", RuntimeWarning, stacklevel=3)
    return min(1.0, max(0.0, value))


def _j_at(scn: Scenario, node: str) -> Callable[[float], float]:
    geom = polar_of(scn.nodes()[node])

    def j(s: float) -> float:
        return joint_j(LaplaceArg(s, geom), scn.channel)

    return j


def _combining_term(scn: Scenario, dest: str, g: float, l_rd: float, l_sd: float) -> float:
    """``E[(l_rd e^{-gI/l_rd} - l_sd e^{-gI/l_sd}) / (l_rd - l_sd)]`` at the destination.

    This is the Laplace-weighted hypoexponential tail.  It equals the mean of
    ``d/dl [l J(g/l)] = J(s) (1 + s * slope(s))`` over ``[l_sd, l_rd]``, which is
    used near the removable singularity ``l_rd == l_sd``.
    """
    j = _j_at(scn, dest)
    geom = polar_of(scn.nodes()[dest])

    def derivative(ell: float) -> float:
        s = g / ell
        return j(s) * (1.0 + s * joint_j_log_slope(LaplaceArg(s, geom), scn.channel))

    gap = abs(l_rd - l_sd)
    top = max(l_rd, l_sd)
    if gap <= DEGENERATE_RTOL * top:
        return derivative(0.5 * (l_rd + l_sd))
    if gap <= _SMOOTH_RTOL * top:
        mid, half = 0.5 * (l_rd + l_sd), 0.5 * (l_rd - l_sd)
        return 0.5 * float(sum(w * derivative(mid + half * x) for x, w in zip(_GL_NODES, _GL_WEIGHTS)))
    return (l_rd * j(g / l_rd) - l_sd * j(g / l_sd)) / (l_rd - l_sd)


def mrc_outage_parts(scn: Scenario, dest: str, g: float) -> tuple[float, float]:
    """The two disjoint outage components for ``dest`` at gain factor ``g``.

    Returns ``(P(direct fails and relay fails), P(relay decodes and MRC fails))``.
    """
    l_sr, l_sd, l_rd = scn.loss("s", "r"), scn.loss("s", dest), scn.loss("r", dest)
    j_r = _j_at(scn, "r")(g / l_sr)
    j_d = _j_at(scn, dest)(g / l_sd)
    direct_and_relay_fail = 1.0 - j_d - j_r + j_d * j_r
    relay_ok_mrc_fails = j_r - j_r * _combining_term(scn, dest, g, l_rd, l_sd)
    return direct_and_relay_fail, relay_ok_mrc_fails


def _mrc_outage(scn: Scenario, dest: str, g: float) -> float:
    l_sr, l_sd, l_rd = scn.loss("s", "r"), scn.loss("s", dest), scn.loss("r", dest)
    j_r = _j_at(scn, "r")(g / l_sr)
    j_d = _j_at(scn, dest)(g / l_sd)
    comb = _combining_term(scn, dest, g, l_rd, l_sd)
    value = 1.0 - j_d - j_r + j_d * j_r + j_r - j_r * comb
    return _clamp(value, f"MRC outage at {dest}")


def _relay_outage(scn: Scenario, dest: str, g: float) -> float:
    j_r = _j_at(scn, "r")(g / scn.loss("s", "r"))
    j_d = _j_at(scn, dest)(g / scn.loss("r", dest))
    return _clamp(1.0 - j_r * j_d, f"relay outage at {dest}")


def outage_d1_mrc(scn: Scenario) -> float:
    g1 = scn.thresholds.g1
    return 1.0 if g1 is None else _mrc_outage(scn, "d1", g1)


def outage_d2_mrc(scn: Scenario) -> float:
    gmax = scn.thresholds.gmax
    return 1.0 if gmax is None else _mrc_outage(scn, "d2", gmax)


def outage_d1_relay(scn: Scenario) -> float:
    g1 = scn.thresholds.g1
    return 1.0 if g1 is None else _relay_outage(scn, "d1", g1)


def outage_d2_relay(scn: Scenario) -> float:
    gmax = scn.thresholds.gmax
    return 1.0 if gmax is None else _relay_outage(scn, "d2", gmax)


def _noma_report(scn: Scenario, scheme: Scheme, d1, d2) -> OutageReport:
    if not scn.thresholds.feasible:
        return OutageReport(1.0, 1.0, scheme, feasible=False)
    return OutageReport(d1(scn), d2(scn), scheme)


def outage_mrc_noma(scn: Scenario) -> OutageReport:
    return _noma_report(scn, Scheme.MRC_NOMA, outage_d1_mrc, outage_d2_mrc)


def outage_relay_noma(scn: Scenario) -> OutageReport:
    return _noma_report(scn, Scheme.RELAY_NOMA, outage_d1_relay, outage_d2_relay)


def outage_mrc_oma(scn: Scenario) -> OutageReport:
    """OMA baseline: one orthogonal cooperative transaction per user at full power."""
    t1, t2 = oma_thresholds(scn)
    return OutageReport(_mrc_outage(scn, "d1", t1), _mrc_outage(scn, "d2", t2), Scheme.MRC_OMA)


def outage_relay_oma(scn: Scenario) -> OutageReport:
    t1, t2 = oma_thresholds(scn)
    return OutageReport(_relay_outage(scn, "d1", t1), _relay_outage(scn, "d2", t2), Scheme.RELAY_OMA)


_DISPATCH = {
    Scheme.MRC_NOMA: outage_mrc_noma,
    Scheme.RELAY_NOMA: outage_relay_noma,
    Scheme.MRC_OMA: outage_mrc_oma,
    Scheme.RELAY_OMA: outage_relay_oma,
}


def analyze(scn: Scenario, scheme: Scheme = Scheme.MRC_NOMA) -> OutageReport:
    return _DISPATCH[scheme](scn)
