"""Outage analysis of cooperative NOMA with maximum ratio combining at a road intersection.

Two independent engines: closed-form expressions built on Laplace transforms of
Poisson road interference (:mod:`mrcnoma.outage`), and a counter-based Monte
Carlo simulator of the raw SIR events (:mod:`mrcnoma.montecarlo`).
"""

from .laplace import LaplaceArg, Road, joint_j, laplace_closed_alpha2, laplace_numeric
from .montecarlo import (
    Coupling,
    McEstimate,
    SlotModel,
    TrialConfig,
    estimate_coupled_schemes,
    estimate_outage,
)
from .outage import OutageReport, Scheme, analyze, hypoexp_tail
from .scenario import (
    ChannelParams,
    NomaConfig,
    Position,
    ReceiverGeometry,
    Scenario,
    default_scenario,
    derive_thresholds,
    load_scenario,
    path_loss,
    polar_of,
)

__version__ = "0.1.0"
