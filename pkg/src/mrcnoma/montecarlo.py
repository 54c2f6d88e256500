"""Brute-force Monte Carlo oracle for the outage events.

Each trial draws the vehicles on both roads (1D Poisson, ALOHA thinning),
Rayleigh power fades for every interferer/receiver pair and for the five
useful links, then evaluates the SIR inequalities of every outage event
directly.  No fade is integrated out analytically.

Randomness is counter based (:mod:`mrcnoma.philox`): every draw is addressed
by ``(seed, trial, tile, stream, index)``.  The roads are cut into fixed
tiles of :data:`TILE` metres and the simulated field is the restriction of
that per-trial infinite process to ``[-window, window]``.  Enlarging the
window therefore keeps the inner realization and only adds vehicles.
The far field beyond the window is represented by a Gamma variate matched to
the first two cumulants of the missing interference (``tail_correction``).
"""

from __future__ import annotations

import enum
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import integrate, special, stats

from . import philox
from .laplace import Road
from .outage import Scheme, oma_thresholds
from .scenario import ChannelParams, Position, Scenario

__all__ = [
    "CoincidentInterfererError",
    "CoupledEstimate",
    "Coupling",
    "InterfererField",
    "LinkFades",
    "McEstimate",
    "RoadSample",
    "SlotModel",
    "TrialConfig",
    "TrialOutcome",
    "aggregate_interference",
    "estimate_coupled_schemes",
    "estimate_outage",
    "evaluate_trial",
    "sample_field",
    "sample_links",
    "simulate_trials",
]

log = logging.getLogger(__name__)

TILE = 1000.0
BLOCK = 8192
RECEIVERS = ("r", "d1", "d2")
LINKS = ("sr", "sd1", "sd2", "rd1", "rd2")

_COUNT, _POSITION, _ACTIVE, _FADE, _TAIL, _LINK = range(1, 7)
_SHARED_CONTEXT = 3
_MAX_RESAMPLE = 64


class Coupling(enum.Enum):
    INDEPENDENT_RECEIVERS = "independent"
    SHARED_FIELD = "shared"


class SlotModel(enum.Enum):
    STATIC_INTERFERENCE = "static"
    PER_SLOT_REDRAW = "redraw"


class CoincidentInterfererError(ValueError):
    """An active interferer sits exactly on the receiver."""


@dataclass(frozen=True)
class TrialConfig:
    n_trials: int = 10_000
    seed: int = 0
    window: float = 2000.0
    coupling: Coupling = Coupling.INDEPENDENT_RECEIVERS
    slot_model: SlotModel = SlotModel.STATIC_INTERFERENCE
    tail_correction: bool = True

    def __post_init__(self):
        if self.n_trials < 1:
            raise ValueError("n_trials must be at least 1")
        if not self.window > 0:
            raise ValueError("window must be positive")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 bits")

    def check_scenario(self, scn: Scenario):
        extent = max(max(abs(p.x), abs(p.y)) for p in scn.nodes().values())
        if not self.window > extent:
            raise ValueError(f"window {self.window} must exceed the node extent {extent}")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_err: float
    n_trials: int
    seed: int
    resamples: int = 0

    @classmethod
    def from_count(cls, count: int, n: int, seed: int, resamples: int = 0) -> "McEstimate":
        mean = count / n
        return cls(mean, math.sqrt(mean * (1.0 - mean) / n), n, seed, resamples)


@dataclass(frozen=True)
class LinkFades:
    """Unit-mean exponential power fades of the useful links."""

    sr: float
    sd1: float
    sd2: float
    rd1: float
    rd2: float


@dataclass(frozen=True)
class RoadSample:
    """Vehicles of one road as seen by one receiver.

    ``active`` and ``fades`` have one row per time slot; under static
    interference the second row repeats the first.
    """

    positions: np.ndarray
    active: np.ndarray
    fades: np.ndarray


@dataclass(frozen=True)
class InterfererField:
    x: RoadSample
    y: RoadSample
    tail: tuple[float, float] = (0.0, 0.0)
    window: float = 2000.0


@dataclass(frozen=True)
class TrialOutcome:
    o1: bool
    o2: bool
    a_r1: bool
    a_r2: bool
    b_d1: bool
    b_d21: bool
    b_d22: bool
    c_d1: bool
    c_d21: bool
    c_d22: bool


# -- stream bookkeeping -------------------------------------------------------


def _stream(kind: int, context: int = 0, road: int = 0, receiver: int = 0, slot: int = 0, attempt: int = 0) -> int:
    return (kind << 24) | (context << 20) | (road << 18) | (receiver << 14) | (slot << 12) | attempt


def _road_density(ch: ChannelParams, road: Road) -> float:
    return ch.lambda_x if road is Road.X else ch.lambda_y


def _road_geometry(pos: Position, road: Road) -> tuple[float, float]:
    """Receiver coordinate along the road and perpendicular offset from it."""
    return (pos.x, pos.y) if road is Road.X else (pos.y, pos.x)


@lru_cache(maxsize=64)
def _poisson_cdf(mu: float) -> np.ndarray:
    kmax = int(mu + 40.0 * math.sqrt(mu) + 40)
    return stats.poisson.cdf(np.arange(kmax + 1), mu)


def _poisson_inverse(u: np.ndarray, mu: float) -> np.ndarray:
    if mu == 0.0:
        return np.zeros(np.shape(u), dtype=np.int64)
    cdf = _poisson_cdf(mu)
    return np.minimum(np.searchsorted(cdf, u, side="left"), len(cdf) - 1).astype(np.int64)


def _tiles(window: float) -> np.ndarray:
    return np.arange(math.floor(-window / TILE), math.ceil(window / TILE), dtype=np.int64)


# -- field sampling -----------------------------------------------------------


@dataclass
class _RoadBlock:
    rows: np.ndarray
    positions: np.ndarray
    active: np.ndarray  # (2, n)
    fades: dict[int, np.ndarray] = field(default_factory=dict)  # receiver -> (2, n), nan where undrawn
    resamples: int = 0


def _sample_road(
    seed: int,
    trials: np.ndarray,
    context: int,
    road: Road,
    ch: ChannelParams,
    cfg: TrialConfig,
    receivers: dict[int, Position],
    all_fades: bool,
) -> _RoadBlock:
    road_id = 0 if road is Road.X else 1
    lam = _road_density(ch, road)
    n_rows = len(trials)
    tiles = _tiles(cfg.window)
    u = philox.uniform(seed, _stream(_COUNT, context, road_id), trials[:, None], tiles[None, :], 0)
    counts = _poisson_inverse(u, lam * TILE).ravel()
    total = int(counts.sum())
    rows = np.repeat(np.repeat(np.arange(n_rows), len(tiles)), counts)
    tile_of = np.repeat(np.tile(tiles, n_rows), counts)
    starts = np.cumsum(counts) - counts
    idx = np.arange(total, dtype=np.int64) - np.repeat(starts, counts)
    trial_of = trials[rows]

    pos_stream = _stream(_POSITION, context, road_id)
    positions = (tile_of + philox.uniform(seed, pos_stream, trial_of, tile_of, idx)) * TILE
    keep = np.abs(positions) <= cfg.window
    rows, tile_of, idx, trial_of, positions = (a[keep] for a in (rows, tile_of, idx, trial_of, positions))

    redraw = cfg.slot_model is SlotModel.PER_SLOT_REDRAW
    active0 = philox.uniform(seed, _stream(_ACTIVE, context, road_id, slot=0), trial_of, tile_of, idx) < ch.p
    if redraw:
        active1 = philox.uniform(seed, _stream(_ACTIVE, context, road_id, slot=1), trial_of, tile_of, idx) < ch.p
    else:
        active1 = active0
    active = np.vstack([active0, active1])

    # exact interferer/receiver coincidence: redraw the position inside the window part of its tile
    resamples = 0
    any_active = active0 | active1
    for attempt in range(1, _MAX_RESAMPLE + 1):
        bad = np.zeros(len(positions), dtype=bool)
        for pos in receivers.values():
            along, offset = _road_geometry(pos, road)
            if offset == 0.0:
                bad |= any_active & (positions == along)
        if not bad.any():
            break
        resamples += int(bad.sum())
        log.info("resampling %d coincident interferer(s) on road %s", int(bad.sum()), road.value)
        lo = np.maximum(tile_of[bad] * TILE, -cfg.window)
        hi = np.minimum((tile_of[bad] + 1) * TILE, cfg.window)
        u = philox.uniform(seed, _stream(_POSITION, context, road_id, attempt=attempt), trial_of[bad], tile_of[bad], idx[bad])
        positions[bad] = lo + (hi - lo) * u
    else:
        raise CoincidentInterfererError("could not separate interferers from receivers")

    fades: dict[int, np.ndarray] = {}
    for rec in receivers:
        slots = (0, 1) if (redraw and rec != 0) else (0,)
        arr = np.full((2, len(positions)), np.nan)
        for slot in slots:
            need = np.ones(len(positions), dtype=bool) if all_fades else active[slot]
            arr[slot, need] = philox.exponential(
                seed, _stream(_FADE, context, road_id, rec, slot), trial_of[need], tile_of[need], idx[need]
            )
        if len(slots) == 1:
            arr[1] = arr[0]
        fades[rec] = arr
    return _RoadBlock(rows, positions, active, fades, resamples)


def _tail_cumulants(pos: Position, ch: ChannelParams, window: float) -> tuple[float, float]:
    """Mean and variance of the interference from vehicles beyond ``window``."""
    k1 = k2 = 0.0
    for road in Road:
        density = ch.p * _road_density(ch, road)
        if density == 0.0:
            continue
        along, offset = _road_geometry(pos, road)
        for start in (window - along, window + along):
            k1 += density * integrate.quad(lambda t: (t * t + offset * offset) ** (-ch.alpha / 2), start, np.inf)[0]
            # E[h^2] = 2 for a unit-mean exponential fade
            k2 += 2 * density * integrate.quad(lambda t: (t * t + offset * offset) ** (-ch.alpha), start, np.inf)[0]
    return k1, k2


def _tail_draw(seed: int, trials: np.ndarray, rec: int, slot: int, k1: float, k2: float) -> np.ndarray:
    if k1 <= 0.0:
        return np.zeros(len(trials))
    shape, scale = k1 * k1 / k2, k2 / k1
    u = philox.uniform(seed, _stream(_TAIL, receiver=rec, slot=slot), trials, 0, 0)
    return special.gammaincinv(shape, u) * scale


def _contexts(cfg: TrialConfig, scn: Scenario) -> list[tuple[int, dict[int, Position]]]:
    nodes = scn.nodes()
    if cfg.coupling is Coupling.SHARED_FIELD:
        return [(_SHARED_CONTEXT, {i: nodes[name] for i, name in enumerate(RECEIVERS)})]
    return [(i, {i: nodes[name]}) for i, name in enumerate(RECEIVERS)]


def _block_interference(scn: Scenario, cfg: TrialConfig, trials: np.ndarray) -> tuple[dict[str, np.ndarray], int]:
    """Total interference per receiver, shape ``(2, len(trials))`` (one row per slot)."""
    ch = scn.channel
    nodes = scn.nodes()
    n = len(trials)
    total = {name: np.zeros((2, n)) for name in RECEIVERS}
    resamples = 0
    for context, receivers in _contexts(cfg, scn):
        for road in Road:
            if ch.p == 0.0 or _road_density(ch, road) == 0.0:
                continue
            blk = _sample_road(cfg.seed, trials, context, road, ch, cfg, receivers, all_fades=False)
            resamples += blk.resamples
            for rec, pos in receivers.items():
                along, offset = _road_geometry(pos, road)
                gain = ((blk.positions - along) ** 2 + offset * offset) ** (-ch.alpha / 2)
                for slot in (0, 1) if rec != 0 else (0,):
                    m = blk.active[slot]
                    total[RECEIVERS[rec]][slot] += np.bincount(
                        blk.rows[m], weights=blk.fades[rec][slot, m] * gain[m], minlength=n
                    )
    total["r"][1] = total["r"][0]
    if cfg.tail_correction:
        redraw = cfg.slot_model is SlotModel.PER_SLOT_REDRAW
        for rec, name in enumerate(RECEIVERS):
            k1, k2 = _tail_cumulants(nodes[name], ch, cfg.window)
            t0 = _tail_draw(cfg.seed, trials, rec, 0, k1, k2)
            t1 = _tail_draw(cfg.seed, trials, rec, 1, k1, k2) if (redraw and rec != 0) else t0
            total[name][0] += t0
            total[name][1] += t1
    return total, resamples


def _block_links(seed: int, trials: np.ndarray) -> dict[str, np.ndarray]:
    return {
        name: philox.exponential(seed, _stream(_LINK), trials, 0, i) for i, name in enumerate(LINKS)
    }


# -- event algebra ------------------------------------------------------------


def _single_fails(power, a_sig: float, a_int: float, theta: float, interference):
    """SIR of one branch below ``theta``: ``P a_sig / (P a_int + I) < theta``."""
    return power * a_sig < theta * (power * a_int + interference)


def _combined_fails(p1, p2, a_sig: float, a_int: float, theta: float, i1, i2, static: bool):
    """Maximum ratio combining of the direct and relayed branches.

    With one interference level the combined power ``p1 + p2`` faces ``I``.
    With per-slot levels each branch is whitened by its own interference, giving
    ``gamma = p1/i1 + p2/i2`` compared through ``gamma a_sig / (gamma a_int + 1)``;
    both sides are multiplied through by ``i1 * i2``.
    """
    if static:
        m = p1 + p2
        return m * a_sig < theta * (m * a_int + i1)
    q = p1 * i2 + p2 * i1
    return q * a_sig < theta * (q * a_int + i1 * i2)


def _events(scn: Scenario, links, interference, static: bool) -> dict[str, np.ndarray]:
    """All outage indicators, for every scheme, on arrays of trials."""
    noma = scn.noma
    th = scn.thresholds
    a1, a2, t1, t2 = noma.a1, noma.a2, th.theta1, th.theta2
    p_sr = links["sr"] * scn.loss("s", "r")
    p_sd = {d: links["s" + d] * scn.loss("s", d) for d in ("d1", "d2")}
    p_rd = {d: links["r" + d] * scn.loss("r", d) for d in ("d1", "d2")}
    i_r = interference["r"][0]
    i_d = {d: interference[d] for d in ("d1", "d2")}

    ev = {}
    ev["a_r1"] = _single_fails(p_sr, a1, a2, t1, i_r)
    ev["a_r2"] = _single_fails(p_sr, a2, 0.0, t2, i_r)
    ev["b_d1"] = _single_fails(p_sd["d1"], a1, a2, t1, i_d["d1"][0])
    ev["b_d21"] = _single_fails(p_sd["d2"], a1, a2, t1, i_d["d2"][0])
    ev["b_d22"] = _single_fails(p_sd["d2"], a2, 0.0, t2, i_d["d2"][0])
    ev["c_d1"] = _combined_fails(p_sd["d1"], p_rd["d1"], a1, a2, t1, *i_d["d1"], static)
    ev["c_d21"] = _combined_fails(p_sd["d2"], p_rd["d2"], a1, a2, t1, *i_d["d2"], static)
    ev["c_d22"] = _combined_fails(p_sd["d2"], p_rd["d2"], a2, 0.0, t2, *i_d["d2"], static)
    ev["o1"] = (ev["b_d1"] & ev["a_r1"]) | (~ev["a_r1"] & ev["c_d1"])
    relay_any = ev["a_r1"] | ev["a_r2"]
    ev["o2"] = ((ev["b_d21"] | ev["b_d22"]) & relay_any) | (~relay_any & (ev["c_d21"] | ev["c_d22"]))

    # relay-only second hop: the direct observation is ignored
    h_d1 = _single_fails(p_rd["d1"], a1, a2, t1, i_d["d1"][1])
    h_d21 = _single_fails(p_rd["d2"], a1, a2, t1, i_d["d2"][1])
    h_d22 = _single_fails(p_rd["d2"], a2, 0.0, t2, i_d["d2"][1])
    ev["relay_noma_1"] = ev["a_r1"] | h_d1
    ev["relay_noma_2"] = relay_any | h_d21 | h_d22

    # OMA: one full-power transaction per destination, no SIC
    for k, (d, t) in enumerate(zip(("d1", "d2"), oma_thresholds(scn)), 1):
        a = _single_fails(p_sr, 1.0, 0.0, t, i_r)
        b = _single_fails(p_sd[d], 1.0, 0.0, t, i_d[d][0])
        c = _combined_fails(p_sd[d], p_rd[d], 1.0, 0.0, t, *i_d[d], static)
        h = _single_fails(p_rd[d], 1.0, 0.0, t, i_d[d][1])
        ev[f"mrc_oma_{k}"] = (b & a) | (~a & c)
        ev[f"relay_oma_{k}"] = a | h
    ev["mrc_noma_1"], ev["mrc_noma_2"] = ev["o1"], ev["o2"]
    return ev


# -- public per-trial surface -------------------------------------------------


def sample_links(cfg: TrialConfig, trial_index: int) -> LinkFades:
    vals = _block_links(cfg.seed, np.array([trial_index], dtype=np.int64))
    return LinkFades(**{k: float(v[0]) for k, v in vals.items()})


def sample_field(scn: Scenario, cfg: TrialConfig, trial_index: int) -> dict[str, InterfererField]:
    """Interferers seen by R, D1 and D2 in one trial, keyed by receiver name.

    Identical ``(scenario, cfg, trial_index)`` always yields the identical
    field.  Fades are drawn for every vehicle, including silent ones.
    """
    cfg.check_scenario(scn)
    ch = scn.channel
    trials = np.array([trial_index], dtype=np.int64)
    empty = RoadSample(np.zeros(0), np.zeros((2, 0), dtype=bool), np.zeros((2, 0)))
    per_rec: dict[int, dict[Road, RoadSample]] = {i: {r: empty for r in Road} for i in range(3)}
    for context, receivers in _contexts(cfg, scn):
        for road in Road:
            if _road_density(ch, road) == 0.0:
                continue
            blk = _sample_road(cfg.seed, trials, context, road, ch, cfg, receivers, all_fades=True)
            for rec in receivers:
                per_rec[rec][road] = RoadSample(blk.positions.copy(), blk.active.copy(), blk.fades[rec].copy())
    out = {}
    redraw = cfg.slot_model is SlotModel.PER_SLOT_REDRAW
    for rec, name in enumerate(RECEIVERS):
        tail = (0.0, 0.0)
        if cfg.tail_correction:
            k1, k2 = _tail_cumulants(scn.nodes()[name], ch, cfg.window)
            t0 = float(_tail_draw(cfg.seed, trials, rec, 0, k1, k2)[0])
            t1 = float(_tail_draw(cfg.seed, trials, rec, 1, k1, k2)[0]) if (redraw and rec != 0) else t0
            tail = (t0, t1)
        out[name] = InterfererField(per_rec[rec][Road.X], per_rec[rec][Road.Y], tail, cfg.window)
    return out


def aggregate_interference(fld: InterfererField, receiver: Position, alpha: float, slot: int = 0) -> float:
    """Sum of fade times path loss over the active vehicles of both roads.

    The far-field ``tail`` of the field is not included.
    """
    total = 0.0
    for road, sample in ((Road.X, fld.x), (Road.Y, fld.y)):
        m = sample.active[slot]
        if not m.any():
            continue
        along, offset = _road_geometry(receiver, road)
        d2 = (sample.positions[m] - along) ** 2 + offset * offset
        if np.any(d2 == 0.0):
            raise CoincidentInterfererError(f"active interferer on top of receiver ({receiver.x}, {receiver.y})")
        total += float(np.sum(sample.fades[slot, m] * d2 ** (-alpha / 2)))
    return total


def evaluate_trial(
    scn: Scenario,
    fields: dict[str, InterfererField],
    links: LinkFades,
    slot_model: SlotModel = SlotModel.STATIC_INTERFERENCE,
) -> TrialOutcome:
    nodes = scn.nodes()
    interference = {}
    for name in RECEIVERS:
        fld = fields[name]
        interference[name] = [
            aggregate_interference(fld, nodes[name], scn.channel.alpha, slot) + fld.tail[slot] for slot in (0, 1)
        ]
        if slot_model is SlotModel.STATIC_INTERFERENCE:
            interference[name][1] = interference[name][0]
    link_vals = {k: getattr(links, k) for k in LINKS}
    ev = _events(scn, link_vals, interference, slot_model is SlotModel.STATIC_INTERFERENCE)
    return TrialOutcome(**{k: bool(ev[k]) for k in TrialOutcome.__dataclass_fields__})


# -- estimators ---------------------------------------------------------------


def simulate_trials(scn: Scenario, cfg: TrialConfig, trials) -> tuple[dict[str, np.ndarray], int]:
    """Event indicators for the given trial indices, plus the coincidence resample count."""
    trials = np.asarray(trials, dtype=np.int64)
    interference, resamples = _block_interference(scn, cfg, trials)
    links = _block_links(cfg.seed, trials)
    return _events(scn, links, interference, cfg.slot_model is SlotModel.STATIC_INTERFERENCE), resamples


_SCHEME_KEYS = {s: (f"{s.value}_1", f"{s.value}_2") for s in Scheme}


def _block_counts(args) -> tuple[dict[str, int], int, int]:
    scn, cfg, start, stop = args
    ev, resamples = simulate_trials(scn, cfg, np.arange(start, stop))
    counts = {k: int(np.count_nonzero(v)) for k, v in ev.items()}
    violations = 0
    for mrc, relay in ((Scheme.MRC_NOMA, Scheme.RELAY_NOMA), (Scheme.MRC_OMA, Scheme.RELAY_OMA)):
        for km, kr in zip(_SCHEME_KEYS[mrc], _SCHEME_KEYS[relay]):
            violations += int(np.count_nonzero(ev[km] & ~ev[kr]))
    return counts, resamples, violations


def _run(scn: Scenario, cfg: TrialConfig, workers: int) -> tuple[dict[str, int], int, int]:
    cfg.check_scenario(scn)
    jobs = [(scn, cfg, lo, min(lo + BLOCK, cfg.n_trials)) for lo in range(0, cfg.n_trials, BLOCK)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_block_counts, jobs))
    else:
        parts = [_block_counts(j) for j in jobs]
    counts: dict[str, int] = {}
    resamples = violations = 0
    for c, r, v in parts:
        for k, n in c.items():
            counts[k] = counts.get(k, 0) + n
        resamples += r
        violations += v
    return counts, resamples, violations


def estimate_outage(scn: Scenario, cfg: TrialConfig, workers: int = 1) -> tuple[McEstimate, McEstimate]:
    """Outage estimates of D1 and D2 under MRC cooperative NOMA."""
    counts, resamples, _ = _run(scn, cfg, workers)
    return tuple(McEstimate.from_count(counts[k], cfg.n_trials, cfg.seed, resamples) for k in ("o1", "o2"))


@dataclass(frozen=True)
class CoupledEstimate:
    estimates: dict[Scheme, tuple[McEstimate, McEstimate]]
    dominance_violations: int


def estimate_coupled_schemes(scn: Scenario, cfg: TrialConfig, workers: int = 1) -> CoupledEstimate:
    """All four schemes scored on the same random draws.

    ``dominance_violations`` counts trial/destination pairs where MRC fails but
    the relay-only scheme succeeds; it must be zero.
    """
    counts, resamples, violations = _run(scn, cfg, workers)
    est = {
        s: tuple(McEstimate.from_count(counts[k], cfg.n_trials, cfg.seed, resamples) for k in keys)
        for s, keys in _SCHEME_KEYS.items()
    }
    return CoupledEstimate(est, violations)
