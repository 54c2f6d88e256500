"""Parameter sweeps and the analytic-versus-simulation validation battery."""

from __future__ import annotations

import csv
import enum
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, TextIO

import numpy as np

from .laplace import LaplaceArg, Road, laplace_closed_alpha2, laplace_numeric
from .montecarlo import Coupling, SlotModel, TrialConfig, estimate_coupled_schemes
from .outage import Scheme, analyze
from .scenario import ChannelParams, Position, ReceiverGeometry, Scenario, scenario_from_config

__all__ = [
    "CSV_HEADER",
    "Check",
    "SweepRow",
    "SweepSpec",
    "SweepVariable",
    "ValidationReport",
    "node_distance_scenario",
    "parse_grid",
    "relay_position_scenario",
    "run_sweep",
    "scenario_at",
    "sweep_from_config",
    "trial_config_from",
    "validate",
    "write_csv",
]

CSV_HEADER = ("variable", "value", "scheme", "dest", "analytic", "mc_mean", "mc_stderr", "feasible")
SOURCE_DESTINATION_DISTANCE = 100.0


class SweepVariable(enum.Enum):
    A1 = "a1"
    NODE_DISTANCE = "node_distance"
    LAMBDA = "lambda"
    RELAY_POSITION = "relay_position"


def receiver_centroid(scn: Scenario) -> Position:
    return Position((scn.r.x + scn.d1.x + scn.d2.x) / 3, (scn.r.y + scn.d1.y + scn.d2.y) / 3)


def node_distance_scenario(base: Scenario, distance: float) -> Scenario:
    """Translate all four nodes rigidly so the receivers' centroid sits at
    signed ``distance`` from the intersection along its original ray.

    Link lengths are unchanged; only the interference geometry moves.
    """
    anchor = receiver_centroid(base)
    norm = anchor.norm()
    direction = anchor.scaled(1.0 / norm) if norm > 0 else Position(1.0, 0.0)
    shift = direction.scaled(distance) - anchor
    return base.translated(shift.x, shift.y)


def _relay_path(base: Scenario) -> tuple[Position, Position, Position]:
    """Destinations pulled onto the 100 m circle around S, and the S->midpoint ray's end."""
    def onto_circle(d: Position) -> Position:
        v = d - base.s
        return base.s + v.scaled(SOURCE_DESTINATION_DISTANCE / v.norm())

    d1, d2 = onto_circle(base.d1), onto_circle(base.d2)
    mid = Position((d1.x + d2.x) / 2, (d1.y + d2.y) / 2)
    return d1, d2, mid


def relay_position_scenario(base: Scenario, distance: float) -> Scenario:
    """Relay ``distance`` metres from S towards the destinations' midpoint,
    with both destinations exactly 100 m from S."""
    d1, d2, mid = _relay_path(base)
    ray = mid - base.s
    r = base.s + ray.scaled(distance / ray.norm())
    return replace(base, r=r, d1=d1, d2=d2)


def scenario_at(variable: SweepVariable, base: Scenario, value: float) -> Scenario:
    if variable is SweepVariable.A1:
        return base.with_a1(value)
    if variable is SweepVariable.LAMBDA:
        return base.with_lambda(value)
    if variable is SweepVariable.NODE_DISTANCE:
        return node_distance_scenario(base, value)
    return relay_position_scenario(base, value)


@dataclass(frozen=True)
class SweepSpec:
    variable: SweepVariable
    grid: tuple[float, ...]
    schemes: tuple[Scheme, ...] = tuple(Scheme)
    base: Scenario = field(default_factory=Scenario)
    mc: TrialConfig | None = None

    def __post_init__(self):
        grid = tuple(float(v) for v in self.grid)
        object.__setattr__(self, "grid", grid)
        if not grid:
            raise ValueError("sweep grid is empty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("sweep grid must be strictly increasing")
        if not self.schemes:
            raise ValueError("no schemes selected")
        if self.variable is SweepVariable.A1 and not all(0.5 < v < 1.0 for v in grid):
            raise ValueError("a1 grid must lie in (0.5, 1)")
        if self.variable is SweepVariable.LAMBDA and min(grid) < 0:
            raise ValueError("lambda grid must be nonnegative")
        if self.variable is SweepVariable.RELAY_POSITION:
            reach = (_relay_path(self.base)[2] - self.base.s).norm()
            if not all(0 < v < reach for v in grid):
                raise ValueError(f"relay positions must lie strictly between 0 and {reach:.6g} m")

    def describe(self) -> str:
        if self.variable is SweepVariable.NODE_DISTANCE:
            return ("rigid translation of S, R, D1, D2; value = signed distance of the "
                    "receivers' centroid from the intersection along its original ray")
        if self.variable is SweepVariable.RELAY_POSITION:
            return "value = distance of R from S towards the midpoint of D1, D2; |S-D1| = |S-D2| = 100 m"
        return f"value = {self.variable.value}"


@dataclass(frozen=True)
class SweepRow:
    variable: SweepVariable
    value: float
    scheme: Scheme
    dest: int
    analytic: float
    mc_mean: float | None
    mc_stderr: float | None
    feasible: bool

    def as_csv(self) -> list[str]:
        def fmt(v: float | None) -> str:
            return "" if v is None else repr(float(v))

        return [self.variable.value, fmt(self.value), self.scheme.value, str(self.dest),
                fmt(self.analytic), fmt(self.mc_mean), fmt(self.mc_stderr),
                "true" if self.feasible else "false"]


def _sweep_point(args: tuple[SweepSpec, float]) -> list[SweepRow]:
    spec, value = args
    scn = scenario_at(spec.variable, spec.base, value)
    mc = estimate_coupled_schemes(scn, spec.mc).estimates if spec.mc is not None else None
    rows = []
    for scheme in spec.schemes:
        report = analyze(scn, scheme)
        for dest in (1, 2):
            est = mc[scheme][dest - 1] if mc is not None else None
            rows.append(SweepRow(
                spec.variable, value, scheme, dest, report.by_destination(dest),
                est.mean if est else None, est.std_err if est else None, report.feasible,
            ))
    return rows


def run_sweep(spec: SweepSpec, workers: int = 1) -> list[SweepRow]:
    """One row per (grid point, scheme, destination), in grid order."""
    jobs = [(spec, v) for v in spec.grid]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_sweep_point, jobs))
    else:
        parts = [_sweep_point(j) for j in jobs]
    return [row for part in parts for row in part]


def write_csv(rows: Iterable[SweepRow], out: TextIO, spec: SweepSpec | None = None):
    if spec is not None:
        out.write(f"# sweep {spec.variable.value}: {spec.describe()}\n")
        if spec.mc is not None:
            mc = spec.mc
            out.write(f"# monte carlo: trials={mc.n_trials} seed={mc.seed} window={mc.window!r} "
                      f"coupling={mc.coupling.value} slot={mc.slot_model.value}\n")
        out.write("# OMA rows are a modeled baseline (threshold 2^(4R)-1, full power)\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow(row.as_csv())


def parse_grid(text: str) -> tuple[float, ...]:
    """``start:stop:step`` (inclusive) or a comma separated list."""
    text = text.strip()
    if ":" in text:
        start, stop, step = (float(t) for t in text.split(":"))
        if step <= 0:
            raise ValueError("grid step must be positive")
        n = int(math.floor((stop - start) / step + 1e-9)) + 1
        return tuple(round(start + i * step, 12) for i in range(n))
    return tuple(float(t) for t in text.split(",") if t.strip())


def trial_config_from(cfg: Mapping[str, str], **overrides) -> TrialConfig | None:
    """Monte Carlo settings from ``mc.*`` keys; ``None`` when zero trials are requested."""
    values = {
        "n_trials": int(cfg.get("mc.trials", 0)),
        "seed": int(cfg.get("mc.seed", 42)),
        "window": float(cfg.get("mc.window", 2000.0)),
        "coupling": Coupling(cfg.get("mc.coupling", "independent")),
        "slot_model": SlotModel(cfg.get("mc.slot", "static")),
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    if values["n_trials"] <= 0:
        return None
    return TrialConfig(**values)


def sweep_from_config(cfg: Mapping[str, str], **mc_overrides) -> SweepSpec:
    if "sweep.variable" not in cfg or "sweep.grid" not in cfg:
        raise ValueError("sweep configuration needs sweep.variable and sweep.grid")
    schemes = tuple(Scheme(s.strip()) for s in cfg.get("sweep.schemes", ",".join(s.value for s in Scheme)).split(",") if s.strip())
    return SweepSpec(
        variable=SweepVariable(cfg["sweep.variable"].strip().lower()),
        grid=parse_grid(cfg["sweep.grid"]),
        schemes=schemes,
        base=scenario_from_config(cfg),
        mc=trial_config_from(cfg, **mc_overrides),
    )


# -- validation ---------------------------------------------------------------


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail}"


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[Check, ...]

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def text(self) -> str:
        lines = [c.line() for c in self.checks]
        lines.append(f"{'OK' if self.ok else 'FAILED'}: {sum(c.passed for c in self.checks)}/{len(self.checks)} checks passed")
        return "\n".join(lines) + "\n"


LAPLACE_GRID_S = tuple(float(s) for s in np.logspace(-2, 6, 33))
LAPLACE_GRID_M = (0.0, 10.0, 100.0, 1000.0)
LAPLACE_GRID_THETA = (0.0, math.pi / 6, math.pi / 4, math.pi / 2)
LAMBDA_GRID = tuple(round(0.001 * k, 3) for k in range(1, 21))


def laplace_fidelity(ch: ChannelParams) -> float:
    """Largest relative gap between the alpha=2 closed form and quadrature on the reference grid."""
    ch = replace(ch, alpha=2.0)
    worst = 0.0
    for s in LAPLACE_GRID_S:
        for m in LAPLACE_GRID_M:
            for theta in LAPLACE_GRID_THETA:
                arg = LaplaceArg(s, ReceiverGeometry(m, theta))
                for road in Road:
                    closed = laplace_closed_alpha2(arg, road, ch)
                    worst = max(worst, abs(closed - laplace_numeric(arg, road, ch)) / closed)
    return worst


def _scaled_theta1(scn: Scenario, factor: float) -> Scenario:
    theta1 = 2.0 ** (2 * scn.noma.rate1) - 1.0
    return scn.with_noma(rate1=math.log2(1.0 + factor * theta1) / 2)


def validate(scn: Scenario, cfg: TrialConfig, workers: int = 1, theta1_scale: float = 1.0) -> ValidationReport:
    """Run the invariant battery on one scenario.

    ``theta1_scale`` corrupts the first SIR threshold on the analytic side
    only; it exists so the battery can be shown to reject a wrong model.
    """
    checks: list[Check] = []
    analytic_scn = scn if theta1_scale == 1.0 else _scaled_theta1(scn, theta1_scale)

    ref = scn.channel
    if ref.p * max(ref.lambda_x, ref.lambda_y) == 0.0:
        ref = ChannelParams(alpha=2.0, lambda_x=0.01, lambda_y=0.01, p=0.5)
    worst = laplace_fidelity(ref)
    checks.append(Check("laplace closed form vs quadrature", worst <= 1e-6, f"max rel diff {worst:.3e} (tol 1e-6)"))

    reports = {s: analyze(analytic_scn, s) for s in Scheme}
    in_range = all(0.0 <= r.by_destination(d) <= 1.0 for r in reports.values() for d in (1, 2))
    checks.append(Check("probabilities within [0, 1]", in_range, "all schemes, both destinations"))

    coupled = estimate_coupled_schemes(scn, cfg, workers=workers)
    for dest in (1, 2):
        a = reports[Scheme.MRC_NOMA].by_destination(dest)
        est = coupled.estimates[Scheme.MRC_NOMA][dest - 1]
        gap = abs(a - est.mean)
        ok = gap <= 3 * est.std_err if est.std_err > 0 else gap <= 1e-12
        checks.append(Check(
            f"analytic vs monte carlo, D{dest}", ok,
            f"analytic {a:.6f} mc {est.mean:.6f} +- {est.std_err:.6f} (|diff| {gap:.3e}, 3 se {3 * est.std_err:.3e})",
        ))

    checks.append(Check(
        "coupled dominance MRC => relay", coupled.dominance_violations == 0,
        f"{coupled.dominance_violations} violating trials of {cfg.n_trials}",
    ))

    bad = [
        f"{mrc.value}/D{d}"
        for mrc, relay in ((Scheme.MRC_NOMA, Scheme.RELAY_NOMA), (Scheme.MRC_OMA, Scheme.RELAY_OMA))
        for d in (1, 2)
        if reports[mrc].by_destination(d) > reports[relay].by_destination(d)
    ]
    checks.append(Check("analytic MRC <= relay", not bad, "violations: " + (", ".join(bad) or "none")))

    mono_bad = []
    for scheme in Scheme:
        curve = [analyze(analytic_scn.with_lambda(lam), scheme) for lam in (0.0,) + LAMBDA_GRID]
        for d in (1, 2):
            vals = [r.by_destination(d) for r in curve]
            strict = curve[0].feasible
            if any((b <= a) if strict else (b < a) for a, b in zip(vals, vals[1:])):
                mono_bad.append(f"{scheme.value}/D{d}")
    checks.append(Check("outage increasing in lambda", not mono_bad,
                        "violations: " + (", ".join(mono_bad) or "none")))
    return ValidationReport(tuple(checks))


def report_text(scn: Scenario, schemes: Iterable[Scheme] = tuple(Scheme)) -> str:
    buf = io.StringIO()
    for scheme in schemes:
        r = analyze(scn, scheme)
        note = " (modeled baseline)" if r.modeled_baseline else ""
        buf.write(f"{scheme.value}: P_out(D1)={r.p_out_d1!r} P_out(D2)={r.p_out_d2!r} feasible={str(r.feasible).lower()}{note}\n")
    return buf.getvalue()
