"""Command-line entry point: ``mrcnoma {analytic,simulate,sweep,validate}``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .experiments import report_text, run_sweep, sweep_from_config, trial_config_from, validate, write_csv
from .montecarlo import Coupling, SlotModel, estimate_coupled_schemes
from .outage import Scheme
from .scenario import read_config, scenario_from_config


def _config(path: str | None) -> dict[str, str]:
    return read_config(path) if path else {}


def _mc_overrides(args: argparse.Namespace) -> dict:
    return {
        "n_trials": args.trials,
        "seed": args.seed,
        "window": args.window,
        "coupling": Coupling(args.coupling) if args.coupling else None,
        "slot_model": SlotModel(args.slot) if args.slot else None,
    }


def _emit(text: str, out: str | None):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_analytic(args) -> int:
    scn = scenario_from_config(_config(args.config))
    schemes = tuple(Scheme) if args.scheme == "all" else (Scheme(args.scheme),)
    _emit(report_text(scn, schemes), args.out)
    return 0


def cmd_simulate(args) -> int:
    cfg = _config(args.config)
    scn = scenario_from_config(cfg)
    mc = trial_config_from({"mc.trials": "10000", **cfg}, **_mc_overrides(args))
    if mc is None:
        print("simulate needs at least one trial", file=sys.stderr)
        return 2
    coupled = estimate_coupled_schemes(scn, mc, workers=args.workers)
    lines = [f"# trials={mc.n_trials} seed={mc.seed} coupling={mc.coupling.value} slot={mc.slot_model.value}"]
    for scheme, (e1, e2) in coupled.estimates.items():
        lines.append(f"{scheme.value}: D1 {e1.mean!r} +- {e1.std_err!r}  D2 {e2.mean!r} +- {e2.std_err!r}")
    lines.append(f"dominance_violations: {coupled.dominance_violations}")
    lines.append(f"coincidence_resamples: {coupled.estimates[Scheme.MRC_NOMA][0].resamples}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_sweep(args) -> int:
    spec = sweep_from_config(_config(args.config), **_mc_overrides(args))
    rows = run_sweep(spec, workers=args.workers)
    if args.out:
        with open(args.out, "w", newline="") as fh:
            write_csv(rows, fh, spec)
    else:
        write_csv(rows, sys.stdout, spec)
    return 0


def cmd_validate(args) -> int:
    cfg = _config(args.config)
    scn = scenario_from_config(cfg)
    mc = trial_config_from({"mc.trials": "100000", **cfg}, **_mc_overrides(args))
    if mc is None:
        print("validate needs at least one trial", file=sys.stderr)
        return 2
    report = validate(scn, mc, workers=args.workers)
    _emit(report.text(), args.out)
    return 0 if report.ok else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mrcnoma", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, mc: bool):
        p.add_argument("--config", help="key = value scenario file")
        p.add_argument("--out", help="write output here instead of stdout")
        if mc:
            p.add_argument("--trials", type=int)
            p.add_argument("--seed", type=int)
            p.add_argument("--window", type=float, help="half-length of the simulated road segment (m)")
            p.add_argument("--coupling", choices=[c.value for c in Coupling])
            p.add_argument("--slot", choices=[s.value for s in SlotModel])
            p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("analytic", help="closed-form outage of one scenario")
    common(p, mc=False)
    p.add_argument("--scheme", default="all", choices=["all"] + [s.value for s in Scheme])
    p.set_defaults(func=cmd_analytic)

    p = sub.add_parser("simulate", help="Monte Carlo outage of one scenario, all schemes coupled")
    common(p, mc=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", help="parameter sweep to CSV")
    common(p, mc=True)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("validate", help="invariant battery; nonzero exit on failure")
    common(p, mc=True)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
