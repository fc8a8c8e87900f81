"""
Command-line front end.

    sins-budget budget     --scenario FILE --out DIR
    sins-budget montecarlo --scenario FILE --out DIR [--seed N]
    sins-budget trajgen    --scenario FILE --out DIR [--force]

Exit codes: 0 success, 1 Monte-Carlo mismatch, 2 bad input, 3 numerical
failure (e.g. polar latitude).
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import report
from .errors import NumericError, ScenarioError, SingularityError, TrajectoryError
from .montecarlo import compare_budget
from .pipeline import Setup, run_budget, run_montecarlo
from .scenario import Scenario, bundled_scenario_path, load_scenario
from .trajectory import generate, write_trajectory

log = logging.getLogger("sinsbudget")

EXIT_MISMATCH = 1
EXIT_INPUT = 2
EXIT_NUMERIC = 3


def _resolve_scenario(arg: str) -> Path:
    path = Path(arg)
    if not path.exists() and arg.startswith("bundled:"):
        return bundled_scenario_path(arg.split(":", 1)[1])
    return path


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8", newline="")
    log.info("wrote %s", path)


def cmd_budget(scenario: Scenario, out: Path) -> int:
    setup = Setup.from_scenario(scenario)
    run = run_budget(setup, scenario.epochs())
    _write(out / "budget.csv", report.budget_csv(run.reports))
    _write(out / "budget.txt", report.budget_table(run.reports, f"Error budget: {scenario.name}", scenario.audit))
    final = run.reports[-1]
    for cls in ("attitude", "velocity", "position"):
        labels = [o.label for o in setup.outputs if o.cls == cls]
        svg = report.budget_svg(final, labels, f"{scenario.name}: {cls} error distribution at {final.epoch:g} s")
        _write(out / f"budget_{cls}.svg", svg)
    return 0


def cmd_montecarlo(scenario: Scenario, out: Path, seed: int | None) -> int:
    if scenario.montecarlo is None:
        raise ScenarioError(f"{scenario.name}: montecarlo: missing section")
    count = scenario.montecarlo.count
    seed = scenario.montecarlo.seed if seed is None else seed
    setup = Setup.from_scenario(scenario)
    D = run_budget(setup, []).final
    mc = run_montecarlo(setup, count, seed)
    comparison = compare_budget(mc, D, [(o.label, o.index) for o in setup.outputs])
    _write(out / "mc_compare.csv", report.mc_csv(comparison))
    table = report.mc_table(comparison)
    _write(out / "mc_compare.txt", table)
    sys.stdout.write(table)
    if comparison.wide_intervals:
        log.warning("N=%d gives very wide intervals; the comparison has little power", count)
    return 0 if comparison.passed else EXIT_MISMATCH


def cmd_trajgen(scenario: Scenario, out: Path, force: bool) -> int:
    target = out / "trajectory.csv"
    if target.exists() and not force:
        raise FileExistsError(f"{target} exists; pass --force to overwrite")
    write_trajectory(generate(scenario.config, scenario.base_dir), target)
    log.info("wrote %s", target)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sins-budget", description="Per-source SINS error budgets.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("budget", "propagate the decomposed covariance and write budget tables/CSV/SVG"),
        ("montecarlo", "check the budget against a Monte-Carlo ensemble"),
        ("trajgen", "write the scenario's trajectory as CSV"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--scenario", required=True, help="scenario JSON file (or bundled:<name>)")
        p.add_argument("--out", default=".", help="output directory (default: current)")
        p.add_argument("--seed", type=int, default=None, help="override montecarlo.seed")
        p.add_argument("--force", action="store_true", help="overwrite existing trajectory output")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        if args.seed is not None and not 0 <= args.seed < 2**64:
            raise ScenarioError("--seed must be an unsigned 64-bit integer")
        scenario = load_scenario(_resolve_scenario(args.scenario))
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "budget":
            return cmd_budget(scenario, out)
        if args.command == "montecarlo":
            return cmd_montecarlo(scenario, out, args.seed)
        return cmd_trajgen(scenario, out, args.force)
    except (ScenarioError, TrajectoryError, FileExistsError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (SingularityError, NumericError) as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
