"""Run a strategy matrix over one or more seeds and write the result CSVs.

Usage::

    python -m swarmsim --seeds 1,2,3 --out results/
    python -m swarmsim --infra infra.json --apps apps.json --methods cost --trace
    python -m swarmsim --gen-scenario --gen-seed 7 --out scenario/
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .metrics import (
    MetricsReport,
    compute_metrics,
    energy_csv,
    energy_rows,
    metrics_csv,
    metrics_row,
    per_node_energy_series,
)
from .model import Application, Capacity, ValidationError
from .offers import DEFAULT_COMBINATION_GUARD, CombinationOverflowError
from .ranking import BORDA, COST, METHODS, NONE, RANDOM, RELIABILITY_MODES
from .scenario import (
    PROFILE_NAMES,
    applications_document,
    dumps,
    generate_scenario,
    infrastructure_document,
    load_applications,
    load_infrastructure,
    preset_priorities,
)
from .deployment import ImageRegistry
from .simulation import SimulationResult, simulate
from .simkernel import SimulationError


@dataclass(frozen=True)
class Strategy:
    profile: str
    method: str
    reliability_mode: str = NONE

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValidationError([f"unknown method {self.method!r}"])
        if self.reliability_mode not in RELIABILITY_MODES:
            raise ValidationError([f"unknown reliability mode {self.reliability_mode!r}"])
        if (self.profile == "random") != (self.method == RANDOM):
            raise ValidationError(["the random profile pairs only with the random method"])
        preset_priorities(self.profile)


def expand_strategies(profiles: Sequence[str], methods: Sequence[str], reliability_mode: str = NONE) -> list[Strategy]:
    """Cross priority profiles with ranking methods; ``random`` appears once."""
    out = []
    for profile in profiles:
        if profile == "random":
            out.append(Strategy("random", RANDOM, NONE))
            continue
        for method in methods:
            if method == RANDOM:
                continue
            out.append(Strategy(profile, method, reliability_mode))
    return out


STANDARD_STRATEGIES = expand_strategies(PROFILE_NAMES, (BORDA, COST))


@dataclass
class ScenarioConfig:
    strategies: list[Strategy]
    seeds: list[int]
    out_dir: Path = Path("results")
    infra_path: Optional[Path] = None
    apps_path: Optional[Path] = None
    trace: bool = False
    combination_guard: int = DEFAULT_COMBINATION_GUARD
    energy_step: float = 60.0
    energy_series: bool = True
    n_apps: int = 6
    n_capacities: int = 8

    def __post_init__(self):
        errors = []
        if not self.strategies:
            errors.append("at least one strategy required")
        if not self.seeds:
            errors.append("at least one seed required")
        if (self.infra_path is None) != (self.apps_path is None):
            errors.append("--infra and --apps must be given together")
        if self.combination_guard < 1:
            errors.append("combination guard must be >= 1")
        if errors:
            raise ValidationError(errors)


def run_strategy(
    capacities: Sequence[Capacity],
    applications: Sequence[Application],
    strategy: Strategy,
    seed: int,
    registry: Optional[ImageRegistry] = None,
    **kwargs,
) -> tuple[SimulationResult, MetricsReport]:
    """Simulate one (strategy, seed) pair and compute its report."""
    result = simulate(
        capacities,
        applications,
        method=strategy.method,
        priorities=preset_priorities(strategy.profile),
        reliability_mode=strategy.reliability_mode,
        seed=seed,
        registry=registry,
        **kwargs,
    )
    return result, compute_metrics(result.log, result.capacities)


def run_scenario(config: ScenarioConfig, stream=None) -> int:
    """Execute every (strategy, seed) run and write ``metrics.csv`` (and friends).

    Returns 0 when all runs succeed, 1 otherwise. One status line per run is
    printed to ``stream``.
    """
    stream = stream if stream is not None else sys.stdout
    out = Path(config.out_dir)
    fixed = None
    if config.infra_path is not None:
        infra = load_infrastructure(config.infra_path)
        fixed = (infra.capacities, load_applications(config.apps_path), infra.registry)

    out.mkdir(parents=True, exist_ok=True)
    metric_rows = []
    series_rows = []
    failures = 0
    for seed in config.seeds:
        if fixed is not None:
            capacities, applications, registry = fixed
        else:
            capacities, applications = generate_scenario(seed, config.n_apps, config.n_capacities)
            registry = ImageRegistry()
        for strategy in config.strategies:
            label = f"{strategy.profile}/{strategy.method}/{strategy.reliability_mode}/seed={seed}"
            try:
                result, report = run_strategy(
                    capacities,
                    applications,
                    strategy,
                    seed,
                    registry=registry,
                    combination_guard=config.combination_guard,
                )
            except (CombinationOverflowError, SimulationError, ValidationError, ValueError) as exc:
                failures += 1
                print(f"FAIL {label}: {exc}", file=stream)
                continue
            metric_rows.append(metrics_row(strategy.profile, strategy.method, strategy.reliability_mode, seed, report))
            if config.energy_series:
                series = per_node_energy_series(result.log, result.capacities, config.energy_step)
                series_rows.extend(
                    energy_rows(strategy.profile, strategy.method, strategy.reliability_mode, seed, series)
                )
            if config.trace:
                name = f"trace-{strategy.profile.replace(':', '_')}-{strategy.method}-{strategy.reliability_mode}-{seed}.ndjson"
                (out / name).write_text(result.log.to_ndjson())
            rejected = f" rejected={','.join(result.rejected)}" if result.rejected else ""
            print(
                f"ok   {label}: sim={report.simulation_time:.3f}min price={report.total_price:.3f}EUR "
                f"deploy={report.avg_deployment_time:.3f}min energy={report.total_energy:.3f}kWh{rejected}",
                file=stream,
            )
    (out / "metrics.csv").write_text(metrics_csv(metric_rows))
    if config.energy_series:
        (out / "energy_series.csv").write_text(energy_csv(series_rows))
    return 1 if failures else 0


def write_generated_scenario(out_dir, seed: int, n_apps: int = 6, n_capacities: int = 8) -> tuple[Path, Path]:
    capacities, applications = generate_scenario(seed, n_apps, n_capacities)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    infra_path = out / "infrastructure.json"
    apps_path = out / "applications.json"
    infra_path.write_text(dumps(infrastructure_document(capacities, seed, ImageRegistry())))
    apps_path.write_text(dumps(applications_document(applications)))
    return infra_path, apps_path


def _csv_list(text: str) -> list[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _seed_list(text: str) -> list[int]:
    seeds = []
    for part in _csv_list(text):
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            seeds.extend(range(int(lo), int(hi) + 1))
        else:
            seeds.append(int(part))
    return seeds


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="swarmsim", description=__doc__.splitlines()[0])
    p.add_argument("--infra", type=Path, help="infrastructure descriptor (JSON)")
    p.add_argument("--apps", type=Path, help="applications descriptor (JSON)")
    p.add_argument(
        "--strategies",
        default=",".join(PROFILE_NAMES),
        help="priority profiles: energy, price, latency, bandwidth, equal, random, or l:p:b:e weights",
    )
    p.add_argument("--methods", default="borda,cost", help="ranking methods for non-random profiles")
    p.add_argument("--reliability", default=NONE, choices=RELIABILITY_MODES)
    p.add_argument("--seeds", help="comma list, ranges allowed (1-20); defaults to the infra file seed or 0")
    p.add_argument("--out", type=Path, default=Path("results"))
    p.add_argument("--trace", action="store_true", help="write an NDJSON event trace per run")
    p.add_argument("--energy-step", type=float, default=60.0, help="energy series sampling step in seconds")
    p.add_argument("--combination-guard", type=int, default=DEFAULT_COMBINATION_GUARD)
    p.add_argument("--gen-scenario", action="store_true", help="only write a random scenario and exit")
    p.add_argument("--gen-seed", type=int, default=0)
    p.add_argument("--n-apps", type=int, default=6)
    p.add_argument("--n-capacities", type=int, default=8)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.gen_scenario:
            infra, apps = write_generated_scenario(args.out, args.gen_seed, args.n_apps, args.n_capacities)
            print(f"wrote {infra} and {apps}")
            return 0
        if args.seeds is not None:
            seeds = _seed_list(args.seeds)
        elif args.infra is not None:
            seeds = [load_infrastructure(args.infra).seed]
        else:
            seeds = [0]
        config = ScenarioConfig(
            strategies=expand_strategies(_csv_list(args.strategies), _csv_list(args.methods), args.reliability),
            seeds=seeds,
            out_dir=args.out,
            infra_path=args.infra,
            apps_path=args.apps,
            trace=args.trace,
            combination_guard=args.combination_guard,
            energy_step=args.energy_step,
            n_apps=args.n_apps,
            n_capacities=args.n_capacities,
        )
        return run_scenario(config)
    except (ValidationError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
