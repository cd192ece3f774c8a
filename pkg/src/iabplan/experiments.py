"""Batch experiment sweeps over seeds, network sizes, redundancy, and MIMO
configuration, emitting a CSV fit for external box-plot tooling."""

from __future__ import annotations

import csv
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .channel import RadioParams, build_synthetic_scenario, load_mcs_table
from .errors import ParameterError
from .model import PlanParams, build_model
from .solve import SolveLimits, solve_exact

EXPERIMENT_CSV_VERSION = 1
EXPERIMENT_CSV_HEADER = [
    "seed",
    "n",
    "density",
    "R",
    "mimo_layers",
    "rho",
    "objective",
    "gap",
    "status",
    "solve_time_s",
]


@dataclass(frozen=True)
class ExperimentSpec:
    seeds: tuple[int, ...]
    node_counts: tuple[int, ...]
    density_per_km2: float = 45.0
    redundancies: tuple[int, ...] = (1, 2)
    mimo_layers: tuple[int, ...] = (1, 2)
    limits: SolveLimits = field(default_factory=SolveLimits)
    lambda_mbps: float = 1000.0
    radius_m: float = 100.0
    resolution_m: float = 1.0
    max_depth: int = 3
    max_out_degree: int = 4
    airtime_per_node: bool = False
    mcs_table_path: str | None = None

    def __post_init__(self):
        if not self.seeds or not self.node_counts:
            raise ParameterError("seed and node count lists must be nonempty")
        if not self.redundancies or not self.mimo_layers:
            raise ParameterError("redundancy and MIMO lists must be nonempty")

    def configs(self) -> list[tuple[int, int, int, int]]:
        return sorted(
            (seed, n, r, lam)
            for seed in self.seeds
            for n in self.node_counts
            for r in self.redundancies
            for lam in self.mimo_layers
        )


def _run_config(args) -> dict:
    spec, (seed, n, r, mimo) = args
    table = load_mcs_table(spec.mcs_table_path)
    radio = RadioParams(mimo_layers=mimo)
    graph, _removed = build_synthetic_scenario(
        n,
        spec.density_per_km2,
        seed,
        radius_m=spec.radius_m,
        lambda_mbps=spec.lambda_mbps,
        resolution_m=spec.resolution_m,
        params=radio,
        table=table,
    )
    row = {
        "seed": seed,
        "n": n,
        "density": spec.density_per_km2,
        "R": r,
        "mimo_layers": mimo,
    }
    if not graph.nodes:
        row.update(rho=0.0, objective=0, gap=0.0, status="optimal", solve_time_s=0.0)
        return row
    params = PlanParams(
        max_depth=spec.max_depth,
        max_out_degree=spec.max_out_degree,
        redundancy=r,
        flow_enabled=True,
        airtime_per_node=spec.airtime_per_node,
    )
    model = build_model(graph, params)
    solution = solve_exact(model, spec.limits)
    rho = (
        solution.objective / len(graph.nodes)
        if math.isfinite(solution.objective)
        else math.inf
    )
    row.update(
        rho=rho,
        objective=solution.objective,
        gap=solution.gap,
        status=solution.status,
        solve_time_s=solution.solve_time_s,
    )
    return row


def run_experiment(spec: ExperimentSpec, jobs: int = 1) -> list[dict]:
    """Run every (seed, n, R, mimo) combination; rows come back in a fixed
    sorted order regardless of how the batch was parallelized."""
    work = [(spec, cfg) for cfg in spec.configs()]
    if jobs <= 1:
        rows = [_run_config(w) for w in work]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_run_config, work))
    return sorted(rows, key=lambda r: (r["seed"], r["n"], r["R"], r["mimo_layers"]))


def _fmt(value) -> str:
    if isinstance(value, float):
        if math.isinf(value):
            return "inf"
        return f"{value:.4f}"
    return str(value)


def write_experiment_csv(rows: list[dict], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(EXPERIMENT_CSV_HEADER)
        for row in rows:
            writer.writerow([_fmt(row[col]) for col in EXPERIMENT_CSV_HEADER])
