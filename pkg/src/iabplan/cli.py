"""Command-line entry point: reproducible file-based planning workflows.

Exit codes: 0 success, 2 parameter or input parse error, 3 infeasible or
no solution within limits, 4 validation failure, 5 external solver error.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .channel import RadioParams, build_synthetic_scenario, load_mcs_table
from .errors import (
    ExternalSolverError,
    IabPlanError,
    SolutionValidationError,
)
from .experiments import (
    EXPERIMENT_CSV_VERSION,
    ExperimentSpec,
    run_experiment,
    write_experiment_csv,
)
from .model import PlanParams, build_model, fix_donors
from .mps import export_mps, run_external
from .resilience import (
    FAULTS_SCHEMA_VERSION,
    extract_multitree,
    load_fault_schedule,
    simulate_trace,
    write_event_csv,
)
from .scenario import SCENARIO_SCHEMA_VERSION, load_scenario, save_scenario
from .solve import (
    SOLUTION_SCHEMA_VERSION,
    STATUS_FEASIBLE_GAP,
    STATUS_OPTIMAL,
    SolveLimits,
    solution_from_dict,
    solution_to_dict,
    solve_exact,
)
from .validate import validate_solution

EXIT_OK = 0
EXIT_PARAM = 2
EXIT_INFEASIBLE = 3
EXIT_INVALID = 4
EXIT_EXTERNAL = 5


def _version_string() -> str:
    return (
        f"iabplan {__version__} "
        f"(scenario-schema {SCENARIO_SCHEMA_VERSION}, "
        f"solution-schema {SOLUTION_SCHEMA_VERSION}, "
        f"faults-schema {FAULTS_SCHEMA_VERSION}, "
        f"experiment-csv {EXPERIMENT_CSV_VERSION})"
    )


def _onoff(value: str) -> bool:
    if value not in ("on", "off"):
        raise argparse.ArgumentTypeError("expected 'on' or 'off'")
    return value == "on"


def _int_list(value: str) -> tuple[int, ...]:
    """Parse '1,2,5' or '1-30' (inclusive range) into a tuple of ints."""
    out: list[int] = []
    for part in value.split(","):
        part = part.strip()
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError("empty list")
    return tuple(out)


def _radio_from_args(args) -> RadioParams:
    kwargs = {}
    if args.radio_json:
        with open(args.radio_json, "r", encoding="utf-8") as fh:
            kwargs.update(json.load(fh))
    for flag, key in [
        ("fc_ghz", "fc_ghz"),
        ("bandwidth_mhz", "bandwidth_mhz"),
        ("mimo_layers", "mimo_layers"),
        ("tx_power_dbm", "tx_power_dbm"),
        ("max_bler", "max_bler"),
    ]:
        val = getattr(args, flag)
        if val is not None:
            kwargs[key] = val
    if "antenna_elems" in kwargs:
        kwargs["antenna_elems"] = tuple(kwargs["antenna_elems"])
    return RadioParams(**kwargs)


def _params_from_args(args) -> PlanParams:
    return PlanParams(
        max_depth=args.depth,
        max_out_degree=args.out_degree,
        redundancy=args.R,
        donor_egress_mbps=args.donor_cap,
        flow_enabled=args.flow,
        airtime_per_node=args.airtime_per_node,
    )


def _params_from_dict(doc: dict) -> PlanParams:
    return PlanParams(
        max_depth=doc["max_depth"],
        max_out_degree=doc["max_out_degree"],
        redundancy=doc["redundancy"],
        donor_egress_mbps=doc.get("donor_egress_mbps"),
        flow_enabled=doc.get("flow_enabled", True),
        airtime_per_node=doc.get("airtime_per_node", False),
    )


def cmd_generate(args) -> int:
    radio = _radio_from_args(args)
    table = load_mcs_table(args.mcs_table)
    graph, removed = build_synthetic_scenario(
        args.n,
        args.density,
        args.seed,
        radius_m=args.radius_m,
        lambda_mbps=args.lambda_mbps,
        resolution_m=args.resolution_m,
        height_m=args.height_m,
        params=radio,
        table=table,
    )
    save_scenario(graph, args.out)
    print(
        f"generated {len(graph.nodes)} node(s), {len(graph.edges)} edge(s)"
        + (f", removed {len(removed)} out-of-range" if removed else "")
    )
    return EXIT_OK


def cmd_plan(args) -> int:
    graph = load_scenario(args.input, coverage_radius_m=args.radius_m)
    params = _params_from_args(args)
    model = build_model(graph, params)
    pinned = [n.id for n in graph.nodes if n.fixed_donor]
    if pinned:
        model = fix_donors(model, pinned)
    if args.mps:
        export_mps(model, args.mps)
    limits = SolveLimits(
        time_limit_s=args.time_limit,
        gap_target=args.gap_target,
        seed=args.seed,
        node_limit=args.node_limit,
    )
    if args.backend == "external":
        if not args.solver_cmd:
            print("--backend external requires --solver-cmd", file=sys.stderr)
            return EXIT_PARAM
        solution = run_external(model, args.solver_cmd, limits)
    else:
        solution = solve_exact(model, limits, engine=args.engine)
    if solution.status not in (STATUS_OPTIMAL, STATUS_FEASIBLE_GAP):
        print(f"no solution: {solution.status}", file=sys.stderr)
        return EXIT_INFEASIBLE
    report = validate_solution(graph, params, solution)
    if not report.passed:
        print(report.summary(), file=sys.stderr)
        return EXIT_INVALID
    with open(args.out, "w", encoding="utf-8") as fh:
        json.dump(solution_to_dict(solution, params), fh, indent=2)
        fh.write("\n")
    print(
        f"{solution.status}: {solution.objective} donor(s) of {len(graph.nodes)} "
        f"node(s), gap {solution.gap:.4f}"
    )
    return EXIT_OK


def _load_solution_and_params(args):
    graph = load_scenario(args.input)
    with open(args.solution, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    solution = solution_from_dict(doc)
    params = _params_from_dict(doc["params"])
    return graph, solution, params


def cmd_validate(args) -> int:
    graph, solution, params = _load_solution_and_params(args)
    report = validate_solution(graph, params, solution)
    print(report.summary())
    return EXIT_OK if report.passed else EXIT_INVALID


def cmd_simulate(args) -> int:
    graph, solution, params = _load_solution_and_params(args)
    topology = extract_multitree(solution, graph, params)
    faults = load_fault_schedule(args.faults) if args.faults else []
    rows = simulate_trace(
        topology,
        faults,
        hop_latency_ms=args.hop_latency_ms,
        switch_ms=args.switch_ms,
        ticks=args.ticks,
    )
    write_event_csv(rows, args.out)
    lost = sorted({r.node for r in rows if r.state == "lost"})
    print(
        f"simulated {rows[-1].tick + 1 if rows else 0} tick(s), "
        f"{len(faults)} fault(s), {len(lost)} unrecoverable node(s)"
    )
    return EXIT_OK


def cmd_experiment(args) -> int:
    spec = ExperimentSpec(
        seeds=args.seeds,
        node_counts=args.n,
        density_per_km2=args.density,
        redundancies=args.R,
        mimo_layers=args.mimo_layers,
        limits=SolveLimits(
            time_limit_s=args.time_limit,
            gap_target=args.gap_target,
            node_limit=args.node_limit,
        ),
        lambda_mbps=args.lambda_mbps,
        radius_m=args.radius_m,
        resolution_m=args.resolution_m,
        max_depth=args.depth,
        max_out_degree=args.out_degree,
        airtime_per_node=args.airtime_per_node,
        mcs_table_path=args.mcs_table,
    )
    rows = run_experiment(spec, jobs=args.jobs)
    write_experiment_csv(rows, args.out)
    print(f"wrote {len(rows)} row(s) to {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="iabplan",
        description="Plan and stress wireless backhaul topologies.",
    )
    parser.add_argument("--version", action="version", version=_version_string())
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="create a synthetic scenario JSON")
    gen.add_argument("--n", type=int, required=True)
    gen.add_argument("--density", type=float, required=True, help="gNB per km^2")
    gen.add_argument("--seed", type=int, required=True)
    gen.add_argument("--lambda-mbps", dest="lambda_mbps", type=float, default=1000.0)
    gen.add_argument("--radius-m", type=float, default=100.0)
    gen.add_argument("--resolution-m", type=float, default=1.0)
    gen.add_argument("--height-m", type=float, default=10.0)
    gen.add_argument("--fc-ghz", type=float, default=None)
    gen.add_argument("--bandwidth-mhz", type=float, default=None)
    gen.add_argument("--mimo-layers", type=int, default=None)
    gen.add_argument("--tx-power-dbm", type=float, default=None)
    gen.add_argument("--max-bler", type=float, default=None)
    gen.add_argument("--radio-json", default=None, help="full RadioParams as JSON")
    gen.add_argument("--mcs-table", default=None, help="MCS table CSV path")
    gen.add_argument("--out", required=True)
    gen.set_defaults(func=cmd_generate)

    plan = sub.add_parser("plan", help="solve the donor-minimizing plan")
    plan.add_argument("--input", required=True)
    plan.add_argument("--R", type=int, default=1)
    plan.add_argument("--depth", type=int, default=3)
    plan.add_argument("--out-degree", dest="out_degree", type=int, default=4)
    plan.add_argument("--flow", type=_onoff, default=True)
    plan.add_argument("--airtime-per-node", type=_onoff, default=False)
    plan.add_argument("--donor-cap", type=float, default=None)
    plan.add_argument("--backend", choices=["native", "external"], default="native")
    plan.add_argument("--engine", choices=["auto", "bb", "milp"], default="auto")
    plan.add_argument("--solver-cmd", default=None)
    plan.add_argument("--time-limit", type=float, default=300.0)
    plan.add_argument("--gap-target", type=float, default=0.0)
    plan.add_argument("--node-limit", type=int, default=None,
                      help="deterministic search-node budget")
    plan.add_argument("--seed", type=int, default=0)
    plan.add_argument("--radius-m", type=float, default=None,
                      help="coverage radius for demands missing from the input")
    plan.add_argument("--mps", default=None, help="also export the model as MPS")
    plan.add_argument("--out", required=True)
    plan.set_defaults(func=cmd_plan)

    val = sub.add_parser("validate", help="re-check a solution file")
    val.add_argument("--input", required=True)
    val.add_argument("--solution", required=True)
    val.set_defaults(func=cmd_validate)

    sim = sub.add_parser("simulate", help="replay link faults on a plan")
    sim.add_argument("--input", required=True)
    sim.add_argument("--solution", required=True)
    sim.add_argument("--faults", default=None, help="fault schedule JSON")
    sim.add_argument("--hop-latency-ms", type=float, default=5.0)
    sim.add_argument("--switch-ms", type=float, default=0.0)
    sim.add_argument("--ticks", type=int, default=None)
    sim.add_argument("--out", required=True)
    sim.set_defaults(func=cmd_simulate)

    exp = sub.add_parser("experiment", help="batch sweep to a results CSV")
    exp.add_argument("--seeds", type=_int_list, required=True, help="e.g. 1-30 or 1,2,5")
    exp.add_argument("--n", type=_int_list, required=True)
    exp.add_argument("--density", type=float, default=45.0)
    exp.add_argument("--R", type=_int_list, default=(1, 2))
    exp.add_argument("--mimo-layers", type=_int_list, default=(1, 2))
    exp.add_argument("--lambda-mbps", dest="lambda_mbps", type=float, default=1000.0)
    exp.add_argument("--radius-m", type=float, default=100.0)
    exp.add_argument("--resolution-m", type=float, default=1.0)
    exp.add_argument("--depth", type=int, default=3)
    exp.add_argument("--out-degree", dest="out_degree", type=int, default=4)
    exp.add_argument("--airtime-per-node", type=_onoff, default=False)
    exp.add_argument("--time-limit", type=float, default=60.0)
    exp.add_argument("--gap-target", type=float, default=0.0)
    exp.add_argument("--node-limit", type=int, default=None,
                     help="deterministic search-node budget per instance")
    exp.add_argument("--mcs-table", default=None)
    exp.add_argument("--jobs", type=int, default=1)
    exp.add_argument("--out", required=True)
    exp.set_defaults(func=cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except SolutionValidationError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INVALID
    except ExternalSolverError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_EXTERNAL
    except (IabPlanError, OSError, json.JSONDecodeError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARAM


if __name__ == "__main__":
    sys.exit(main())
