"""iabplan: plan minimum-donor wireless backhaul multitrees and verify that
the redundant layers survive single-link failures."""

__version__ = "0.1.0"

from .channel import (
    McsRow,
    McsTable,
    RadioParams,
    build_synthetic_scenario,
    link_capacity_mbps,
    link_snr_db,
    load_mcs_table,
    los_probability,
    pathloss_db,
    populate_edges,
    select_mcs,
)
from .errors import (
    ConfigurationError,
    ExternalSolverError,
    IabPlanError,
    McsTableError,
    MpsFormatError,
    ParameterError,
    ScenarioFormatError,
    SolutionParseError,
    SolutionValidationError,
    SolverCommandError,
    UnvalidatedSolutionError,
)
from .experiments import ExperimentSpec, run_experiment, write_experiment_csv
from .model import (
    MilpModel,
    PlanParams,
    build_model,
    fix_donors,
    weighted_objective,
)
from .mps import export_mps, parse_solution_file, read_mps, run_external
from .oracle import brute_force_min_donors, feasible_donor_set
from .resilience import (
    FaultEvent,
    MultiTreeTopology,
    ReconfigPlan,
    RecoveryReport,
    extract_multitree,
    inject_failure,
    load_fault_schedule,
    reconfigure,
    simulate_trace,
    verify_recovery,
    write_event_csv,
)
from .scenario import (
    CandidateEdge,
    CoverageGrid,
    Gnb,
    ScenarioGraph,
    assign_demands,
    estimate_demand,
    generate_synthetic,
    load_scenario,
    prune_edges,
    remove_isolated,
    sample_coverage,
    save_scenario,
)
from .solve import (
    STATUS_FEASIBLE_GAP,
    STATUS_INFEASIBLE,
    STATUS_OPTIMAL,
    STATUS_TIMEOUT,
    Solution,
    SolveLimits,
    donor_ratio,
    project_solution,
    solution_from_dict,
    solution_to_dict,
    solve_exact,
)
from .validate import ValidationReport, validate_solution

__all__ = [name for name in dir() if not name.startswith("_")]
