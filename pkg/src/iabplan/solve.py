"""MILP solving: a native branch-and-bound backend plus a HiGHS-based one,
both behind the same contract, with solution extraction helpers.

The native backend branches on the most fractional binary (ties broken by
lowest variable index), dives depth-first, and falls back to best-bound
node selection once a dive ends.  LP relaxations are delegated to the
HiGHS simplex shipped with scipy.  Both engines are deterministic for
identical inputs; returned solutions always carry a certified optimality
gap.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.optimize as sopt
import scipy.sparse as sp

from .errors import IabPlanError, ParameterError
from .model import MilpModel
from .scenario import ScenarioGraph

STATUS_OPTIMAL = "optimal"
STATUS_FEASIBLE_GAP = "feasible-gap"
STATUS_INFEASIBLE = "infeasible"
STATUS_TIMEOUT = "timeout"

#: Binaries at or below this count route to the native branch-and-bound
#: under engine="auto"; larger models go to the HiGHS backend.  The cutoff
#: is calibrated so the native backend stays in sub-10-second territory.
NATIVE_AUTO_MAX_BINARIES = 90

_INT_TOL = 1e-6


@dataclass(frozen=True)
class SolveLimits:
    """Stopping rules: wall-clock, relative gap, and an optional search-node
    budget.  The node budget makes time-limited sweeps reproducible across
    machines of different speeds; whichever limit trips first wins."""

    time_limit_s: float = 300.0
    gap_target: float = 0.0
    threads: int = 1
    seed: int = 0
    node_limit: int | None = None

    def __post_init__(self):
        if self.time_limit_s <= 0:
            raise ParameterError("time_limit_s must be positive")
        if self.gap_target < 0:
            raise ParameterError("gap_target must be non-negative")
        if self.node_limit is not None and self.node_limit < 1:
            raise ParameterError("node_limit must be >= 1 when set")


@dataclass(frozen=True)
class Solution:
    """A planner result: donor set, per-layer trees, flows, and airtime.

    ``gap`` is an upper bound on the relative distance to the optimum; it is
    zero exactly when ``status`` is optimal.
    """

    donor_set: frozenset[int]
    active_edges: dict[int, tuple]
    depths: tuple
    flows: dict
    airtime: dict
    objective: float
    gap: float
    status: str
    solve_time_s: float = 0.0
    engine: str = ""


def _assemble(model: MilpModel):
    n = len(model.variables)
    c = np.zeros(n)
    for idx, coef in model.objective:
        c[idx] += coef
    ub_data, ub_rows, ub_cols, b_ub = [], [], [], []
    eq_data, eq_rows, eq_cols, b_eq = [], [], [], []
    for con in model.constraints:
        if con.sense == "=":
            row = len(b_eq)
            for idx, coef in con.coeffs:
                eq_rows.append(row)
                eq_cols.append(idx)
                eq_data.append(coef)
            b_eq.append(con.rhs)
        else:
            sign = 1.0 if con.sense == "<=" else -1.0
            row = len(b_ub)
            for idx, coef in con.coeffs:
                ub_rows.append(row)
                ub_cols.append(idx)
                ub_data.append(sign * coef)
            b_ub.append(sign * con.rhs)
    A_ub = sp.csr_matrix((ub_data, (ub_rows, ub_cols)), shape=(len(b_ub), n))
    A_eq = sp.csr_matrix((eq_data, (eq_rows, eq_cols)), shape=(len(b_eq), n))
    lb = np.array([v.lb for v in model.variables])
    ub = np.array([v.ub for v in model.variables])
    integrality = np.array([v.is_integer for v in model.variables])
    return c, A_ub, np.array(b_ub), A_eq, np.array(b_eq), lb, ub, integrality


def _lp(c, A_ub, b_ub, A_eq, b_eq, lb, ub):
    res = sopt.linprog(
        c,
        A_ub=A_ub if A_ub.shape[0] else None,
        b_ub=b_ub if A_ub.shape[0] else None,
        A_eq=A_eq if A_eq.shape[0] else None,
        b_eq=b_eq if A_eq.shape[0] else None,
        bounds=np.column_stack([lb, ub]),
        method="highs",
    )
    if res.status in (0, 2):
        return res
    raise IabPlanError(f"LP relaxation failed with solver status {res.status}")


def _all_donors_assignment(model: MilpModel, mats) -> np.ndarray | None:
    """The always-feasible incumbent: every node a donor rooted in layer 1."""
    c, A_ub, b_ub, A_eq, b_eq, lb, ub, integrality = mats
    x = np.zeros(len(model.variables))
    for i in model.graph.node_ids():
        x[model.var_index(("u", i, 0, 1))] = 1.0
    tol = 1e-9
    if A_ub.shape[0] and np.any(A_ub @ x > b_ub + tol):
        return None
    if A_eq.shape[0] and np.any(np.abs(A_eq @ x - b_eq) > tol):
        return None
    return x


def _polish(model, mats, x) -> np.ndarray:
    """Re-solve the LP with binaries pinned to their rounded values so the
    continuous part is cleanly feasible."""
    c, A_ub, b_ub, A_eq, b_eq, lb, ub, integrality = mats
    if not integrality.any():
        return x
    lb2, ub2 = lb.copy(), ub.copy()
    rounded = np.round(x[integrality])
    lb2[integrality] = rounded
    ub2[integrality] = rounded
    res = _lp(c, A_ub, b_ub, A_eq, b_eq, lb2, ub2)
    if res.status == 0:
        return res.x
    return x


def _extract(model: MilpModel, x, objective, gap, status, engine, elapsed) -> Solution:
    donor_set = set()
    active: dict[int, list] = {k: [] for k in range(1, model.params.redundancy + 1)}
    depths = []
    flows = {}
    airtime = {}
    for var in model.variables:
        kind = var.kind
        v = x[var.index]
        if kind[0] == "u" and v > 0.5:
            _, i, l, k = kind
            depths.append((i, l, k))
            if l == 0:
                donor_set.add(i)
        elif kind[0] == "P" and v > 0.5:
            _, i, j, k = kind
            active[k].append((i, j))
        elif kind[0] == "f" and v > 1e-9:
            _, i, j, h, k = kind
            flows[(i, j, h, k)] = float(v)
        elif kind[0] == "a" and v > 1e-9:
            _, i, j = kind
            airtime[(i, j)] = float(min(v, 1.0))
    obj = float(objective)
    if abs(obj - round(obj)) < 1e-6:
        obj = int(round(obj))
    return Solution(
        donor_set=frozenset(donor_set),
        active_edges={k: tuple(sorted(v)) for k, v in active.items()},
        depths=tuple(sorted(depths)),
        flows=flows,
        airtime=airtime,
        objective=obj,
        gap=float(gap),
        status=status,
        solve_time_s=elapsed,
        engine=engine,
    )


def _empty_model_solution(engine: str) -> Solution:
    return Solution(
        donor_set=frozenset(),
        active_edges={},
        depths=(),
        flows={},
        airtime={},
        objective=0,
        gap=0.0,
        status=STATUS_OPTIMAL,
        engine=engine,
    )


def solve_exact(
    model: MilpModel, limits: SolveLimits | None = None, engine: str = "auto"
) -> Solution:
    """Solve a planner model to optimality (or to the given limits).

    ``engine`` selects the backend: ``"bb"`` is the native branch-and-bound,
    ``"milp"`` the HiGHS branch-and-cut behind scipy, and ``"auto"`` routes
    small models to the native backend and everything else to HiGHS.  The
    incumbent and certified gap contract is identical for both.
    """
    limits = limits or SolveLimits()
    if engine not in ("auto", "bb", "milp"):
        raise ParameterError(f"unknown engine {engine!r}")
    if not model.variables:
        return _empty_model_solution(engine)
    if engine == "auto":
        engine = "bb" if model.n_binary <= NATIVE_AUTO_MAX_BINARIES else "milp"
    start = time.monotonic()
    mats = _assemble(model)
    if engine == "bb":
        return _solve_branch_and_bound(model, mats, limits, start)
    return _solve_highs(model, mats, limits, start)


def _solve_highs(model, mats, limits, start) -> Solution:
    c, A_ub, b_ub, A_eq, b_eq, lb, ub, integrality = mats
    constraints = []
    if A_ub.shape[0]:
        constraints.append(sopt.LinearConstraint(A_ub, -np.inf, b_ub))
    if A_eq.shape[0]:
        constraints.append(sopt.LinearConstraint(A_eq, b_eq, b_eq))
    options = {
        "time_limit": limits.time_limit_s,
        "presolve": True,
        "mip_rel_gap": limits.gap_target,
    }
    if limits.node_limit is not None:
        options["node_limit"] = limits.node_limit
    res = sopt.milp(
        c=c,
        constraints=constraints,
        integrality=integrality.astype(int),
        bounds=sopt.Bounds(lb, ub),
        options=options,
    )
    elapsed = time.monotonic() - start
    if res.status == 2:
        return _infeasible_solution(elapsed, "milp")
    if res.x is None:
        return _timeout_solution(elapsed, "milp")
    x = _polish(model, mats, res.x)
    objective = float(c @ x)
    if res.status == 0 and limits.gap_target == 0.0:
        gap, status = 0.0, STATUS_OPTIMAL
    else:
        dual = res.mip_dual_bound if res.mip_dual_bound is not None else -np.inf
        gap = _relative_gap(objective, dual)
        status = STATUS_OPTIMAL if gap == 0.0 else STATUS_FEASIBLE_GAP
    return _extract(model, x, objective, gap, status, "milp", elapsed)


def _relative_gap(objective: float, lower_bound: float) -> float:
    if not math.isfinite(lower_bound):
        return math.inf
    if lower_bound >= objective - 1e-9:
        return 0.0
    denom = max(abs(objective), 1e-12)
    return max(0.0, (objective - lower_bound) / denom)


def _infeasible_solution(elapsed, engine) -> Solution:
    return Solution(
        donor_set=frozenset(),
        active_edges={},
        depths=(),
        flows={},
        airtime={},
        objective=math.inf,
        gap=math.inf,
        status=STATUS_INFEASIBLE,
        solve_time_s=elapsed,
        engine=engine,
    )


def _timeout_solution(elapsed, engine) -> Solution:
    return Solution(
        donor_set=frozenset(),
        active_edges={},
        depths=(),
        flows={},
        airtime={},
        objective=math.inf,
        gap=math.inf,
        status=STATUS_TIMEOUT,
        solve_time_s=elapsed,
        engine=engine,
    )


def _solve_branch_and_bound(model, mats, limits, start) -> Solution:
    c, A_ub, b_ub, A_eq, b_eq, lb, ub, integrality = mats
    bin_idx = np.flatnonzero(integrality)
    integral_costs = bool(np.all(np.abs(c - np.round(c)) < 1e-9))

    incumbent_x = _all_donors_assignment(model, mats)
    incumbent_obj = float(c @ incumbent_x) if incumbent_x is not None else math.inf

    def lower_cut(bound):
        # With an all-integer objective the optimum in a subtree is at least
        # the rounded-up LP bound, which prunes much earlier.
        return math.ceil(bound - 1e-6) if integral_costs else bound

    heap: list[tuple[float, int, dict]] = []
    seq = 0
    current: tuple[float, dict] | None = (-math.inf, {})
    timed_out = False
    expanded = 0

    def next_best():
        if not heap:
            return None
        bound, _, fixes = heapq.heappop(heap)
        return bound, fixes

    while current is not None:
        if time.monotonic() - start > limits.time_limit_s:
            timed_out = True
            break
        if limits.node_limit is not None and expanded >= limits.node_limit:
            timed_out = True
            break
        expanded += 1
        if limits.gap_target > 0.0 and math.isfinite(incumbent_obj):
            bounds_now = [b for b, _, _ in heap] + [current[0]]
            lb_now = min(bounds_now)
            if _relative_gap(incumbent_obj, min(lb_now, incumbent_obj)) <= limits.gap_target:
                break
        _, fixes = current
        lbn, ubn = lb.copy(), ub.copy()
        for idx, val in fixes.items():
            lbn[idx] = val
            ubn[idx] = val
        res = _lp(c, A_ub, b_ub, A_eq, b_eq, lbn, ubn)
        if res.status == 2 or lower_cut(res.fun) >= incumbent_obj - 1e-9:
            current = next_best()
            continue
        x = res.x
        frac = np.abs(x[bin_idx] - np.round(x[bin_idx]))
        if frac.size == 0 or frac.max() <= _INT_TOL:
            if res.fun < incumbent_obj - 1e-9:
                incumbent_obj = float(res.fun)
                incumbent_x = x.copy()
                incumbent_x[bin_idx] = np.round(x[bin_idx])
            current = next_best()
            continue
        # Most fractional binary, ties broken by lowest variable index.
        dist = np.minimum(frac, 1.0 - frac)
        pick = int(bin_idx[int(np.argmax(dist))])
        # Dive on the 1-branch first: activating a donor or an edge drives
        # the relaxation toward integer-feasible assignments much faster
        # than the 0-branch, which mostly defers the decision.
        child_first = dict(fixes)
        child_first[pick] = 1.0
        child_other = dict(fixes)
        child_other[pick] = 0.0
        heapq.heappush(heap, (float(res.fun), seq, child_other))
        seq += 1
        current = (float(res.fun), child_first)

    open_bounds = [b for b, _, _ in heap]
    if current is not None:
        open_bounds.append(current[0] if math.isfinite(current[0]) else -math.inf)
    elapsed = time.monotonic() - start

    if incumbent_x is None:
        if timed_out:
            return _timeout_solution(elapsed, "bb")
        return _infeasible_solution(elapsed, "bb")

    if open_bounds:
        lower = min(open_bounds)
        gap = _relative_gap(incumbent_obj, min(lower, incumbent_obj))
    else:
        gap = 0.0
    status = STATUS_OPTIMAL if gap == 0.0 else STATUS_FEASIBLE_GAP
    x = _polish(model, mats, incumbent_x)
    return _extract(model, x, float(c @ x), gap, status, "bb", elapsed)


def project_solution(solution: Solution, keep_layer: int = 1) -> Solution:
    """Restrict a multi-layer solution to one layer, renumbered as layer 1.

    Every donor becomes a layer-1 root; non-donor depth assignments, active
    edges, flows, and airtime of the kept layer carry over unchanged.  The
    result is a valid single-layer solution for the same graph.
    """
    depths = [(d, 0, 1) for d in sorted(solution.donor_set)]
    for (node, lvl, k) in solution.depths:
        if k == keep_layer and node not in solution.donor_set:
            depths.append((node, lvl, 1))
    kept_edges = tuple(solution.active_edges.get(keep_layer, ()))
    flows = {
        (i, j, h, 1): v
        for (i, j, h, k), v in solution.flows.items()
        if k == keep_layer
    }
    kept_set = set(kept_edges)
    airtime = {e: v for e, v in solution.airtime.items() if e in kept_set}
    return replace(
        solution,
        active_edges={1: kept_edges},
        depths=tuple(sorted(depths)),
        flows=flows,
        airtime=airtime,
        objective=len(solution.donor_set),
    )


def donor_ratio(solution: Solution, graph: ScenarioGraph) -> float:
    """Fraction of the network that must be donors."""
    if not graph.nodes:
        return 0.0
    return solution.objective / len(graph.nodes)


SOLUTION_SCHEMA_VERSION = 1


def solution_to_dict(solution: Solution, params=None) -> dict:
    doc = {
        "schema_version": SOLUTION_SCHEMA_VERSION,
        "status": solution.status,
        "objective": solution.objective,
        "gap": solution.gap,
        "engine": solution.engine,
        "solve_time_s": solution.solve_time_s,
        "donor_set": sorted(solution.donor_set),
        "depths": [list(d) for d in solution.depths],
        "active_edges": {
            str(k): [list(e) for e in edges]
            for k, edges in sorted(solution.active_edges.items())
        },
        "flows": [[i, j, h, k, v] for (i, j, h, k), v in sorted(solution.flows.items())],
        "airtime": [[i, j, v] for (i, j), v in sorted(solution.airtime.items())],
    }
    if params is not None:
        doc["params"] = {
            "max_depth": params.max_depth,
            "max_out_degree": params.max_out_degree,
            "redundancy": params.redundancy,
            "donor_egress_mbps": params.donor_egress_mbps,
            "flow_enabled": params.flow_enabled,
            "airtime_per_node": params.airtime_per_node,
        }
    return doc


def solution_from_dict(doc: dict) -> Solution:
    return Solution(
        donor_set=frozenset(doc["donor_set"]),
        active_edges={
            int(k): tuple(tuple(e) for e in edges)
            for k, edges in doc.get("active_edges", {}).items()
        },
        depths=tuple(tuple(d) for d in doc.get("depths", [])),
        flows={
            (i, j, h, k): v for i, j, h, k, v in doc.get("flows", [])
        },
        airtime={(i, j): v for i, j, v in doc.get("airtime", [])},
        objective=doc["objective"],
        gap=doc.get("gap", 0.0),
        status=doc["status"],
        solve_time_s=doc.get("solve_time_s", 0.0),
        engine=doc.get("engine", ""),
    )
