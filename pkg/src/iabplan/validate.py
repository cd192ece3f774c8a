"""Independent solution checker.

Every planner constraint is re-derived here from the deployment graph and
the planning parameters alone; the checker never looks at a MilpModel, so
a bug in model construction cannot certify its own output.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import PlanParams
from .scenario import ScenarioGraph

#: Absolute tolerance for constraint residuals.
TOL_ABS = 1e-6
#: Relative tolerance for flow comparisons.
TOL_REL = 1e-6


@dataclass(frozen=True)
class CheckFailure:
    check: str
    indices: tuple
    message: str


@dataclass(frozen=True)
class ValidationReport:
    passed: bool
    failures: tuple[CheckFailure, ...]
    checks_run: tuple[str, ...]

    def failed_checks(self) -> set[str]:
        return {f.check for f in self.failures}

    def summary(self) -> str:
        if self.passed:
            return f"all {len(self.checks_run)} checks passed"
        lines = [f"{len(self.failures)} failure(s):"]
        for f in self.failures:
            lines.append(f"  {f.check}{list(f.indices)}: {f.message}")
        return "\n".join(lines)


def _leq(lhs: float, rhs: float) -> bool:
    return lhs <= rhs + TOL_ABS + TOL_REL * max(abs(lhs), abs(rhs))


def validate_solution(graph: ScenarioGraph, params: PlanParams, solution) -> ValidationReport:
    """Check a solution against every planner constraint, reporting each
    violation with the offending indices."""
    failures: list[CheckFailure] = []

    def fail(check, indices, message):
        failures.append(CheckFailure(check=check, indices=tuple(indices), message=message))

    nodes = set(graph.node_ids())
    demand = graph.demands()
    edge_caps = {(e.src, e.dst): e.capacity_mbps for e in graph.edges}
    D = params.max_depth
    R = params.redundancy
    layers = list(range(1, R + 1))
    donors = set(solution.donor_set)

    egress_cap = params.donor_egress_mbps
    if egress_cap is None:
        egress_cap = sum(demand.values()) or 1.0

    checks = [
        "tree-membership",
        "single-root",
        "in-degree",
        "depth-consistency",
        "out-degree",
        "edge-existence",
        "edge-disjointness",
    ]

    # Depth assignment per (node, layer).
    level: dict[tuple[int, int], int] = {}
    for (node, lvl, k) in solution.depths:
        if node not in nodes:
            fail("tree-membership", (node,), "depth entry for unknown node")
            continue
        if k not in layers:
            fail("tree-membership", (node, k), f"layer {k} out of range")
            continue
        if not 0 <= lvl <= D:
            fail("tree-membership", (node, lvl, k), f"depth {lvl} outside 0..{D}")
            continue
        if (node, k) in level:
            fail("tree-membership", (node, k), "multiple depth entries in one layer")
            continue
        level[node, k] = lvl

    root_layers = {i: [k for k in layers if level.get((i, k)) == 0] for i in nodes}
    for i in nodes:
        if i in donors:
            if len(root_layers[i]) != 1:
                fail("single-root", (i,), f"donor roots {len(root_layers[i])} trees, wants 1")
            extra = [k for k in layers if (i, k) in level and level[i, k] > 0]
            if extra:
                fail("tree-membership", (i,), f"donor also appears at depth > 0 in {extra}")
        else:
            if root_layers[i]:
                fail("single-root", (i,), "non-donor at depth 0")
            missing = [k for k in layers if (i, k) not in level]
            if missing:
                fail("tree-membership", (i,), f"no depth assignment in layer(s) {missing}")

    # Active edge structure.
    parents: dict[tuple[int, int], list[int]] = {}
    children_count: dict[tuple[int, int], int] = {}
    pair_uses: dict[tuple[int, int], int] = {}
    assigned: dict[tuple[int, int], set[int]] = {}
    for k in layers:
        for (i, j) in solution.active_edges.get(k, ()):
            if (i, j) not in edge_caps:
                fail("edge-existence", (i, j, k), "active edge not in candidate set")
                continue
            assigned.setdefault((i, j), set()).add(k)
            parents.setdefault((j, k), []).append(i)
            children_count[i, k] = children_count.get((i, k), 0) + 1
            pair = (min(i, j), max(i, j))
            pair_uses[pair] = pair_uses.get(pair, 0) + 1
            li, lj = level.get((i, k)), level.get((j, k))
            if li is None or lj is None or lj != li + 1:
                fail(
                    "depth-consistency",
                    (i, j, k),
                    f"edge depths {li} -> {lj}, expected child = parent + 1",
                )

    for pair, uses in pair_uses.items():
        if uses > 1:
            fail("edge-disjointness", pair, f"link used {uses} times across layers/directions")

    for i in nodes:
        for k in layers:
            n_in = len(parents.get((i, k), []))
            if i in donors:
                if n_in != 0:
                    fail("in-degree", (i, k), f"donor has {n_in} incoming edges")
            elif n_in != 1:
                fail("in-degree", (i, k), f"non-donor has {n_in} incoming edges, wants 1")
            n_out = children_count.get((i, k), 0)
            if n_out > params.max_out_degree - 1:
                fail(
                    "out-degree",
                    (i, k),
                    f"{n_out} children exceeds bound {params.max_out_degree - 1}",
                )

    if params.flow_enabled:
        checks += [
            "no-self-flow",
            "flow-conservation",
            "demand-satisfaction",
            "airtime-range",
            "airtime-gating",
            "link-capacity",
            "node-ingress",
            "tree-flow-gating",
        ]
        flows = dict(solution.flows)
        airtime = dict(solution.airtime)

        for (i, j, h, k), v in flows.items():
            if (i, j) not in edge_caps:
                fail("edge-existence", (i, j, h, k), "flow on edge not in candidate set")
            if v < -TOL_ABS:
                fail("tree-flow-gating", (i, j, h, k), f"negative flow {v}")
            if h == i and abs(v) > TOL_ABS:
                fail("no-self-flow", (i, j, h, k), f"self-addressed flow {v}")

        for (i, j), v in airtime.items():
            if not -TOL_ABS <= v <= 1.0 + TOL_ABS:
                fail("airtime-range", (i, j), f"airtime {v} outside [0, 1]")
            if v > TOL_ABS and not assigned.get((i, j)):
                fail("airtime-gating", (i, j), f"airtime {v} on unassigned edge")

        out_flow: dict[tuple[int, int], float] = {}
        in_transit: dict[tuple[int, int], float] = {}
        delivered: dict[tuple[int, int], float] = {}
        link_total: dict[tuple[int, int], float] = {}
        for (i, j, h, k), v in flows.items():
            if (i, j) not in edge_caps or v <= 0:
                continue
            out_flow[i, k] = out_flow.get((i, k), 0.0) + v
            if h != j:
                in_transit[j, k] = in_transit.get((j, k), 0.0) + v
            else:
                delivered[j, k] = delivered.get((j, k), 0.0) + v
            link_total[i, j] = link_total.get((i, j), 0.0) + v
            if k not in assigned.get((i, j), set()):
                fail(
                    "tree-flow-gating",
                    (i, j, h, k),
                    f"flow {v} in layer {k} on edge not assigned to it",
                )

        for i in nodes:
            for k in layers:
                injected = out_flow.get((i, k), 0.0) - in_transit.get((i, k), 0.0)
                cap = egress_cap if i in donors else 0.0
                if not _leq(injected, cap):
                    fail(
                        "flow-conservation",
                        (i, k),
                        f"node injects {injected:.6f} Mb/s over its cap {cap:.6f}",
                    )
                if i not in donors:
                    got = delivered.get((i, k), 0.0)
                    if not _leq(demand[i], got):
                        fail(
                            "demand-satisfaction",
                            (i, k),
                            f"delivered {got:.6f} of demanded {demand[i]:.6f} Mb/s",
                        )

        for (i, j), total in link_total.items():
            cap = edge_caps.get((i, j))
            if cap is None:
                continue
            budget = airtime.get((i, j), 0.0) * cap
            if not _leq(total, budget):
                fail(
                    "link-capacity",
                    (i, j),
                    f"flow {total:.6f} exceeds airtime budget {budget:.6f}",
                )

        for j in nodes:
            ingress = sum(
                v for (i2, j2, h, k), v in flows.items() if j2 == j and v > 0
            )
            allowance = sum(
                airtime.get((e.src, e.dst), 0.0) * e.capacity_mbps
                for e in graph.in_edges(j)
            )
            if not _leq(ingress, allowance):
                fail(
                    "node-ingress",
                    (j,),
                    f"ingress {ingress:.6f} exceeds incoming allowance {allowance:.6f}",
                )

        if params.airtime_per_node:
            checks.append("node-airtime")
            for i in nodes:
                share = sum(
                    v for (s, d), v in airtime.items() if i in (s, d) and (s, d) in edge_caps
                )
                if not _leq(share, 1.0):
                    fail("node-airtime", (i,), f"summed incident airtime {share:.6f} > 1")

    return ValidationReport(
        passed=not failures, failures=tuple(failures), checks_run=tuple(checks)
    )
