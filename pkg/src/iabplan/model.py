"""Donor-minimizing mixed-ILP over a deployment graph.

The model selects a minimum-cost set of fiber-connected donors and, for
every redundancy layer k, a forest of backhaul trees rooted at the donors
of that layer.  Trees are pairwise edge-disjoint across layers and
directions, bounded in depth and out-degree, and (optionally) carry a
multi-commodity flow that delivers every node's demand in every layer
under per-link airtime capacity.

Variables:

* ``u[i,l,k]``  binary, node i sits at depth l in layer k (l = 0: donor)
* ``P[i,j,k]``  binary, directed edge (i, j) is active in layer k
* ``f[i,j,h,k]`` flow to destination h over edge (i, j) in layer k, Mb/s
* ``a[i,j]``    fraction of time edge (i, j) is used, in [0, 1]
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import ConfigurationError, ParameterError
from .scenario import ScenarioGraph


@dataclass(frozen=True)
class PlanParams:
    """Planner knobs: tree shape, redundancy, and flow handling.

    ``max_out_degree`` is the exclusive bound on children per node per tree
    (a node may have at most ``max_out_degree - 1`` children).  When
    ``donor_egress_mbps`` is None the cap defaults to the total network
    demand, which never binds.  ``airtime_per_node`` additionally caps the
    summed airtime of all links incident to a node at 1; it is off by
    default because redundant layers each deliver the full demand, so two
    incoming links alone can exceed a shared-radio budget on realistic
    loads.
    """

    max_depth: int = 3
    max_out_degree: int = 4
    redundancy: int = 1
    donor_egress_mbps: float | None = None
    flow_enabled: bool = True
    airtime_per_node: bool = False

    def __post_init__(self):
        if self.max_depth < 1:
            raise ParameterError(f"max_depth must be >= 1, got {self.max_depth}")
        if self.max_out_degree < 1:
            raise ParameterError(
                f"max_out_degree must be >= 1, got {self.max_out_degree}"
            )
        if self.redundancy < 1:
            raise ParameterError(f"redundancy must be >= 1, got {self.redundancy}")
        if self.donor_egress_mbps is not None and self.donor_egress_mbps <= 0:
            raise ParameterError("donor_egress_mbps must be positive when set")


@dataclass(frozen=True)
class Variable:
    name: str
    kind: tuple
    index: int
    is_integer: bool
    lb: float
    ub: float


@dataclass(frozen=True)
class Constraint:
    """One linear (in)equality: sum(coef * var) sense rhs."""

    name: str
    coeffs: tuple[tuple[int, float], ...]
    sense: str  # "<=", ">=", "="
    rhs: float


@dataclass(frozen=True)
class MilpModel:
    variables: tuple[Variable, ...]
    constraints: tuple[Constraint, ...]
    objective: tuple[tuple[int, float], ...]
    params: PlanParams
    graph: ScenarioGraph
    fixed_donors: frozenset[int] = field(default_factory=frozenset)
    _index: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        if not self._index:
            object.__setattr__(
                self, "_index", {v.kind: v.index for v in self.variables}
            )

    def var_index(self, kind: tuple) -> int:
        return self._index[kind]

    def has_var(self, kind: tuple) -> bool:
        return kind in self._index

    @property
    def n_binary(self) -> int:
        return sum(1 for v in self.variables if v.is_integer)

    def constraint_families(self) -> list[str]:
        seen = []
        for c in self.constraints:
            fam = c.name.split("[", 1)[0]
            if fam not in seen:
                seen.append(fam)
        return seen

    def dump(self) -> str:
        """Human-readable listing, one line per constraint, stable order."""
        names = {v.index: v.name for v in self.variables}

        def expr(coeffs):
            return " ".join(
                f"{c:+g} {names[i]}" for i, c in coeffs
            )

        lines = ["objective: min " + expr(self.objective)]
        for con in self.constraints:
            lines.append(f"{con.name}: {expr(con.coeffs)} {con.sense} {con.rhs:g}")
        return "\n".join(lines)


class _Builder:
    def __init__(self):
        self.variables: list[Variable] = []
        self.constraints: list[Constraint] = []
        self.index: dict[tuple, int] = {}

    def add_var(self, name, kind, is_integer, lb, ub) -> int:
        idx = len(self.variables)
        self.variables.append(
            Variable(name=name, kind=kind, index=idx, is_integer=is_integer, lb=lb, ub=ub)
        )
        self.index[kind] = idx
        return idx

    def add_con(self, name, coeffs, sense, rhs):
        merged: dict[int, float] = {}
        for idx, c in coeffs:
            merged[idx] = merged.get(idx, 0.0) + c
        frozen = tuple((i, c) for i, c in merged.items() if c != 0.0)
        self.constraints.append(Constraint(name=name, coeffs=frozen, sense=sense, rhs=rhs))


def build_model(graph: ScenarioGraph, params: PlanParams) -> MilpModel:
    """Assemble the full constraint system for a pruned deployment graph.

    Raises :class:`ConfigurationError` when flow constraints are requested
    but the graph carries no demand at all.
    """
    nodes = graph.node_ids()
    edges = sorted((e.src, e.dst) for e in graph.edges)
    demand = graph.demands()
    capacity = {(e.src, e.dst): e.capacity_mbps for e in graph.edges}
    D = params.max_depth
    R = params.redundancy
    delta = params.max_out_degree
    layers = range(1, R + 1)

    if params.flow_enabled and nodes and all(demand[i] == 0.0 for i in nodes):
        raise ConfigurationError(
            "flow constraints enabled but no node carries demand; "
            "compute demands first or disable flow"
        )

    egress_cap = params.donor_egress_mbps
    if egress_cap is None:
        egress_cap = sum(demand.values()) or 1.0

    b = _Builder()

    u = {}
    for i in nodes:
        for l in range(D + 1):
            for k in layers:
                u[i, l, k] = b.add_var(f"u[{i},{l},{k}]", ("u", i, l, k), True, 0, 1)
    P = {}
    for (i, j) in edges:
        for k in layers:
            P[i, j, k] = b.add_var(f"P[{i},{j},{k}]", ("P", i, j, k), True, 0, 1)
    f = {}
    a = {}
    if params.flow_enabled:
        for (i, j) in edges:
            for h in nodes:
                for k in layers:
                    f[i, j, h, k] = b.add_var(
                        f"f[{i},{j},{h},{k}]", ("f", i, j, h, k), False, 0.0, float("inf")
                    )
        for (i, j) in edges:
            a[i, j] = b.add_var(f"a[{i},{j}]", ("a", i, j), False, 0.0, 1.0)

    in_edges = {i: [] for i in nodes}
    out_edges = {i: [] for i in nodes}
    for (i, j) in edges:
        out_edges[i].append((i, j))
        in_edges[j].append((i, j))

    # Tree membership: each node occupies exactly one depth per layer,
    # unless it is a donor rooted in some other layer.
    for i in nodes:
        for k in layers:
            coeffs = [(u[i, l, k], 1.0) for l in range(D + 1)]
            coeffs += [(u[i, 0, r], 1.0) for r in layers if r != k]
            b.add_con(f"rdist[{i},{k}]", coeffs, "=", 1.0)

    # A donor roots a single tree.
    for i in nodes:
        b.add_con(
            f"rsingleroot[{i}]", [(u[i, 0, k], 1.0) for k in layers], "<=", 1.0
        )

    # Donors have no incoming edge; every other node has exactly one per layer.
    for j in nodes:
        for k in layers:
            coeffs = [(P[i2, j2, k], 1.0) for (i2, j2) in in_edges[j]]
            coeffs += [(u[j, 0, r], 1.0) for r in layers]
            b.add_con(f"rdonor[{j},{k}]", coeffs, "=", 1.0)

    # Out-degree is strictly below max_out_degree (integer form: <= delta-1).
    for i in nodes:
        for k in layers:
            coeffs = [(P[i2, j2, k], 1.0) for (i2, j2) in out_edges[i]]
            b.add_con(f"rdeg[{i},{k}]", coeffs, "<=", float(delta - 1))

    # Depth consistency hop by hop: an active edge implies parent depth
    # equals child depth minus one.
    for (i, j) in edges:
        for k in layers:
            for l in range(1, D + 1):
                b.add_con(
                    f"rpath[{i},{j},{k},{l}]",
                    [(P[i, j, k], 1.0), (u[j, l, k], 1.0), (u[i, l - 1, k], -1.0)],
                    "<=",
                    1.0,
                )

    # Only candidate edges can be used (P variables exist only for candidate
    # edges, so the bound is 1 there and 0 everywhere else by construction).
    for (i, j) in edges:
        for k in layers:
            b.add_con(f"rexist[{i},{j},{k}]", [(P[i, j, k], 1.0)], "<=", 1.0)

    # Each physical link is used in one direction and one layer at most,
    # which makes the layers edge-disjoint.
    seen_pairs = set()
    for (i, j) in edges:
        lo, hi = min(i, j), max(i, j)
        if (lo, hi) in seen_pairs:
            continue
        seen_pairs.add((lo, hi))
        coeffs = [(P[lo, hi, k], 1.0) for k in layers if (lo, hi, k) in P]
        coeffs += [(P[hi, lo, k], 1.0) for k in layers if (hi, lo, k) in P]
        b.add_con(f"rdir[{lo},{hi}]", coeffs, "<=", 1.0)

    if params.flow_enabled:
        # No flow addressed to the node it just left.
        for (i, j) in edges:
            for k in layers:
                b.add_con(f"noselfb[{i},{j},{k}]", [(f[i, j, i, k], 1.0)], "=", 0.0)

        # Flow conservation: only donors may inject flow, up to the egress cap.
        for i in nodes:
            for k in layers:
                coeffs = []
                for (i2, j2) in out_edges[i]:
                    for h in nodes:
                        coeffs.append((f[i2, j2, h, k], 1.0))
                for (j2, i2) in in_edges[i]:
                    for h in nodes:
                        if h != i:
                            coeffs.append((f[j2, i2, h, k], -1.0))
                coeffs += [(u[i, 0, r], -egress_cap) for r in layers]
                b.add_con(f"flowconb[{i},{k}]", coeffs, "<=", 0.0)

        # Every non-donor receives its full demand in every layer.
        for i in nodes:
            for k in layers:
                coeffs = [(f[j2, i2, i, k], 1.0) for (j2, i2) in in_edges[i]]
                coeffs += [(u[i, 0, r], demand[i]) for r in layers]
                b.add_con(f"incflowb[{i},{k}]", coeffs, ">=", demand[i])

        # Airtime only on chosen links.
        for (i, j) in edges:
            coeffs = [(a[i, j], 1.0)]
            coeffs += [(P[i, j, k], -1.0) for k in layers]
            b.add_con(f"maxusageb[{i},{j}]", coeffs, "<=", 0.0)

        # A node cannot take in more than its incoming links allow.
        for j in nodes:
            coeffs = []
            for (i2, j2) in in_edges[j]:
                for h in nodes:
                    for k in layers:
                        coeffs.append((f[i2, j2, h, k], 1.0))
                coeffs.append((a[i2, j2], -capacity[i2, j2]))
            b.add_con(f"maxflowpernodeb[{j}]", coeffs, "<=", 0.0)

        # Per-link cap: total flow stays within the allocated airtime.
        for (i, j) in edges:
            coeffs = []
            for h in nodes:
                for k in layers:
                    coeffs.append((f[i, j, h, k], 1.0))
            coeffs.append((a[i, j], -capacity[i, j]))
            b.add_con(f"maxflowlinkb[{i},{j}]", coeffs, "<=", 0.0)

        # Flow in a layer only on edges assigned to that layer.
        for (i, j) in edges:
            for h in nodes:
                for k in layers:
                    b.add_con(
                        f"maxlinkflowb[{i},{j},{h},{k}]",
                        [(f[i, j, h, k], 1.0), (P[i, j, k], -capacity[i, j])],
                        "<=",
                        0.0,
                    )

        if params.airtime_per_node:
            # Shared-radio extension: all links touching a node share one
            # unit of airtime.  Not part of the core system of equations.
            for i in nodes:
                coeffs = [(a[i2, j2], 1.0) for (i2, j2) in out_edges[i]]
                coeffs += [(a[i2, j2], 1.0) for (i2, j2) in in_edges[i]]
                b.add_con(f"nodeairtime[{i}]", coeffs, "<=", 1.0)

    objective = tuple((u[i, 0, k], 1.0) for i in nodes for k in layers)

    return MilpModel(
        variables=tuple(b.variables),
        constraints=tuple(b.constraints),
        objective=objective,
        params=params,
        graph=graph,
    )


def fix_donors(model: MilpModel, donor_ids) -> MilpModel:
    """Pin nodes as donors (brownfield): each pinned node must root a tree.

    The layer is left to the solver; the constraint fixes the sum of the
    node's depth-0 indicators to one.
    """
    known = set(model.graph.node_ids())
    pinned = set(model.fixed_donors)
    new_cons = list(model.constraints)
    for nid in donor_ids:
        if nid not in known:
            raise ParameterError(f"cannot pin unknown node {nid} as donor")
        if nid in pinned:
            continue
        pinned.add(nid)
        coeffs = tuple(
            (model.var_index(("u", nid, 0, k)), 1.0)
            for k in range(1, model.params.redundancy + 1)
        )
        new_cons.append(Constraint(f"fixdonor[{nid}]", coeffs, "=", 1.0))
    return MilpModel(
        variables=model.variables,
        constraints=tuple(new_cons),
        objective=model.objective,
        params=model.params,
        graph=model.graph,
        fixed_donors=frozenset(pinned),
    )


def weighted_objective(model: MilpModel, cost_per_node: dict[int, float]) -> MilpModel:
    """Replace unit donor costs with per-node costs (default 1 if omitted)."""
    known = set(model.graph.node_ids())
    for nid, cost in cost_per_node.items():
        if nid not in known:
            raise ParameterError(f"cost given for unknown node {nid}")
        if cost < 0:
            raise ParameterError(f"negative donor cost for node {nid}")
    objective = tuple(
        (model.var_index(("u", i, 0, k)), float(cost_per_node.get(i, 1.0)))
        for i in sorted(known)
        for k in range(1, model.params.redundancy + 1)
    )
    return MilpModel(
        variables=model.variables,
        constraints=model.constraints,
        objective=objective,
        params=model.params,
        graph=model.graph,
        fixed_donors=model.fixed_donors,
    )
