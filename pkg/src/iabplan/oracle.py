"""Exhaustive donor minimizer for small graphs.

Ground truth for the planner: donor subsets are enumerated in increasing
cardinality and each is tested by a complete backtracking search over
depth-bounded, degree-capped, pairwise edge-disjoint forests, one per
redundancy layer.  Because flow in a tree is forced (every destination is
reached along the unique root path), the per-layer flow feasibility check
reduces to comparing accumulated subtree demand against link capacity,
which the search maintains incrementally.

Deliberately shares no code with the MILP construction or the solver.
"""

from __future__ import annotations

import itertools

from .errors import ParameterError
from .model import PlanParams
from .scenario import ScenarioGraph
from .solve import STATUS_OPTIMAL, Solution

#: Hard size guard; the search is exponential in the node count.
MAX_ORACLE_NODES = 8

#: Slack used when comparing accumulated loads against capacities, kept in
#: line with LP feasibility tolerances so borderline instances agree.
_EPS = 1e-9


def brute_force_min_donors(
    graph: ScenarioGraph, params: PlanParams, fixed_donors=()
) -> tuple[int, Solution]:
    """Minimum donor count and one witness solution, by exhaustion."""
    nodes = graph.node_ids()
    if len(nodes) > MAX_ORACLE_NODES:
        raise ParameterError(
            f"oracle accepts at most {MAX_ORACLE_NODES} nodes, got {len(nodes)}"
        )
    fixed = set(fixed_donors)
    unknown = fixed - set(nodes)
    if unknown:
        raise ParameterError(f"fixed donors not in graph: {sorted(unknown)}")
    if not nodes:
        return 0, _empty_solution()

    ctx = _Context(graph, params)
    # Nodes that can never be served need at least `redundancy` distinct
    # in-neighbors; anything short of that must be a donor.
    forced = {j for j in nodes if len(ctx.in_nbrs[j]) < params.redundancy}
    forced |= fixed
    free = [n for n in nodes if n not in forced]

    for extra in range(len(free) + 1):
        size = len(forced) + extra
        for combo in itertools.combinations(free, extra):
            donor_set = sorted(forced | set(combo))
            witness = _feasible(ctx, donor_set)
            if witness is not None:
                return size, witness
    raise AssertionError("all-donors assignment must be feasible")


def feasible_donor_set(
    graph: ScenarioGraph, params: PlanParams, donor_set
) -> Solution | None:
    """Witness solution for an exact donor set, or None when infeasible."""
    nodes = set(graph.node_ids())
    donors = sorted(set(donor_set))
    if len(nodes) > MAX_ORACLE_NODES:
        raise ParameterError(
            f"oracle accepts at most {MAX_ORACLE_NODES} nodes, got {len(nodes)}"
        )
    if not set(donors) <= nodes:
        raise ParameterError("donor set contains unknown nodes")
    return _feasible(_Context(graph, params), donors)


class _Context:
    def __init__(self, graph: ScenarioGraph, params: PlanParams):
        self.params = params
        self.nodes = graph.node_ids()
        self.demand = graph.demands()
        self.cap = {(e.src, e.dst): e.capacity_mbps for e in graph.edges}
        self.in_nbrs = {j: [] for j in self.nodes}
        for (i, j) in sorted(self.cap):
            self.in_nbrs[j].append(i)
        self.egress_cap = params.donor_egress_mbps
        if self.egress_cap is None:
            self.egress_cap = sum(self.demand.values()) or 1.0


def _canonical_layer_assignments(n_donors: int, layers: int):
    """Layer labels per donor, up to relabeling symmetry: the sequence of
    first appearances is always 1, 2, ..."""

    def rec(prefix, max_used):
        if len(prefix) == n_donors:
            yield tuple(prefix)
            return
        for k in range(1, min(max_used + 1, layers) + 1):
            yield from rec(prefix + [k], max(max_used, k))

    yield from rec([], 0)


def _feasible(ctx: _Context, donors: list[int]) -> Solution | None:
    non_donors = [n for n in ctx.nodes if n not in donors]
    R = ctx.params.redundancy
    for labels in _canonical_layer_assignments(len(donors), R):
        layer_of = dict(zip(donors, labels))
        roots = {k: [d for d in donors if layer_of[d] == k] for k in range(1, R + 1)}
        if non_donors and any(not roots[k] for k in roots):
            continue
        if not _prechecks(ctx, roots, non_donors):
            continue
        search = _ForestSearch(ctx, roots, non_donors)
        if search.run():
            return _witness(ctx, donors, layer_of, search)
    return None


def _prechecks(ctx: _Context, roots: dict[int, list[int]], non_donors) -> bool:
    if not non_donors:
        return True
    D = ctx.params.max_depth
    branch = ctx.params.max_out_degree - 1
    members = set(non_donors)
    for k, root_list in roots.items():
        # Slot counting: a tree of depth D with at most `branch` children
        # per node bounds how many nodes the roots can ever adopt.
        slots, width = 0, len(root_list) * branch
        for _ in range(D):
            slots += width
            width *= branch
        if slots < len(non_donors):
            return False
        # Optimistic reachability: hop distance from the layer's roots,
        # ignoring degree, load, and pair-disjointness.
        dist = {r: 0 for r in root_list}
        frontier = list(root_list)
        allowed = members | set(root_list)
        for hop in range(1, D + 1):
            nxt = []
            for j in non_donors:
                if j in dist:
                    continue
                if any(i in dist and dist[i] == hop - 1 for i in ctx.in_nbrs[j] if i in allowed):
                    dist[j] = hop
                    nxt.append(j)
            if not nxt:
                break
        if any(j not in dist for j in non_donors):
            return False
    return True


class _ForestSearch:
    """Backtracking construction of all layers' forests at once.

    Within a layer, nodes attach in increasing (depth, id) order, which
    enumerates every forest exactly once; layers are built in sequence and
    share the pool of physical links.
    """

    def __init__(self, ctx: _Context, roots: dict[int, list[int]], non_donors):
        self.ctx = ctx
        self.roots = roots
        self.non_donors = list(non_donors)
        self.layers = sorted(roots)
        self.used_pairs: set[tuple[int, int]] = set()
        self.level: dict[int, dict[int, int]] = {}
        self.parent: dict[int, dict[int, int]] = {}
        self.children: dict[int, dict[int, int]] = {}
        self.load: dict[int, dict[tuple[int, int], float]] = {}
        self.egress: dict[int, float] = {}
        self.root_of: dict[int, dict[int, int]] = {}
        self.airtime_sum: dict[int, float] = {n: 0.0 for n in ctx.nodes}

    def run(self) -> bool:
        return self._build_layer(0)

    def _build_layer(self, li: int) -> bool:
        if li == len(self.layers):
            return True
        k = self.layers[li]
        self.level[k] = {r: 0 for r in self.roots[k]}
        self.parent[k] = {}
        self.children[k] = {n: 0 for n in self.ctx.nodes}
        self.load[k] = {}
        self.root_of[k] = {r: r for r in self.roots[k]}
        ok = self._attach(li, k, set(self.non_donors), (0, -1))
        if not ok:
            del self.level[k], self.parent[k], self.children[k]
            del self.load[k], self.root_of[k]
        return ok

    def _attach(self, li: int, k: int, pending: set[int], last: tuple[int, int]) -> bool:
        if not pending:
            return self._build_layer(li + 1)
        D = self.ctx.params.max_depth
        branch = self.ctx.params.max_out_degree - 1
        level = self.level[k]
        for j in sorted(pending):
            for p in self.ctx.in_nbrs[j]:
                lp = level.get(p)
                if lp is None or lp >= D:
                    continue
                if (lp + 1, j) <= last:
                    continue
                if self.children[k][p] >= branch:
                    continue
                pair = (min(p, j), max(p, j))
                if pair in self.used_pairs:
                    continue
                undo = self._adopt(k, j, p, pair)
                if undo is not None:
                    pending.discard(j)
                    if self._attach(li, k, pending, (lp + 1, j)):
                        return True
                    pending.add(j)
                    self._revert(k, j, p, pair, undo)
        return False

    def _adopt(self, k, j, p, pair):
        """Attach j under p in layer k; returns an undo journal, or None if
        the added demand would overload the path or the donor egress."""
        ctx = self.ctx
        add = ctx.demand[j]
        touched = []
        if ctx.params.flow_enabled and add > 0:
            path = [(p, j)]
            x = p
            while x in self.parent[k]:
                path.append((self.parent[k][x], x))
                x = self.parent[k][x]
            root = self.root_of[k][p]
            if self.egress.get(root, 0.0) + add > ctx.egress_cap * (1 + _EPS) + _EPS:
                return None
            for e in path:
                new = self.load[k].get(e, 0.0) + add
                if new > ctx.cap[e] * (1 + _EPS) + _EPS:
                    return None
            if ctx.params.airtime_per_node:
                delta: dict[int, float] = {}
                for e in path:
                    da = add / ctx.cap[e]
                    delta[e[0]] = delta.get(e[0], 0.0) + da
                    delta[e[1]] = delta.get(e[1], 0.0) + da
                for n, da in delta.items():
                    if self.airtime_sum[n] + da > 1.0 + _EPS:
                        return None
                for n, da in delta.items():
                    self.airtime_sum[n] += da
                touched.append(("airtime", delta))
            for e in path:
                self.load[k][e] = self.load[k].get(e, 0.0) + add
            self.egress[root] = self.egress.get(root, 0.0) + add
            touched.append(("flow", path, root, add))
        self.level[k][j] = self.level[k][p] + 1
        self.parent[k][j] = p
        self.children[k][p] += 1
        self.root_of[k][j] = self.root_of[k][p]
        self.used_pairs.add(pair)
        return touched

    def _revert(self, k, j, p, pair, undo):
        self.used_pairs.discard(pair)
        del self.level[k][j]
        del self.parent[k][j]
        self.children[k][p] -= 1
        del self.root_of[k][j]
        for item in reversed(undo):
            if item[0] == "flow":
                _, path, root, add = item
                for e in path:
                    self.load[k][e] -= add
                self.egress[root] -= add
            else:
                _, delta = item
                for n, da in delta.items():
                    self.airtime_sum[n] -= da


def _witness(ctx: _Context, donors, layer_of, search: _ForestSearch) -> Solution:
    depths = [(d, 0, layer_of[d]) for d in donors]
    active: dict[int, tuple] = {}
    flows: dict[tuple, float] = {}
    airtime: dict[tuple, float] = {}
    for k in search.layers:
        active[k] = tuple(
            sorted((p, j) for j, p in search.parent[k].items())
        )
        for j, lvl in sorted(search.level[k].items()):
            if j not in donors:
                depths.append((j, lvl, k))
        if ctx.params.flow_enabled:
            for j in sorted(search.parent[k]):
                d = ctx.demand[j]
                if d <= 0:
                    continue
                x = j
                while x in search.parent[k]:
                    p = search.parent[k][x]
                    key = (p, x, j, k)
                    flows[key] = flows.get(key, 0.0) + d
                    x = p
            for e, load in sorted(search.load[k].items()):
                if load > 0:
                    airtime[e] = load / ctx.cap[e]
    return Solution(
        donor_set=frozenset(donors),
        active_edges=active,
        depths=tuple(sorted(depths)),
        flows=flows,
        airtime=airtime,
        objective=len(donors),
        gap=0.0,
        status=STATUS_OPTIMAL,
        engine="oracle",
    )


def _empty_solution() -> Solution:
    return Solution(
        donor_set=frozenset(),
        active_edges={},
        depths=(),
        flows={},
        airtime={},
        objective=0,
        gap=0.0,
        status=STATUS_OPTIMAL,
        engine="oracle",
    )
