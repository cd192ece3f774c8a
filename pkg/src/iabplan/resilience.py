"""Runtime multitree state and the failure-recovery controller.

A validated redundant plan is turned into a :class:`MultiTreeTopology`:
per-layer parent and depth maps plus, per node, the layer currently
carrying its traffic.  Injected link faults mark the affected subtree,
and reconfiguration re-homes every affected node onto its surviving
backup layer, parents before children.  Nodes stay on the backup layer
after recovery; reverting on repair is not modeled.
"""

from __future__ import annotations

import csv
import json
import warnings
from dataclasses import dataclass, field

from .errors import ParameterError, ScenarioFormatError, UnvalidatedSolutionError
from .model import PlanParams
from .scenario import ScenarioGraph
from .solve import Solution
from .validate import validate_solution

FAULTS_SCHEMA_VERSION = 1
EVENTS_CSV_HEADER = ["tick", "node", "hops", "proxy_rtt_ms", "state"]


@dataclass
class MultiTreeTopology:
    """Mutable single-owner runtime state of a deployed multitree."""

    parents: dict[int, dict[int, int | None]]  # layer -> node -> parent (None = root)
    depths: dict[int, dict[int, int]]
    donors: frozenset[int]
    active: dict[int, int]  # node -> layer currently carrying its traffic
    demand: dict[int, float]
    capacity: dict[tuple[int, int], float]
    airtime: dict[tuple[int, int], float]
    max_depth: int
    failed_pairs: set[tuple[int, int]] = field(default_factory=set)
    unrecoverable: set[int] = field(default_factory=set)
    tick: int = 0

    def layers(self) -> list[int]:
        return sorted(self.parents)

    def nodes(self) -> list[int]:
        return sorted(self.active)

    def children(self, layer: int, node: int) -> list[int]:
        return sorted(
            child
            for child, parent in self.parents[layer].items()
            if parent == node
        )

    def subtree(self, layer: int, node: int) -> list[int]:
        """Node plus all its descendants in the given layer."""
        out, stack = [], [node]
        while stack:
            cur = stack.pop()
            out.append(cur)
            stack.extend(self.children(layer, cur))
        return sorted(out)

    def clone(self) -> "MultiTreeTopology":
        return MultiTreeTopology(
            parents={k: dict(v) for k, v in self.parents.items()},
            depths={k: dict(v) for k, v in self.depths.items()},
            donors=self.donors,
            active=dict(self.active),
            demand=dict(self.demand),
            capacity=dict(self.capacity),
            airtime=dict(self.airtime),
            max_depth=self.max_depth,
            failed_pairs=set(self.failed_pairs),
            unrecoverable=set(self.unrecoverable),
            tick=self.tick,
        )


@dataclass(frozen=True)
class FaultEvent:
    edge: tuple[int, int]  # oriented parent -> child as used in the tree
    layer: int
    tick: int
    affected: tuple[int, ...]
    affected_demand_mbps: float


@dataclass(frozen=True)
class ReconfigPlan:
    """Ordered re-homing moves plus the core-network routing updates."""

    moves: tuple[tuple[int, int | None, int | None, int | None], ...]
    unrecoverable: tuple[int, ...]
    core_updates: tuple[int, ...]


@dataclass(frozen=True)
class RecoveryReport:
    ok: bool
    checked: tuple[int, ...]
    unrecoverable: tuple[int, ...]
    failures: tuple[tuple, ...]


@dataclass(frozen=True)
class TraceRow:
    tick: int
    node: int
    hops: int
    proxy_rtt_ms: float
    state: str


def extract_multitree(
    solution: Solution, graph: ScenarioGraph, params: PlanParams
) -> MultiTreeTopology:
    """Build runtime state from a solution, refusing anything that does not
    pass independent validation."""
    report = validate_solution(graph, params, solution)
    if not report.passed:
        raise UnvalidatedSolutionError(
            "refusing to deploy an invalid solution:\n" + report.summary()
        )
    layers = sorted(solution.active_edges) or [1]
    parents: dict[int, dict[int, int | None]] = {k: {} for k in layers}
    depths: dict[int, dict[int, int]] = {k: {} for k in layers}
    for (node, lvl, k) in solution.depths:
        depths[k][node] = lvl
        if lvl == 0:
            parents[k][node] = None
    for k in layers:
        for (i, j) in solution.active_edges.get(k, ()):
            parents[k][j] = i
    donors = frozenset(solution.donor_set)
    active = {}
    for n in graph.node_ids():
        if n in donors:
            active[n] = next(k for k in layers if depths[k].get(n) == 0)
        else:
            active[n] = layers[0]
    return MultiTreeTopology(
        parents=parents,
        depths=depths,
        donors=donors,
        active=active,
        demand=graph.demands(),
        capacity={(e.src, e.dst): e.capacity_mbps for e in graph.edges},
        airtime=dict(solution.airtime),
        max_depth=params.max_depth,
    )


def inject_failure(topology: MultiTreeTopology, edge: tuple[int, int]) -> FaultEvent:
    """Fail the physical link behind ``edge`` and report the affected subtree.

    The pair is matched regardless of direction.  Failing a link that no
    tree uses is a warned no-op with an empty affected set.
    """
    a, b = edge
    pair = (min(a, b), max(a, b))
    hit = None
    for k in topology.layers():
        for child, parent in topology.parents[k].items():
            if parent is not None and {parent, child} == {a, b}:
                hit = (k, parent, child)
                break
        if hit:
            break
    topology.failed_pairs.add(pair)
    if hit is None:
        warnings.warn(f"link {edge} is not used by any tree; nothing to do", stacklevel=2)
        return FaultEvent(
            edge=edge, layer=0, tick=topology.tick, affected=(), affected_demand_mbps=0.0
        )
    k, parent, child = hit
    affected = tuple(topology.subtree(k, child))
    weight = sum(topology.demand.get(n, 0.0) for n in affected)
    return FaultEvent(
        edge=(parent, child),
        layer=k,
        tick=topology.tick,
        affected=affected,
        affected_demand_mbps=weight,
    )


def reconfigure(topology: MultiTreeTopology, fault: FaultEvent) -> ReconfigPlan:
    """Switch every affected node onto a surviving backup layer.

    Nodes are processed parents-first so a re-homed subtree converges in one
    pass; a node with no surviving backup parent is marked unrecoverable.
    """
    if not fault.affected:
        return ReconfigPlan(moves=(), unrecoverable=(), core_updates=())
    order = sorted(
        fault.affected, key=lambda n: (topology.depths[fault.layer].get(n, 0), n)
    )
    moves = []
    lost = []
    for node in order:
        if topology.active.get(node) != fault.layer:
            continue  # already riding another layer, service unaffected
        old_parent = topology.parents[fault.layer].get(node)
        new_layer = None
        new_parent = None
        for k in topology.layers():
            if k == fault.layer:
                continue
            p = topology.parents.get(k, {}).get(node)
            if p is None:
                continue
            if (min(p, node), max(p, node)) in topology.failed_pairs:
                continue
            new_layer, new_parent = k, p
            break
        if new_layer is None:
            topology.unrecoverable.add(node)
            lost.append(node)
            continue
        topology.active[node] = new_layer
        moves.append((node, old_parent, new_parent, new_layer))
    touched = tuple(sorted([m[0] for m in moves] + lost))
    return ReconfigPlan(
        moves=tuple(moves), unrecoverable=tuple(sorted(lost)), core_updates=touched
    )


def _active_chain(topology: MultiTreeTopology, node: int):
    """Edges from a node up to its root in its active layer, or None when
    the chain is broken, loops, or crosses a failed link."""
    k = topology.active.get(node)
    if k is None or node not in topology.parents.get(k, {}):
        return None
    chain = []
    cur = node
    seen = {node}
    while True:
        parent = topology.parents[k].get(cur, "missing")
        if parent == "missing":
            return None
        if parent is None:
            return chain if cur in topology.donors else None
        if (min(parent, cur), max(parent, cur)) in topology.failed_pairs:
            return None
        chain.append((parent, cur))
        cur = parent
        if cur in seen:
            return None
        seen.add(cur)


def verify_recovery(
    topology: MultiTreeTopology, graph: ScenarioGraph, params: PlanParams
) -> RecoveryReport:
    """Check that every recoverable node still reaches a donor within the
    depth bound and that active-layer loads fit the planned airtime."""
    failures = []
    checked = []
    caps = {(e.src, e.dst): e.capacity_mbps for e in graph.edges}
    loads: dict[tuple[int, int], float] = {}
    for node in topology.nodes():
        if node in topology.donors or node in topology.unrecoverable:
            continue
        checked.append(node)
        chain = _active_chain(topology, node)
        if chain is None:
            failures.append((node, "no surviving path to a donor"))
            continue
        if len(chain) > params.max_depth:
            failures.append((node, f"path length {len(chain)} exceeds bound {params.max_depth}"))
        for e in chain:
            loads[e] = loads.get(e, 0.0) + topology.demand.get(node, 0.0)
    for e, load in sorted(loads.items()):
        cap = caps.get(e, 0.0)
        budget = topology.airtime.get(e, 0.0) * cap
        if load > budget * (1 + 1e-9) + 1e-6:
            failures.append((e, f"load {load:.6f} exceeds airtime budget {budget:.6f}"))
    return RecoveryReport(
        ok=not failures,
        checked=tuple(checked),
        unrecoverable=tuple(sorted(topology.unrecoverable)),
        failures=tuple(failures),
    )


def load_fault_schedule(path) -> list[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, list):
        raise ScenarioFormatError("fault schedule: expected a JSON array")
    out = []
    for i, item in enumerate(doc):
        if not isinstance(item, dict) or "tick" not in item or "edge" not in item:
            raise ScenarioFormatError(f"faults[{i}]: needs 'tick' and 'edge'")
        edge = item["edge"]
        if not isinstance(edge, (list, tuple)) or len(edge) != 2:
            raise ScenarioFormatError(f"faults[{i}].edge: expected [src, dst]")
        out.append({"tick": int(item["tick"]), "edge": (int(edge[0]), int(edge[1]))})
    return sorted(out, key=lambda f: f["tick"])


def simulate_trace(
    topology: MultiTreeTopology,
    fault_schedule: list[dict],
    hop_latency_ms: float,
    switch_ms: float = 0.0,
    ticks: int | None = None,
) -> list[TraceRow]:
    """Tick-driven failure and recovery replay.

    Each fault is applied atomically (inject plus reconfigure) at its tick;
    afterwards every node logs its hop count to the core and a proxy
    round-trip time of ``hops * hop_latency_ms * 2 + hops * switch_ms``.
    Unreachable nodes log hops -1 and state ``lost``.
    """
    if hop_latency_ms < 0 or switch_ms < 0:
        raise ParameterError("latencies must be non-negative")
    schedule = sorted(fault_schedule, key=lambda f: f["tick"])
    if ticks is None:
        ticks = (max(f["tick"] for f in schedule) + 2) if schedule else 3
    rows: list[TraceRow] = []
    for t in range(ticks):
        topology.tick = t
        for f in schedule:
            if f["tick"] == t:
                fault = inject_failure(topology, f["edge"])
                reconfigure(topology, fault)
        for node in topology.nodes():
            if node in topology.donors:
                rows.append(TraceRow(t, node, 0, 0.0, "donor"))
                continue
            chain = None if node in topology.unrecoverable else _active_chain(topology, node)
            if chain is None:
                rows.append(TraceRow(t, node, -1, -1.0, "lost"))
            else:
                hops = len(chain)
                rtt = hops * hop_latency_ms * 2.0 + hops * switch_ms
                rows.append(TraceRow(t, node, hops, rtt, f"k{topology.active[node]}"))
    return rows


def write_event_csv(rows: list[TraceRow], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(EVENTS_CSV_HEADER)
        for r in rows:
            writer.writerow([r.tick, r.node, r.hops, f"{r.proxy_rtt_ms:.3f}", r.state])
