"""Deployment graphs: node placement, coverage sampling, per-gNB demand,
and candidate-edge pruning.

A :class:`ScenarioGraph` is the annotated directed graph the planner runs
on: gNB nodes with positions and downstream demand, plus candidate backhaul
edges with SNR and capacity.  Graphs are immutable; every operation returns
a new graph.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .errors import ParameterError, ScenarioFormatError

SCENARIO_SCHEMA_VERSION = 1

#: Demand values may exceed lambda by at most this relative slack (guards
#: against round-tripped floats, not against real over-provisioning).
_DEMAND_SLACK = 1e-9


@dataclass(frozen=True)
class Gnb:
    """A base station: identity, 3D position in meters, downstream demand."""

    id: int
    position: tuple[float, float, float]
    demand_mbps: float = 0.0
    fixed_donor: bool = False


@dataclass(frozen=True)
class CandidateEdge:
    """A feasible directed backhaul link with its estimated capacity."""

    src: int
    dst: int
    snr_db: float
    capacity_mbps: float


@dataclass(frozen=True)
class ScenarioGraph:
    nodes: tuple[Gnb, ...]
    edges: tuple[CandidateEdge, ...]
    lambda_mbps: float
    area_km2: float

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))
        ids = [n.id for n in self.nodes]
        id_set = set(ids)
        if len(id_set) != len(ids):
            dup = sorted(i for i in id_set if ids.count(i) > 1)[0]
            raise ScenarioFormatError(f"nodes: duplicate id {dup}")
        if self.lambda_mbps <= 0:
            raise ScenarioFormatError("lambda_mbps: must be positive")
        for idx, n in enumerate(self.nodes):
            if n.demand_mbps < 0:
                raise ScenarioFormatError(f"nodes[{idx}].demand_mbps: negative")
            if n.demand_mbps > self.lambda_mbps * (1 + _DEMAND_SLACK):
                raise ScenarioFormatError(
                    f"nodes[{idx}].demand_mbps: {n.demand_mbps} exceeds lambda_mbps"
                )
        seen_pairs = set()
        for idx, e in enumerate(self.edges):
            if e.src == e.dst:
                raise ScenarioFormatError(f"edges[{idx}]: self-loop on node {e.src}")
            if e.src not in id_set:
                raise ScenarioFormatError(f"edges[{idx}].src: unknown node {e.src}")
            if e.dst not in id_set:
                raise ScenarioFormatError(f"edges[{idx}].dst: unknown node {e.dst}")
            if e.capacity_mbps < 0:
                raise ScenarioFormatError(f"edges[{idx}].capacity_mbps: negative")
            if (e.src, e.dst) in seen_pairs:
                raise ScenarioFormatError(
                    f"edges[{idx}]: duplicate edge ({e.src}, {e.dst})"
                )
            seen_pairs.add((e.src, e.dst))

    # -- lookups -----------------------------------------------------------

    def node(self, node_id: int) -> Gnb:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise ParameterError(f"unknown node id {node_id}")

    def node_ids(self) -> list[int]:
        return sorted(n.id for n in self.nodes)

    def demands(self) -> dict[int, float]:
        return {n.id: n.demand_mbps for n in self.nodes}

    def edge_map(self) -> dict[tuple[int, int], CandidateEdge]:
        return {(e.src, e.dst): e for e in self.edges}

    def in_edges(self, node_id: int) -> list[CandidateEdge]:
        return [e for e in self.edges if e.dst == node_id]

    def out_edges(self, node_id: int) -> list[CandidateEdge]:
        return [e for e in self.edges if e.src == node_id]


@dataclass(frozen=True)
class CoverageGrid:
    """Sampled ground coverage: per-node covered cells and cell multiplicity.

    Cells are squares of side ``resolution_m`` keyed by the floor of the
    scaled coordinates; a cell belongs to a node's coverage set when its
    center lies within the coverage radius (boundary inclusive).
    """

    resolution_m: float
    cover_sets: dict[int, frozenset[tuple[int, int]]]
    multiplicity: dict[tuple[int, int], int]


def generate_synthetic(
    n: int,
    density_per_km2: float,
    seed: int,
    *,
    height_m: float = 10.0,
    lambda_mbps: float = 1000.0,
) -> ScenarioGraph:
    """Place ``n`` gNBs uniformly at random in a square of area n/density.

    The edge set is left empty; the channel module fills it in.  Identical
    arguments always produce the identical graph.
    """
    if n < 1:
        raise ParameterError(f"node count must be >= 1, got {n}")
    if density_per_km2 <= 0:
        raise ParameterError(f"density must be positive, got {density_per_km2}")
    area_km2 = n / density_per_km2
    side_m = math.sqrt(area_km2) * 1000.0
    rng = np.random.default_rng(seed)
    xs = rng.uniform(0.0, side_m, size=n)
    ys = rng.uniform(0.0, side_m, size=n)
    nodes = tuple(
        Gnb(id=i, position=(float(xs[i]), float(ys[i]), float(height_m)))
        for i in range(n)
    )
    return ScenarioGraph(nodes=nodes, edges=(), lambda_mbps=lambda_mbps, area_km2=area_km2)


def sample_coverage(
    graph: ScenarioGraph, radius_m: float, resolution_m: float = 1.0
) -> CoverageGrid:
    """Sample the ground around every node with a 2D disc coverage model.

    Returns the per-node covered cell sets and, for every covered cell, the
    number of nodes covering it.  No clipping is applied at the deployment
    area boundary; discs extend wherever geometry puts them.
    """
    if radius_m <= 0:
        raise ParameterError(f"coverage radius must be positive, got {radius_m}")
    if resolution_m <= 0:
        raise ParameterError(f"resolution must be positive, got {resolution_m}")
    cover_sets: dict[int, frozenset[tuple[int, int]]] = {}
    multiplicity: dict[tuple[int, int], int] = {}
    r2 = radius_m * radius_m
    for node in graph.nodes:
        x, y = node.position[0], node.position[1]
        k_lo_x = math.floor((x - radius_m) / resolution_m) - 1
        k_hi_x = math.floor((x + radius_m) / resolution_m) + 1
        k_lo_y = math.floor((y - radius_m) / resolution_m) - 1
        k_hi_y = math.floor((y + radius_m) / resolution_m) + 1
        kx = np.arange(k_lo_x, k_hi_x + 1)
        ky = np.arange(k_lo_y, k_hi_y + 1)
        cx = (kx + 0.5) * resolution_m - x
        cy = (ky + 0.5) * resolution_m - y
        dist2 = cx[:, None] ** 2 + cy[None, :] ** 2
        ix, iy = np.nonzero(dist2 <= r2)
        cells = frozenset(zip(kx[ix].tolist(), ky[iy].tolist()))
        cover_sets[node.id] = cells
        for cell in cells:
            multiplicity[cell] = multiplicity.get(cell, 0) + 1
    return CoverageGrid(
        resolution_m=resolution_m, cover_sets=cover_sets, multiplicity=multiplicity
    )


def estimate_demand(grid: CoverageGrid, lambda_mbps: float) -> dict[int, float]:
    """Split the nominal per-gNB load according to coverage overlap.

    A node covering only cells of multiplicity one gets the full load; shared
    cells dilute the demand proportionally.  A node that covers no sampled
    cell is assigned the full load and a warning is emitted, which never
    under-provisions.
    """
    demands: dict[int, float] = {}
    for node_id, cells in grid.cover_sets.items():
        if not cells:
            warnings.warn(
                f"node {node_id} covers no sampled point; assigning full load",
                stacklevel=2,
            )
            demands[node_id] = float(lambda_mbps)
            continue
        weight = sum(grid.multiplicity[c] for c in cells)
        demands[node_id] = len(cells) * float(lambda_mbps) / weight
    return demands


def assign_demands(graph: ScenarioGraph, demands: dict[int, float]) -> ScenarioGraph:
    """Return a copy of the graph with ``demand_mbps`` set from the map."""
    for node_id in demands:
        if all(n.id != node_id for n in graph.nodes):
            raise ParameterError(f"demand given for unknown node {node_id}")
    nodes = tuple(
        replace(n, demand_mbps=float(demands[n.id])) if n.id in demands else n
        for n in graph.nodes
    )
    return replace(graph, nodes=nodes)


def prune_edges(graph: ScenarioGraph) -> ScenarioGraph:
    """Drop edges that cannot carry even the destination's own demand.

    An edge (i, j) survives iff capacity >= demand of j; the boundary case
    of exact equality is kept.  Idempotent.
    """
    demand = graph.demands()
    kept = tuple(e for e in graph.edges if e.capacity_mbps >= demand[e.dst])
    return replace(graph, edges=kept)


def remove_isolated(graph: ScenarioGraph) -> tuple[ScenarioGraph, list[int]]:
    """Remove non-donor nodes with no incident candidate edge.

    Returns the cleaned graph and the sorted list of removed node ids; the
    demand mass stranded by the removals is reported in a warning.
    """
    touched = set()
    for e in graph.edges:
        touched.add(e.src)
        touched.add(e.dst)
    removed = sorted(
        n.id for n in graph.nodes if n.id not in touched and not n.fixed_donor
    )
    if not removed:
        return graph, []
    stranded = sum(n.demand_mbps for n in graph.nodes if n.id in removed)
    warnings.warn(
        f"removed {len(removed)} out-of-range node(s) {removed}; "
        f"{stranded:.2f} Mb/s of demand left uncovered",
        stacklevel=2,
    )
    nodes = tuple(n for n in graph.nodes if n.id not in removed)
    return replace(graph, nodes=nodes), removed


# -- persistence -------------------------------------------------------------


def _node_to_json(n: Gnb) -> dict:
    return {
        "id": n.id,
        "x": n.position[0],
        "y": n.position[1],
        "z": n.position[2],
        "demand_mbps": n.demand_mbps,
        "fixed_donor": n.fixed_donor,
    }


def _edge_to_json(e: CandidateEdge) -> dict:
    return {
        "src": e.src,
        "dst": e.dst,
        "snr_db": e.snr_db,
        "capacity_mbps": e.capacity_mbps,
    }


def scenario_to_json(graph: ScenarioGraph) -> str:
    """Canonical JSON form of a graph; stable byte-for-byte."""
    doc = {
        "lambda_mbps": graph.lambda_mbps,
        "area_km2": graph.area_km2,
        "nodes": [_node_to_json(n) for n in graph.nodes],
        "edges": [_edge_to_json(e) for e in graph.edges],
    }
    return json.dumps(doc, indent=2) + "\n"


def save_scenario(graph: ScenarioGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(scenario_to_json(graph))


def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise ScenarioFormatError(f"{context}.{key}: missing")
    return mapping[key]


def load_scenario(
    path,
    *,
    coverage_radius_m: float | None = None,
    resolution_m: float = 1.0,
) -> ScenarioGraph:
    """Load a scenario JSON file.

    ``demand_mbps`` is optional per node; when absent and a coverage radius
    is supplied, demands are computed from coverage overlap, otherwise they
    default to zero (enough for topology-only planning).
    """
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ScenarioFormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ScenarioFormatError("document: expected a JSON object")
    lam = _require(doc, "lambda_mbps", "document")
    area = _require(doc, "area_km2", "document")
    raw_nodes = _require(doc, "nodes", "document")
    raw_edges = doc.get("edges", [])
    nodes = []
    missing_demand = []
    for i, nd in enumerate(raw_nodes):
        ctx = f"nodes[{i}]"
        if not isinstance(nd, dict):
            raise ScenarioFormatError(f"{ctx}: expected an object")
        try:
            node = Gnb(
                id=int(_require(nd, "id", ctx)),
                position=(
                    float(_require(nd, "x", ctx)),
                    float(_require(nd, "y", ctx)),
                    float(_require(nd, "z", ctx)),
                ),
                demand_mbps=float(nd.get("demand_mbps", 0.0)),
                fixed_donor=bool(nd.get("fixed_donor", False)),
            )
        except (TypeError, ValueError) as exc:
            raise ScenarioFormatError(f"{ctx}: {exc}") from exc
        if "demand_mbps" not in nd:
            missing_demand.append(node.id)
        nodes.append(node)
    edges = []
    for i, ed in enumerate(raw_edges):
        ctx = f"edges[{i}]"
        if not isinstance(ed, dict):
            raise ScenarioFormatError(f"{ctx}: expected an object")
        try:
            edges.append(
                CandidateEdge(
                    src=int(_require(ed, "src", ctx)),
                    dst=int(_require(ed, "dst", ctx)),
                    snr_db=float(_require(ed, "snr_db", ctx)),
                    capacity_mbps=float(_require(ed, "capacity_mbps", ctx)),
                )
            )
        except (TypeError, ValueError) as exc:
            raise ScenarioFormatError(f"{ctx}: {exc}") from exc
    graph = ScenarioGraph(
        nodes=tuple(nodes), edges=tuple(edges), lambda_mbps=float(lam), area_km2=float(area)
    )
    if missing_demand and coverage_radius_m is not None:
        grid = sample_coverage(graph, coverage_radius_m, resolution_m)
        demands = estimate_demand(grid, graph.lambda_mbps)
        graph = assign_demands(
            graph, {nid: demands[nid] for nid in missing_demand}
        )
    return graph
