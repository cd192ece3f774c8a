import warnings

import pytest

from iabplan.channel import build_synthetic_scenario
from iabplan.model import PlanParams, build_model
from iabplan.scenario import CandidateEdge, Gnb, ScenarioGraph


def synthetic_instance(n, seed, redundancy, mimo_layers=1, **plan_kwargs):
    """Build a ready-to-plan synthetic graph plus its params and model."""
    from iabplan.channel import RadioParams

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        graph, _removed = build_synthetic_scenario(
            n, 45.0, seed, params=RadioParams(mimo_layers=mimo_layers)
        )
    params = PlanParams(
        max_depth=plan_kwargs.pop("max_depth", 3),
        max_out_degree=plan_kwargs.pop("max_out_degree", 4),
        redundancy=redundancy,
        flow_enabled=plan_kwargs.pop("flow_enabled", True),
        **plan_kwargs,
    )
    return graph, params, build_model(graph, params)


def hand_graph(n_nodes, pair_capacities, demands, lam=1000.0, spacing=50.0):
    """Small graph with explicit bidirectional link capacities.

    ``pair_capacities`` maps unordered node pairs to a capacity applied in
    both directions.
    """
    nodes = tuple(
        Gnb(id=i, position=(i * spacing, 0.0, 10.0), demand_mbps=demands[i])
        for i in range(n_nodes)
    )
    edges = []
    for (a, b), cap in sorted(pair_capacities.items()):
        edges.append(CandidateEdge(src=a, dst=b, snr_db=30.0, capacity_mbps=cap))
        edges.append(CandidateEdge(src=b, dst=a, snr_db=30.0, capacity_mbps=cap))
    return ScenarioGraph(
        nodes=nodes, edges=tuple(edges), lambda_mbps=lam, area_km2=1.0
    )


def ring_graph(n, capacity=1000.0, demand=100.0):
    pairs = {}
    for i in range(n):
        a, b = i, (i + 1) % n
        pairs[min(a, b), max(a, b)] = capacity
    return hand_graph(n, pairs, [demand] * n)


def star_graph(n_leaves, capacity=1000.0, demand=100.0):
    pairs = {(0, i): capacity for i in range(1, n_leaves + 1)}
    return hand_graph(n_leaves + 1, pairs, [demand] * (n_leaves + 1))


@pytest.fixture
def two_node_graph():
    return hand_graph(2, {(0, 1): 800.0}, [500.0, 500.0])
