"""Plan a minimum-donor backhaul and cross-check it three ways.

Solves the redundant (two edge-disjoint trees per node) planning problem
on a small synthetic deployment, re-validates the answer with the
independent checker, and confirms optimality against the exhaustive
search, which is tractable at this size.
"""

from iabplan import (
    PlanParams,
    SolveLimits,
    brute_force_min_donors,
    build_model,
    donor_ratio,
    solve_exact,
    validate_solution,
)
from iabplan.channel import build_synthetic_scenario

graph, removed = build_synthetic_scenario(8, 45.0, seed=2)
print(f"deployment: {len(graph.nodes)} gNBs, {len(graph.edges)} candidate links"
      + (f" ({len(removed)} out of range)" if removed else ""))

params = PlanParams(max_depth=3, max_out_degree=4, redundancy=2, flow_enabled=True)
model = build_model(graph, params)
print(f"model: {len(model.variables)} variables ({model.n_binary} binary), "
      f"{len(model.constraints)} constraints")

solution = solve_exact(model, SolveLimits(time_limit_s=120))
print(f"\n{solution.status} via {solution.engine} in {solution.solve_time_s:.1f}s: "
      f"{solution.objective} donors, rho = {donor_ratio(solution, graph):.3f}")
print("donors:", sorted(solution.donor_set))
for k, edges in sorted(solution.active_edges.items()):
    print(f"layer {k} tree edges:", list(edges))

report = validate_solution(graph, params, solution)
print("\nindependent validation:", report.summary())

count, _witness = brute_force_min_donors(graph, params)
print(f"exhaustive minimum: {count} donors "
      f"({'matches' if count == solution.objective else 'DIFFERS FROM'} the solver)")
