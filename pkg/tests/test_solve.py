import math
from dataclasses import replace

import pytest

from iabplan.errors import ParameterError
from iabplan.model import Constraint, PlanParams, build_model
from iabplan.oracle import brute_force_min_donors
from iabplan.solve import (
    STATUS_FEASIBLE_GAP,
    STATUS_INFEASIBLE,
    STATUS_OPTIMAL,
    STATUS_TIMEOUT,
    SolveLimits,
    donor_ratio,
    project_solution,
    solution_from_dict,
    solution_to_dict,
    solve_exact,
)
from iabplan.validate import validate_solution

from conftest import hand_graph, ring_graph, synthetic_instance


class TestEngines:
    @pytest.mark.parametrize("engine", ["bb", "milp"])
    def test_engines_agree_and_validate(self, engine):
        graph, params, model = synthetic_instance(6, 5, 2)
        count, _ = brute_force_min_donors(graph, params)
        sol = solve_exact(model, engine=engine)
        assert sol.status == STATUS_OPTIMAL
        assert sol.gap == 0.0
        assert sol.objective == count
        assert validate_solution(graph, params, sol).passed

    @pytest.mark.parametrize("engine", ["bb", "milp"])
    def test_deterministic_reruns(self, engine):
        _, _, model = synthetic_instance(6, 7, 1)
        a = solve_exact(model, engine=engine)
        b = solve_exact(model, engine=engine)
        assert a.donor_set == b.donor_set
        assert a.objective == b.objective
        assert a.depths == b.depths
        assert a.active_edges == b.active_edges

    def test_auto_routes_by_size(self):
        _, _, small = synthetic_instance(5, 1, 1)
        sol = solve_exact(small)
        assert sol.engine == "bb"
        _, _, big = synthetic_instance(8, 1, 2, mimo_layers=2)
        assert big.n_binary > 90
        sol2 = solve_exact(big, SolveLimits(time_limit_s=60))
        assert sol2.engine == "milp"

    def test_unknown_engine_rejected(self):
        _, _, model = synthetic_instance(5, 1, 1)
        with pytest.raises(ParameterError):
            solve_exact(model, engine="cplex")

    def test_empty_model(self):
        from iabplan.scenario import ScenarioGraph

        g = ScenarioGraph(nodes=(), edges=(), lambda_mbps=1000.0, area_km2=1.0)
        model = build_model(g, PlanParams(redundancy=1, flow_enabled=False))
        sol = solve_exact(model)
        assert sol.status == STATUS_OPTIMAL
        assert sol.objective == 0


class TestStatuses:
    def make_infeasible(self, model):
        # Force the donor count to be negative.
        poisoned = Constraint(
            name="impossible[0]",
            coeffs=model.objective,
            sense="<=",
            rhs=-1.0,
        )
        return replace(model, constraints=model.constraints + (poisoned,))

    @pytest.mark.parametrize("engine", ["bb", "milp"])
    def test_infeasible_status(self, engine):
        _, _, model = synthetic_instance(5, 2, 1)
        sol = solve_exact(self.make_infeasible(model), engine=engine)
        assert sol.status == STATUS_INFEASIBLE

    def test_native_time_limit_returns_trivial_incumbent(self):
        graph, _, model = synthetic_instance(8, 1, 2)
        sol = solve_exact(model, SolveLimits(time_limit_s=0.05), engine="bb")
        assert sol.status == STATUS_FEASIBLE_GAP
        assert sol.objective <= len(graph.nodes)
        assert sol.gap > 0.0

    def test_milp_hard_timeout(self):
        _, _, model = synthetic_instance(8, 1, 2)
        sol = solve_exact(model, SolveLimits(time_limit_s=1e-4), engine="milp")
        assert sol.status in (STATUS_TIMEOUT, STATUS_FEASIBLE_GAP)
        if sol.status == STATUS_TIMEOUT:
            assert not math.isfinite(sol.objective)

    def test_gap_zero_iff_optimal(self):
        graph, params, model = synthetic_instance(6, 3, 2)
        sol = solve_exact(model)
        assert (sol.gap == 0.0) == (sol.status == STATUS_OPTIMAL)

    def test_reported_gap_bounds_distance_to_optimum(self):
        graph, params, model = synthetic_instance(8, 3, 2, mimo_layers=2)
        opt, _ = brute_force_min_donors(graph, params)
        sol = solve_exact(model, SolveLimits(time_limit_s=0.4), engine="bb")
        if sol.status == STATUS_FEASIBLE_GAP and math.isfinite(sol.gap):
            assert (sol.objective - opt) / sol.objective <= sol.gap + 1e-9

    def test_limits_validation(self):
        with pytest.raises(ParameterError):
            SolveLimits(time_limit_s=0.0)
        with pytest.raises(ParameterError):
            SolveLimits(gap_target=-0.1)


class TestSolutionShape:
    def test_closure_every_result_validates(self):
        for seed in (1, 2, 3, 4):
            graph, params, model = synthetic_instance(5, seed, 2)
            sol = solve_exact(model)
            assert validate_solution(graph, params, sol).passed

    def test_objective_counts_donors(self):
        graph, params, model = synthetic_instance(6, 2, 1)
        sol = solve_exact(model)
        assert sol.objective == len(sol.donor_set)
        assert isinstance(sol.objective, int)

    def test_r_monotone_on_small_instances(self):
        for seed in (1, 2, 3):
            g1, p1, m1 = synthetic_instance(6, seed, 1)
            g2, p2, m2 = synthetic_instance(6, seed, 2)
            assert solve_exact(m2).objective >= solve_exact(m1).objective

    def test_projection_of_redundant_plan_validates_as_single_layer(self):
        graph, params, model = synthetic_instance(6, 4, 2)
        sol = solve_exact(model)
        projected = project_solution(sol, keep_layer=1)
        single = PlanParams(
            max_depth=params.max_depth,
            max_out_degree=params.max_out_degree,
            redundancy=1,
            flow_enabled=params.flow_enabled,
        )
        report = validate_solution(graph, single, projected)
        assert report.passed, report.summary()

    def test_donor_ratio(self):
        g18 = ring_graph(18)
        sol = replace(
            solve_exact(build_model(g18, PlanParams(redundancy=1, flow_enabled=False))),
            objective=3,
        )
        assert donor_ratio(sol, g18) == pytest.approx(3 / 18, abs=1e-9)
        g5, p5, m5 = synthetic_instance(5, 1, 1)
        count, witness = brute_force_min_donors(g5, p5)
        assert donor_ratio(witness, g5) == count / len(g5.nodes)

    def test_serialization_round_trip(self):
        graph, params, model = synthetic_instance(5, 6, 2)
        sol = solve_exact(model)
        doc = solution_to_dict(sol, params)
        back = solution_from_dict(doc)
        assert back.donor_set == sol.donor_set
        assert back.active_edges == sol.active_edges
        assert back.depths == sol.depths
        assert back.flows == sol.flows
        assert back.objective == sol.objective

    def test_non_integer_costs_supported(self):
        from iabplan.model import weighted_objective

        graph, params, model = synthetic_instance(5, 2, 1)
        costs = {i: 0.5 + 0.25 * i for i in graph.node_ids()}
        sol = solve_exact(weighted_objective(model, costs))
        assert sol.status == STATUS_OPTIMAL
        assert sol.objective == pytest.approx(
            sum(costs[i] for i in sol.donor_set), abs=1e-6
        )
