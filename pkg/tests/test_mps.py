import subprocess
import sys

import pytest

from iabplan.errors import (
    MpsFormatError,
    ParameterError,
    SolutionParseError,
    SolutionValidationError,
    SolverCommandError,
)
from iabplan.model import PlanParams, build_model
from iabplan.mps import (
    _sanitize,
    export_mps,
    mps_row_names,
    mps_variable_names,
    parse_solution_file,
    read_mps,
    run_external,
)
from iabplan.solve import SolveLimits, solve_exact
from iabplan.validate import validate_solution

from conftest import hand_graph, synthetic_instance

BUNDLED_SOLVER = f"{sys.executable} -m iabplan._mps_adapter {{mps}} {{sol}}"


def stub_command(tmp_path, body):
    script = tmp_path / "stub.py"
    script.write_text(body)
    return f"{sys.executable} {script} {{mps}} {{sol}}"


class TestNames:
    def test_sanitization_is_collision_free(self):
        mapping = _sanitize(["u[0,1]", "u_0_1", "u(0;1)", "plain"])
        assert mapping["plain"] == "plain"
        assert len(set(mapping.values())) == 4
        for name in mapping.values():
            assert all(ch.isalnum() or ch in "_." for ch in name)

    def test_model_names_are_deterministic(self):
        _, _, model = synthetic_instance(5, 1, 1)
        assert mps_variable_names(model) == mps_variable_names(model)
        assert mps_row_names(model) == mps_row_names(model)


class TestRoundTrip:
    def test_single_node_model(self, tmp_path):
        g = hand_graph(1, {}, [100.0])
        model = build_model(g, PlanParams(redundancy=1, flow_enabled=False))
        path = tmp_path / "m.mps"
        export_mps(model, path)
        parsed = read_mps(path)
        assert parsed["objective_row"] == "OBJ"
        assert set(parsed["columns"]) == {"u_0_0_1", "u_0_1_1", "u_0_2_1", "u_0_3_1"}
        assert parsed["integer"] == set(parsed["columns"])

    def test_coefficient_matrix_survives_round_trip(self, tmp_path):
        _, _, model = synthetic_instance(6, 3, 2)
        path = tmp_path / "m.mps"
        export_mps(model, path)
        parsed = read_mps(path)
        vnames = mps_variable_names(model)
        rnames = mps_row_names(model)
        sense_tag = {"<=": "L", ">=": "G", "=": "E"}
        # Every constraint row, coefficient, and right-hand side must match.
        assert len(parsed["rows"]) == len(model.constraints)
        var_by_index = {v.index: v.name for v in model.variables}
        for con in model.constraints:
            rname = rnames[con.name]
            assert parsed["rows"][rname] == sense_tag[con.sense]
            assert parsed["rhs"].get(rname, 0.0) == pytest.approx(con.rhs)
            for idx, coef in con.coeffs:
                vname = vnames[var_by_index[idx]]
                assert parsed["columns"][vname][rname] == pytest.approx(coef)
        # Objective coefficients and integrality flags.
        obj = {vnames[var_by_index[i]]: c for i, c in model.objective}
        for name, coefs in parsed["columns"].items():
            assert coefs.get("OBJ", 0.0) == pytest.approx(obj.get(name, 0.0))
        expected_int = {vnames[v.name] for v in model.variables if v.is_integer}
        assert parsed["integer"] == expected_int

    def test_bounds_for_continuous_vars(self, tmp_path):
        _, _, model = synthetic_instance(5, 2, 1)
        path = tmp_path / "m.mps"
        export_mps(model, path)
        parsed = read_mps(path)
        vnames = mps_variable_names(model)
        for v in model.variables:
            if v.kind[0] == "a":
                assert parsed["bounds"][vnames[v.name]][1] == 1.0

    def test_reader_rejects_garbage(self, tmp_path):
        bad = tmp_path / "bad.mps"
        bad.write_text("GARBAGE SECTION\n  x y z\n")
        with pytest.raises(MpsFormatError):
            read_mps(bad)


class TestSolutionParser:
    def test_reads_values_and_objective(self, tmp_path):
        f = tmp_path / "s.sol"
        f.write_text("# comment\n=obj= 3.0\nu_0_0_1 1\nu_1_0_1 0.0\n")
        values, obj = parse_solution_file(f)
        assert obj == 3.0
        assert values == {"u_0_0_1": 1.0, "u_1_0_1": 0.0}

    def test_rejects_malformed_lines(self, tmp_path):
        f = tmp_path / "s.sol"
        f.write_text("u_0_0_1 1 extra\n")
        with pytest.raises(SolutionParseError, match="line 1"):
            parse_solution_file(f)
        f.write_text("u_0_0_1 not-a-number\n")
        with pytest.raises(SolutionParseError, match="bad value"):
            parse_solution_file(f)


class TestRunExternal:
    def test_template_placeholders_required(self):
        _, _, model = synthetic_instance(5, 1, 1)
        with pytest.raises(ParameterError, match="placeholder"):
            run_external(model, "solver {mps}")

    def test_bundled_adapter_matches_native(self):
        graph, params, model = synthetic_instance(6, 2, 1)
        external = run_external(model, BUNDLED_SOLVER, SolveLimits(time_limit_s=120))
        native = solve_exact(model)
        assert external.objective == native.objective
        assert validate_solution(graph, params, external).passed

    def test_nonzero_exit_raises_command_error(self, tmp_path):
        _, _, model = synthetic_instance(5, 1, 1)
        cmd = stub_command(tmp_path, "import sys; sys.exit(3)")
        with pytest.raises(SolverCommandError) as err:
            run_external(model, cmd)
        assert err.value.returncode == 3

    def test_unparseable_output_raises_parse_error(self, tmp_path):
        _, _, model = synthetic_instance(5, 1, 1)
        cmd = stub_command(
            tmp_path,
            "import sys\nopen(sys.argv[2], 'w').write('one two three\\n')",
        )
        with pytest.raises(SolutionParseError):
            run_external(model, cmd)

    def test_missing_solution_file_raises_parse_error(self, tmp_path):
        _, _, model = synthetic_instance(5, 1, 1)
        cmd = stub_command(tmp_path, "import sys")
        with pytest.raises(SolutionParseError, match="no solution file"):
            run_external(model, cmd)

    def test_infeasible_assignment_fails_validation(self, tmp_path):
        graph, _, model = synthetic_instance(5, 1, 1)
        # Claim a single donor with no tree structure at all: in-degree and
        # membership checks must reject it.
        body = (
            "import sys\n"
            "open(sys.argv[2], 'w').write('u_%d_0_1 1\\n')\n" % graph.node_ids()[0]
        )
        with pytest.raises(SolutionValidationError) as err:
            run_external(model, stub_command(tmp_path, body))
        assert not err.value.report.passed

    def test_unknown_variable_name_rejected(self, tmp_path):
        _, _, model = synthetic_instance(5, 1, 1)
        cmd = stub_command(
            tmp_path,
            "import sys\nopen(sys.argv[2], 'w').write('mystery_var 1\\n')",
        )
        with pytest.raises(SolutionParseError, match="mystery_var"):
            run_external(model, cmd)


class TestBundledAdapterCli:
    def test_usage_error(self):
        proc = subprocess.run(
            [sys.executable, "-m", "iabplan._mps_adapter"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 2
