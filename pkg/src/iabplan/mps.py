"""Free-format MPS export, a matching reader, and the external-solver bridge.

The adapter contract for external solvers is deliberately small: the
command template receives ``{mps}`` and ``{sol}`` placeholders, and the
solution file it writes holds one ``variable_name value`` pair per
whitespace-separated line.  A line whose name is ``=obj=`` carries the
objective and is optional; variables missing from the file default to
zero.  Externally produced assignments are always re-validated before a
Solution is returned.
"""

from __future__ import annotations

import math
import re
import shlex
import subprocess
import tempfile
import time
from pathlib import Path

import numpy as np

from .errors import (
    MpsFormatError,
    ParameterError,
    SolutionParseError,
    SolutionValidationError,
    SolverCommandError,
)
from .model import MilpModel
from .solve import STATUS_OPTIMAL, Solution, SolveLimits, _extract
from .validate import validate_solution

_NAME_RE = re.compile(r"[^A-Za-z0-9_.]+")


def _sanitize(names: list[str]) -> dict[str, str]:
    """Deterministic MPS-safe names with a collision-free suffix scheme."""
    out: dict[str, str] = {}
    taken: set[str] = set()
    for name in names:
        base = _NAME_RE.sub("_", name).strip("_") or "x"
        cand = base
        n = 2
        while cand in taken:
            cand = f"{base}__{n}"
            n += 1
        taken.add(cand)
        out[name] = cand
    return out


def mps_variable_names(model: MilpModel) -> dict[str, str]:
    return _sanitize([v.name for v in model.variables])


def mps_row_names(model: MilpModel) -> dict[str, str]:
    return _sanitize([c.name for c in model.constraints])


def export_mps(model: MilpModel, path) -> None:
    """Write the model as a free-format MPS file (minimization)."""
    var_names = mps_variable_names(model)
    row_names = mps_row_names(model)
    obj_coefs = {}
    for idx, coef in model.objective:
        obj_coefs[idx] = obj_coefs.get(idx, 0.0) + coef

    sense_tag = {"<=": "L", ">=": "G", "=": "E"}
    lines = ["NAME          IABPLAN", "ROWS", " N  OBJ"]
    for con in model.constraints:
        lines.append(f" {sense_tag[con.sense]}  {row_names[con.name]}")

    # Column-major entries.
    per_var: dict[int, list[tuple[str, float]]] = {v.index: [] for v in model.variables}
    for con in model.constraints:
        rname = row_names[con.name]
        for idx, coef in con.coeffs:
            per_var[idx].append((rname, coef))

    lines.append("COLUMNS")
    marker_open = False
    marker_id = 0
    for var in model.variables:
        if var.is_integer != marker_open:
            kind = "'INTORG'" if var.is_integer else "'INTEND'"
            lines.append(f"    MARKER{marker_id}    'MARKER'    {kind}")
            marker_open = var.is_integer
            marker_id += 1
        vname = var_names[var.name]
        entries = []
        if var.index in obj_coefs and obj_coefs[var.index] != 0.0:
            entries.append(("OBJ", obj_coefs[var.index]))
        entries.extend(per_var[var.index])
        if not entries:
            entries.append(("OBJ", 0.0))
        for rname, coef in entries:
            lines.append(f"    {vname}  {rname}  {coef!r}")
    if marker_open:
        lines.append(f"    MARKER{marker_id}    'MARKER'    'INTEND'")

    lines.append("RHS")
    for con in model.constraints:
        if con.rhs != 0.0:
            lines.append(f"    RHS  {row_names[con.name]}  {con.rhs!r}")

    lines.append("RANGES")

    lines.append("BOUNDS")
    for var in model.variables:
        vname = var_names[var.name]
        if var.lb != 0.0:
            lines.append(f" LO BND  {vname}  {var.lb!r}")
        if math.isfinite(var.ub):
            lines.append(f" UP BND  {vname}  {var.ub!r}")
    lines.append("ENDATA")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_mps(path):
    """Parse a free-format MPS file written by :func:`export_mps`.

    Returns a dict with row senses/rhs, per-column coefficient maps,
    bounds, and the integer-variable set; used for round-trip checks.
    """
    rows: dict[str, str] = {}
    obj_name = None
    cols: dict[str, dict[str, float]] = {}
    rhs: dict[str, float] = {}
    bounds: dict[str, list] = {}
    integer: set[str] = set()
    section = None
    int_mode = False
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.rstrip()
        if not line or line.startswith("*"):
            continue
        if not line[0].isspace():
            head = line.split()[0].upper()
            if head in ("NAME", "ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS", "ENDATA", "OBJSENSE"):
                section = head
                continue
            raise MpsFormatError(f"unexpected section line: {line!r}")
        tok = line.split()
        if section == "ROWS":
            if len(tok) != 2:
                raise MpsFormatError(f"bad ROWS line: {line!r}")
            kind, name = tok[0].upper(), tok[1]
            if kind == "N":
                obj_name = obj_name or name
            elif kind in ("L", "G", "E"):
                rows[name] = kind
            else:
                raise MpsFormatError(f"unknown row sense {kind!r}")
        elif section == "COLUMNS":
            if len(tok) >= 3 and tok[1] == "'MARKER'":
                int_mode = tok[2] == "'INTORG'"
                continue
            if len(tok) not in (3, 5):
                raise MpsFormatError(f"bad COLUMNS line: {line!r}")
            name = tok[0]
            if int_mode:
                integer.add(name)
            col = cols.setdefault(name, {})
            for off in range(1, len(tok), 2):
                try:
                    col[tok[off]] = col.get(tok[off], 0.0) + float(tok[off + 1])
                except ValueError as exc:
                    raise MpsFormatError(f"bad coefficient in {line!r}") from exc
        elif section == "RHS":
            for off in range(1, len(tok), 2):
                rhs[tok[off]] = float(tok[off + 1])
        elif section == "RANGES":
            raise MpsFormatError("RANGES entries are not supported")
        elif section == "BOUNDS":
            kind, _, name = tok[0].upper(), tok[1], tok[2]
            entry = bounds.setdefault(name, [0.0, math.inf])
            if kind == "LO":
                entry[0] = float(tok[3])
            elif kind == "UP":
                entry[1] = float(tok[3])
            elif kind == "BV":
                entry[0], entry[1] = 0.0, 1.0
                integer.add(name)
            elif kind == "FX":
                entry[0] = entry[1] = float(tok[3])
            else:
                raise MpsFormatError(f"unsupported bound kind {kind!r}")
    return {
        "objective_row": obj_name,
        "rows": rows,
        "columns": cols,
        "rhs": rhs,
        "bounds": bounds,
        "integer": integer,
    }


def parse_solution_file(path) -> tuple[dict[str, float], float | None]:
    """Read ``name value`` lines; returns (values, objective-or-None)."""
    values: dict[str, float] = {}
    objective = None
    for ln, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tok = line.split()
        if len(tok) != 2:
            raise SolutionParseError(f"line {ln}: expected 'name value', got {raw!r}")
        name, val = tok
        try:
            fval = float(val)
        except ValueError as exc:
            raise SolutionParseError(f"line {ln}: bad value {val!r}") from exc
        if name == "=obj=":
            objective = fval
        else:
            values[name] = fval
    return values, objective


def run_external(
    model: MilpModel, command_template: str, limits: SolveLimits | None = None
) -> Solution:
    """Export the model, invoke an MPS-consuming solver, and re-validate.

    The template must contain ``{mps}`` and ``{sol}`` placeholders.  Raises
    a distinct error for a failing command, an unreadable solution file,
    and an assignment that fails independent validation.
    """
    limits = limits or SolveLimits()
    if "{mps}" not in command_template or "{sol}" not in command_template:
        raise ParameterError(
            "command template must contain {mps} and {sol} placeholders"
        )
    start = time.monotonic()
    with tempfile.TemporaryDirectory(prefix="iabplan-") as tmp:
        mps_path = str(Path(tmp) / "model.mps")
        sol_path = str(Path(tmp) / "model.sol")
        export_mps(model, mps_path)
        command = command_template.format(mps=mps_path, sol=sol_path)
        try:
            proc = subprocess.run(
                shlex.split(command),
                capture_output=True,
                text=True,
                timeout=limits.time_limit_s,
            )
        except subprocess.TimeoutExpired as exc:
            raise SolverCommandError(command, -1, "timed out") from exc
        if proc.returncode != 0:
            raise SolverCommandError(command, proc.returncode, proc.stderr[-2000:])
        if not Path(sol_path).exists():
            raise SolutionParseError(f"solver wrote no solution file at {sol_path}")
        values, file_obj = parse_solution_file(sol_path)

    var_names = mps_variable_names(model)
    known = set(var_names.values())
    unknown = sorted(set(values) - known)
    if unknown:
        raise SolutionParseError(f"solution names not in model: {unknown[:5]}")
    x = np.zeros(len(model.variables))
    for var in model.variables:
        x[var.index] = values.get(var_names[var.name], 0.0)
    x_round = x.copy()
    for var in model.variables:
        if var.is_integer:
            x_round[var.index] = round(x[var.index])
    objective = float(sum(coef * x_round[idx] for idx, coef in model.objective))
    if file_obj is not None and abs(file_obj - objective) > 1e-4 * max(1.0, abs(objective)):
        raise SolutionParseError(
            f"objective line {file_obj} disagrees with recomputed {objective}"
        )
    elapsed = time.monotonic() - start
    solution = _extract(
        model, x_round, objective, 0.0, STATUS_OPTIMAL, "external", elapsed
    )
    report = validate_solution(model.graph, model.params, solution)
    if not report.passed:
        raise SolutionValidationError(report)
    return solution
