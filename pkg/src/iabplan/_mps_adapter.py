"""Standalone MPS-consuming MILP solver process.

Usage: ``python -m iabplan._mps_adapter MODEL.mps OUT.sol``

Reads a free-format MPS file, solves it with the HiGHS branch-and-cut
behind scipy, and writes the solution in the adapter contract format:
one ``variable_name value`` per line plus an ``=obj=`` objective line.
Exists so any workflow built on the external-solver bridge can run
without a separately installed solver binary.
"""

from __future__ import annotations

import sys

import numpy as np
import scipy.optimize as sopt
import scipy.sparse as sp

from .mps import read_mps


def solve_mps_file(mps_path: str, sol_path: str) -> int:
    parsed = read_mps(mps_path)
    obj_row = parsed["objective_row"]
    rows = parsed["rows"]
    cols = sorted(parsed["columns"])
    col_index = {name: i for i, name in enumerate(cols)}
    n = len(cols)

    c = np.zeros(n)
    row_entries: dict[str, list[tuple[int, float]]] = {r: [] for r in rows}
    for name, coefs in parsed["columns"].items():
        j = col_index[name]
        for row_name, coef in coefs.items():
            if row_name == obj_row:
                c[j] += coef
            else:
                row_entries[row_name].append((j, coef))

    lb = np.zeros(n)
    ub = np.full(n, np.inf)
    for name, (lo, hi) in parsed["bounds"].items():
        j = col_index[name]
        lb[j], ub[j] = lo, hi
    integrality = np.zeros(n)
    for name in parsed["integer"]:
        integrality[col_index[name]] = 1

    data, ri, ci, lo_vec, hi_vec = [], [], [], [], []
    for r, name in enumerate(sorted(rows)):
        sense = rows[name]
        rhs = parsed["rhs"].get(name, 0.0)
        for j, coef in row_entries[name]:
            ri.append(r)
            ci.append(j)
            data.append(coef)
        if sense == "L":
            lo_vec.append(-np.inf)
            hi_vec.append(rhs)
        elif sense == "G":
            lo_vec.append(rhs)
            hi_vec.append(np.inf)
        else:
            lo_vec.append(rhs)
            hi_vec.append(rhs)
    A = sp.csr_matrix((data, (ri, ci)), shape=(len(rows), n))

    res = sopt.milp(
        c=c,
        constraints=[sopt.LinearConstraint(A, np.array(lo_vec), np.array(hi_vec))],
        integrality=integrality,
        bounds=sopt.Bounds(lb, ub),
    )
    if res.status != 0 or res.x is None:
        print(f"solve failed with status {res.status}", file=sys.stderr)
        return 1
    with open(sol_path, "w", encoding="utf-8") as fh:
        fh.write(f"=obj= {float(c @ res.x)!r}\n")
        for name in cols:
            val = float(res.x[col_index[name]])
            if integrality[col_index[name]]:
                val = float(round(val))
            fh.write(f"{name} {val!r}\n")
    return 0


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    if len(argv) != 2:
        print(__doc__, file=sys.stderr)
        return 2
    return solve_mps_file(argv[0], argv[1])


if __name__ == "__main__":
    sys.exit(main())
