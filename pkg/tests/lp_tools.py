"""Minimal reader/solver for the LP files this toolkit writes.

Parses the emitted subset of the format (linear terms, <=/>=/= rows, bounds,
binaries) and solves with the HiGHS backend behind scipy.optimize.milp.
"""

from __future__ import annotations

import re

import numpy as np
from scipy import sparse
from scipy.optimize import Bounds, LinearConstraint, milp


def _parse_terms(expr: str) -> list[tuple[float, str]]:
    tokens = expr.replace("+", " + ").replace("-", " - ").split()
    terms: list[tuple[float, str]] = []
    sign = 1.0
    coeff: float | None = None
    for tok in tokens:
        if tok == "+":
            sign, coeff = 1.0, None
        elif tok == "-":
            sign, coeff = -1.0, None
        else:
            try:
                coeff = float(tok)
            except ValueError:
                terms.append((sign * (coeff if coeff is not None else 1.0), tok))
                sign, coeff = 1.0, None
    return terms


def parse_lp(text: str):
    objective: list[tuple[float, str]] = []
    constraints: list[tuple[str, list, str, float]] = []
    bounds: list[str] = []
    binaries: list[str] = []
    section = None
    buffer = ""
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("\\"):
            continue
        low = line.lower()
        if low in ("minimize", "subject to", "bounds", "binaries", "end"):
            section = low
            continue
        if section == "minimize":
            buffer += " " + line
        elif section == "subject to":
            name, body = line.split(":", 1)
            match = re.search(r"(<=|>=|=)\s*(-?\d+(?:\.\d+)?)\s*$", body)
            constraints.append(
                (name.strip(), _parse_terms(body[: match.start()]), match.group(1), float(match.group(2)))
            )
        elif section == "bounds":
            bounds.append(line)
        elif section == "binaries":
            binaries.extend(line.split())
    objective = _parse_terms(buffer.split(":", 1)[1])
    return objective, constraints, bounds, binaries


def solve_lp(text: str):
    """Objective value of the parsed model, or None when HiGHS fails."""
    objective, constraints, bound_lines, binaries = parse_lp(text)
    names: dict[str, int] = {}

    def vid(name: str) -> int:
        if name not in names:
            names[name] = len(names)
        return names[name]

    for _name, terms, _sense, _rhs in constraints:
        for _coeff, var in terms:
            vid(var)
    for _coeff, var in objective:
        vid(var)
    for var in binaries:
        vid(var)

    n = len(names)
    c = np.zeros(n)
    for coeff, var in objective:
        c[names[var]] += coeff
    lb = np.full(n, -np.inf)
    ub = np.full(n, np.inf)
    integrality = np.zeros(n)
    for var in binaries:
        j = names[var]
        lb[j], ub[j], integrality[j] = 0.0, 1.0, 1
    for line in bound_lines:
        match = re.match(r"(-?[\d.]+)\s*<=\s*(\S+)\s*<=\s*(-?[\d.]+)", line)
        if match:
            j = vid(match.group(2))
            lb[j], ub[j] = float(match.group(1)), float(match.group(3))
            continue
        match = re.match(r"(\S+)\s*=\s*(-?[\d.]+)", line)
        if match:
            j = vid(match.group(1))
            lb[j] = ub[j] = float(match.group(2))

    rows, cols, vals, cl, cu = [], [], [], [], []
    for ri, (_name, terms, sense, rhs) in enumerate(constraints):
        for coeff, var in terms:
            rows.append(ri)
            cols.append(names[var])
            vals.append(coeff)
        if sense == "<=":
            cl.append(-np.inf)
            cu.append(rhs)
        elif sense == ">=":
            cl.append(rhs)
            cu.append(np.inf)
        else:
            cl.append(rhs)
            cu.append(rhs)
    matrix = sparse.csr_matrix((vals, (rows, cols)), shape=(len(constraints), n))
    result = milp(
        c=c,
        constraints=LinearConstraint(matrix, cl, cu),
        bounds=Bounds(lb, ub),
        integrality=integrality,
    )
    if result.status != 0:
        return None
    return result.fun
