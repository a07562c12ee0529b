"""Validation and import of externally produced solutions."""

from __future__ import annotations

import math

from ..errors import ValidationError
from ..milp.model import MilpModel, VarMap
from ..milp.mps import parse_solution_doc
from .branch_bound import FEASIBLE, MilpSolution, SolveStats

IMPORT_TOL = 1e-6


def import_solution(
    model: MilpModel, varmap: VarMap | None, doc: str, *, tol: float = IMPORT_TOL
) -> MilpSolution:
    """Validate a solution document against the model and adopt it.

    Values are checked against bounds, integrality, and every constraint row
    within ``tol``; integer variables are snapped to the nearest integer.
    Variables missing from the document are taken as zero when zero lies
    inside their bounds, otherwise the document is rejected. The objective
    is always recomputed, never read from the document. Rejections list the
    worst violated rows by name.
    """
    named = parse_solution_doc(doc) if isinstance(doc, str) else dict(doc)
    values: dict[int, float] = {}
    problems: list[str] = []

    for name in named:
        model.var_id(name)  # raises for unknown names

    for j, var in enumerate(model.variables):
        if var.name in named:
            x = named[var.name]
        else:
            if var.lb - tol <= 0.0 <= var.ub + tol:
                x = 0.0
            else:
                problems.append(
                    f"variable {var.name} missing and 0 is outside [{var.lb}, {var.ub}]"
                )
                continue
        if x < var.lb - tol or x > var.ub + tol:
            problems.append(
                f"variable {var.name}={x!r} violates bounds [{var.lb}, {var.ub}]"
            )
            continue
        if var.is_integer:
            snapped = round(x)
            if abs(x - snapped) > tol:
                problems.append(f"variable {var.name}={x!r} is not integral")
                continue
            x = float(snapped)
        values[j] = float(min(max(x, var.lb), var.ub))

    if problems:
        raise ValidationError("solution rejected: " + "; ".join(problems[:5]))

    violations = sorted(
        ((row.violation(values), row.name) for row in model.rows), reverse=True
    )
    bad = [(v, name) for v, name in violations if v > tol]
    if bad:
        listed = ", ".join(f"{name} (residual {v:.3e})" for v, name in bad[:5])
        raise ValidationError(f"solution rejected: violated rows {listed}")

    _ = varmap  # reserved for semantic reporting; names are authoritative
    objective = model.objective_value(values)
    return MilpSolution(
        status=FEASIBLE,
        objective=objective,
        values=values,
        bound=-math.inf,
        stats=SolveStats(),
    )
