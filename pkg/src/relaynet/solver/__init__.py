"""Exact desk-scale solving: simplex LP core plus branch and bound."""

from .branch_bound import (
    BRANCH_MOST_FRACTIONAL,
    BRANCH_PSEUDO_COST,
    FEASIBLE,
    INFEASIBLE,
    LIMIT,
    OPTIMAL,
    UNBOUNDED,
    MilpSolution,
    SolveOptions,
    SolveStats,
    solve_milp,
)
from .simplex import (
    STATUS_INFEASIBLE,
    STATUS_OPTIMAL,
    STATUS_UNBOUNDED,
    LpResult,
    LpSolution,
    StandardForm,
    solve_lp,
)
from .solution_io import import_solution

__all__ = [
    "BRANCH_MOST_FRACTIONAL",
    "BRANCH_PSEUDO_COST",
    "FEASIBLE",
    "INFEASIBLE",
    "LIMIT",
    "LpResult",
    "LpSolution",
    "MilpSolution",
    "OPTIMAL",
    "STATUS_INFEASIBLE",
    "STATUS_OPTIMAL",
    "STATUS_UNBOUNDED",
    "SolveOptions",
    "SolveStats",
    "StandardForm",
    "UNBOUNDED",
    "import_solution",
    "solve_lp",
    "solve_milp",
]
