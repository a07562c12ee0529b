"""Solver-agnostic linear model representation.

A MilpModel is a minimization objective over named, bounded variables plus
sparse linear rows. Variable and row names are mandatory and unique; they
double as the wire identifiers in MPS exports and solution documents.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

from ..errors import ValidationError

INF = math.inf


class VarKind(str, Enum):
    CONTINUOUS = "continuous"
    INTEGER = "integer"
    BINARY = "binary"


SENSE_LE = "<="
SENSE_GE = ">="
SENSE_EQ = "="
_SENSES = (SENSE_LE, SENSE_GE, SENSE_EQ)


@dataclass
class Variable:
    name: str
    lb: float
    ub: float
    kind: VarKind
    obj: float

    @property
    def is_integer(self) -> bool:
        return self.kind is not VarKind.CONTINUOUS


@dataclass
class Row:
    name: str
    coeffs: tuple[tuple[int, float], ...]
    sense: str
    rhs: float

    def activity(self, values: Mapping[int, float]) -> float:
        return math.fsum(c * values.get(j, 0.0) for j, c in self.coeffs)

    def violation(self, values: Mapping[int, float]) -> float:
        """Nonnegative amount by which the row is broken."""
        act = self.activity(values)
        if self.sense == SENSE_LE:
            return max(0.0, act - self.rhs)
        if self.sense == SENSE_GE:
            return max(0.0, self.rhs - act)
        return abs(act - self.rhs)


@dataclass
class MilpModel:
    """Minimization MILP built incrementally."""

    name: str = "model"
    variables: list[Variable] = field(default_factory=list)
    rows: list[Row] = field(default_factory=list)
    _var_ids: dict[str, int] = field(default_factory=dict, repr=False)
    _row_names: set[str] = field(default_factory=set, repr=False)

    def add_variable(
        self, name: str, lb: float, ub: float, kind: VarKind, obj: float = 0.0
    ) -> int:
        if not name:
            raise ValidationError("variable name is mandatory")
        if name in self._var_ids:
            raise ValidationError(f"duplicate variable name {name!r}")
        if lb > ub:
            raise ValidationError(f"variable {name}: lb {lb} exceeds ub {ub}")
        self.variables.append(Variable(name, float(lb), float(ub), kind, float(obj)))
        self._var_ids[name] = len(self.variables) - 1
        return len(self.variables) - 1

    def add_row(
        self, name: str, coeffs: Iterable[tuple[int, float]], sense: str, rhs: float
    ) -> int:
        if not name:
            raise ValidationError("row name is mandatory")
        if name in self._row_names:
            raise ValidationError(f"duplicate row name {name!r}")
        if sense not in _SENSES:
            raise ValidationError(f"row {name}: bad sense {sense!r}")
        frozen = tuple((int(j), float(c)) for j, c in coeffs)
        for j, _ in frozen:
            if not 0 <= j < len(self.variables):
                raise ValidationError(f"row {name}: unknown variable id {j}")
        self.rows.append(Row(name, frozen, sense, float(rhs)))
        self._row_names.add(name)
        return len(self.rows) - 1

    @property
    def num_variables(self) -> int:
        return len(self.variables)

    @property
    def num_rows(self) -> int:
        return len(self.rows)

    @property
    def num_integer_variables(self) -> int:
        return sum(1 for v in self.variables if v.is_integer)

    def var_id(self, name: str) -> int:
        try:
            return self._var_ids[name]
        except KeyError:
            raise ValidationError(f"unknown variable name {name!r}") from None

    def objective_value(self, values: Mapping[int, float]) -> float:
        """Exactly rounded objective of an assignment (missing values are 0)."""
        return math.fsum(v.obj * values.get(j, 0.0) for j, v in enumerate(self.variables))

    def max_violation(self, values: Mapping[int, float]) -> tuple[float, str]:
        """Largest row violation and the name of the worst row."""
        worst, worst_name = 0.0, ""
        for row in self.rows:
            v = row.violation(values)
            if v > worst:
                worst, worst_name = v, row.name
        return worst, worst_name


@dataclass
class VarMap:
    """Semantic lookup from model meaning to variable ids.

    ``x`` maps service id to its contracted-count variable. ``y`` maps
    (service, size, scenario) under the loading patterns and
    (commodity, size, scenario) under hauler swapping. ``z`` maps
    (commodity, scenario) and ``f`` maps (commodity, arc, scenario).
    """

    pattern: str
    x: dict[int, int] = field(default_factory=dict)
    y: dict[tuple[int, int, int], int] = field(default_factory=dict)
    z: dict[tuple[int, int], int] = field(default_factory=dict)
    f: dict[tuple[int, int, int], int] = field(default_factory=dict)
    scenario_ids: tuple[int, ...] = ()

    def total_mapped(self) -> int:
        return len(self.x) + len(self.y) + len(self.z) + len(self.f)
