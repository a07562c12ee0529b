"""Model building: instances, deterministic equivalents, audits, MPS io."""

from .audit import AuditReport, audit_solution
from .formulate import (
    CommodityArcs,
    Instance,
    first_stage_cost,
    formulate,
    formulate_second_stage,
    hauler_rental_cost,
    outsource_cost,
    truck_rental_cost,
    usable_arcs,
)
from .model import INF, MilpModel, Row, Variable, VarKind, VarMap
from .mps import export_model, parse_mps, parse_solution_doc, write_solution_doc

__all__ = [
    "AuditReport",
    "CommodityArcs",
    "INF",
    "Instance",
    "MilpModel",
    "Row",
    "VarKind",
    "VarMap",
    "Variable",
    "audit_solution",
    "export_model",
    "first_stage_cost",
    "formulate",
    "formulate_second_stage",
    "hauler_rental_cost",
    "outsource_cost",
    "parse_mps",
    "parse_solution_doc",
    "truck_rental_cost",
    "usable_arcs",
    "write_solution_doc",
]
