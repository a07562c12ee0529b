import math

import pytest

import relaynet as rn
from relaynet.milp import export_model, parse_mps, parse_solution_doc, write_solution_doc
from relaynet.milp.model import MilpModel, VarKind

from helpers import battery_instance, l3_instance, tiny_instance


def small_model():
    m = MilpModel(name="demo")
    x = m.add_variable("x", 0, 10, VarKind.CONTINUOUS, 2.0)
    m.add_row("r1", [(x, 1.0)], ">=", 3.0)
    return m


def test_sections_present():
    text = export_model(small_model())
    for section in ("NAME", "ROWS", "COLUMNS", "RHS", "BOUNDS", "ENDATA"):
        assert section in text
    assert " G  r1" in text


def test_binary_emitted_inside_markers():
    m = MilpModel(name="demo")
    z = m.add_variable("z", 0, 1, VarKind.BINARY, 1.0)
    m.add_row("r1", [(z, 1.0)], "<=", 1.0)
    text = export_model(m)
    org = text.index("INTORG")
    end = text.index("INTEND")
    zpos = text.index("z ", org)
    assert org < zpos < end
    assert " BV BND" in text


def test_unnamed_variable_is_internal_error():
    m = MilpModel(name="demo")
    m.add_variable("x", 0, 1, VarKind.CONTINUOUS, 0.0)
    m.variables[0].name = ""
    with pytest.raises(rn.ValidationError, match="name"):
        export_model(m)


def test_parse_round_trip_preserves_model():
    model, _ = rn.formulate(l3_instance())
    text = export_model(model)
    back = parse_mps(text)
    assert back.num_variables == model.num_variables
    assert back.num_rows == model.num_rows
    for v1, v2 in zip(model.variables, back.variables):
        assert v1.name == v2.name
        assert v1.obj == v2.obj
        assert v1.lb == v2.lb
        assert v1.ub == v2.ub
        assert v1.is_integer == v2.is_integer
    for r1, r2 in zip(model.rows, back.rows):
        assert r1.name == r2.name
        assert r1.sense == r2.sense
        assert r1.rhs == r2.rhs
        # column-major storage reorders entries within a row
        assert dict(r1.coeffs) == dict(r2.coeffs)


def test_solved_objective_survives_round_trip():
    for seed in (2, 9):
        inst = tiny_instance(seed)
        model, _ = rn.formulate(inst)
        sol = rn.solve_milp(model, rn.SolveOptions(rel_gap_tol=1e-12))
        reparsed = parse_mps(export_model(model))
        doc = write_solution_doc(model, sol.values)
        imported = rn.import_solution(reparsed, None, doc)
        assert imported.objective == pytest.approx(sol.objective, abs=1e-9)


def test_solution_doc_round_trip_exact():
    model, _ = rn.formulate(battery_instance(5, num_scenarios=2))
    sol = rn.solve_milp(model)
    doc = write_solution_doc(model, sol.values)
    named = parse_solution_doc(doc)
    for j, var in enumerate(model.variables):
        assert named[var.name] == sol.values[j]


def test_solution_doc_rejects_garbage():
    with pytest.raises(rn.ValidationError, match="bad value"):
        parse_solution_doc("variable,value\nx,abc\n")
    with pytest.raises(rn.ValidationError, match="duplicate"):
        parse_solution_doc("x,1\nx,2\n")


def test_parse_rejects_unsupported_sections():
    text = export_model(small_model()).replace("BOUNDS", "RANGES")
    with pytest.raises(rn.ValidationError):
        parse_mps(text)


def test_free_and_fixed_bounds_round_trip():
    m = MilpModel(name="demo")
    m.add_variable("free_var", -math.inf, math.inf, VarKind.CONTINUOUS, 1.0)
    m.add_variable("fixed_var", 2.5, 2.5, VarKind.CONTINUOUS, 1.0)
    m.add_variable("neg_lo", -4.0, 9.0, VarKind.CONTINUOUS, 1.0)
    m.add_row("r", [(0, 1.0), (1, 1.0), (2, 1.0)], "<=", 100.0)
    back = parse_mps(export_model(m))
    assert back.variables[0].lb == -math.inf and back.variables[0].ub == math.inf
    assert back.variables[1].lb == back.variables[1].ub == 2.5
    assert back.variables[2].lb == -4.0 and back.variables[2].ub == 9.0
