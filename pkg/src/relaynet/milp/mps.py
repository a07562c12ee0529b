"""MPS export and import plus the solution-document format.

The writer emits fixed-column MPS with INTORG/INTEND integrality markers.
Names longer than the classic eight characters are kept verbatim (the usual
relaxation accepted by modern readers); values use repr-level precision so a
write-parse cycle is lossless. The parser tokenizes by whitespace and covers
the emitted subset: ROWS, COLUMNS with markers, RHS, BOUNDS with
UP/LO/FX/BV/MI/PL/FR, and ENDATA.

Solution documents are two-column CSV (variable, value).
"""

from __future__ import annotations

import csv
import io
import math

from ..errors import ValidationError
from .model import INF, MilpModel, VarKind

_OBJ_ROW = "OBJ"
_SENSE_TO_MPS = {"<=": "L", ">=": "G", "=": "E"}
_MPS_TO_SENSE = {v: k for k, v in _SENSE_TO_MPS.items()}


def _num(x: float) -> str:
    return format(x, ".17g")


def export_model(model: MilpModel) -> str:
    """Serialize a model to MPS text.

    Every variable appears in COLUMNS (objective entry included even when
    zero, so declaration survives), integer and binary variables sit inside
    marker pairs, and bounds are emitted whenever they differ from the MPS
    default of [0, +inf).
    """
    for v in model.variables:
        if not v.name:
            raise ValidationError("cannot export a variable without a name")

    out = io.StringIO()
    out.write(f"NAME          {model.name}\n")
    out.write("ROWS\n")
    out.write(f" N  {_OBJ_ROW}\n")
    for row in model.rows:
        out.write(f" {_SENSE_TO_MPS[row.sense]}  {row.name}\n")

    entries: dict[int, list[tuple[str, float]]] = {j: [] for j in range(model.num_variables)}
    for j, v in enumerate(model.variables):
        entries[j].append((_OBJ_ROW, v.obj))
    for row in model.rows:
        for j, coef in row.coeffs:
            entries[j].append((row.name, coef))

    out.write("COLUMNS\n")
    in_int = False
    marker_no = 0
    for j, v in enumerate(model.variables):
        want_int = v.kind is not VarKind.CONTINUOUS
        if want_int != in_int:
            kind = "INTORG" if want_int else "INTEND"
            out.write(f"    MARKER{marker_no:<18d}'MARKER'                 '{kind}'\n")
            marker_no += 1
            in_int = want_int
        for row_name, coef in entries[j]:
            out.write(f"    {v.name:<24}  {row_name:<24}  {_num(coef)}\n")
    if in_int:
        out.write(f"    MARKER{marker_no:<18d}'MARKER'                 'INTEND'\n")

    out.write("RHS\n")
    for row in model.rows:
        if row.rhs != 0.0:
            out.write(f"    RHS                       {row.name:<24}  {_num(row.rhs)}\n")

    out.write("BOUNDS\n")
    for v in model.variables:
        if v.kind is VarKind.BINARY and v.lb == 0 and v.ub == 1:
            out.write(f" BV BND                       {v.name}\n")
            continue
        if v.lb == v.ub:
            out.write(f" FX BND                       {v.name:<24}  {_num(v.lb)}\n")
            continue
        if v.lb == 0 and v.ub == INF:
            continue
        if math.isinf(v.lb):
            out.write(f" MI BND                       {v.name}\n")
        elif v.lb != 0:
            out.write(f" LO BND                       {v.name:<24}  {_num(v.lb)}\n")
        if not math.isinf(v.ub):
            out.write(f" UP BND                       {v.name:<24}  {_num(v.ub)}\n")
    out.write("ENDATA\n")
    return out.getvalue()


def parse_mps(text: str) -> MilpModel:
    """Rebuild a MilpModel from MPS text (the subset export_model emits)."""
    model = MilpModel()
    section = None
    obj_row: str | None = None
    row_specs: list[tuple[str, str]] = []  # (sense, name) in declaration order
    col_entries: dict[str, list[tuple[str, float]]] = {}
    col_order: list[str] = []
    col_kind: dict[str, VarKind] = {}
    rhs: dict[str, float] = {}
    bounds: list[tuple[str, str, float | None]] = []
    in_int = False

    for raw in text.splitlines():
        line = raw.rstrip()
        if not line or line.startswith("*"):
            continue
        if not raw[0].isspace():
            head = line.split()
            keyword = head[0].upper()
            if keyword == "NAME":
                model.name = head[1] if len(head) > 1 else "model"
                section = None
            elif keyword in ("ROWS", "COLUMNS", "RHS", "RANGES", "BOUNDS"):
                section = keyword
            elif keyword == "ENDATA":
                break
            else:
                raise ValidationError(f"unknown MPS section {keyword!r}")
            continue

        tokens = line.split()
        if section == "ROWS":
            sense, name = tokens[0].upper(), tokens[1]
            if sense == "N":
                if obj_row is None:
                    obj_row = name
            elif sense in _MPS_TO_SENSE:
                row_specs.append((_MPS_TO_SENSE[sense], name))
            else:
                raise ValidationError(f"bad row sense {sense!r}")
        elif section == "COLUMNS":
            if len(tokens) >= 3 and tokens[1] == "'MARKER'":
                in_int = tokens[2].strip("'").upper() == "INTORG"
                continue
            name = tokens[0]
            if name not in col_entries:
                col_entries[name] = []
                col_order.append(name)
                col_kind[name] = VarKind.INTEGER if in_int else VarKind.CONTINUOUS
            pairs = tokens[1:]
            if len(pairs) % 2:
                raise ValidationError(f"odd COLUMNS entry for {name!r}")
            for rn, val in zip(pairs[::2], pairs[1::2]):
                col_entries[name].append((rn, float(val)))
        elif section == "RHS":
            pairs = tokens[1:]
            for rn, val in zip(pairs[::2], pairs[1::2]):
                rhs[rn] = float(val)
        elif section == "RANGES":
            raise ValidationError("RANGES section is not supported")
        elif section == "BOUNDS":
            btype = tokens[0].upper()
            var = tokens[2]
            val = float(tokens[3]) if len(tokens) > 3 else None
            bounds.append((btype, var, val))
        elif section is None:
            raise ValidationError(f"data line outside any section: {line!r}")

    if obj_row is None:
        raise ValidationError("MPS file declares no objective row")

    lo: dict[str, float] = {}
    hi: dict[str, float] = {}
    for name in col_order:
        lo[name], hi[name] = 0.0, INF
    for btype, var, val in bounds:
        if var not in lo:
            raise ValidationError(f"bound for undeclared variable {var!r}")
        if btype == "UP":
            hi[var] = float(val)  # type: ignore[arg-type]
        elif btype == "LO":
            lo[var] = float(val)  # type: ignore[arg-type]
        elif btype == "FX":
            lo[var] = hi[var] = float(val)  # type: ignore[arg-type]
        elif btype == "BV":
            lo[var], hi[var] = 0.0, 1.0
            col_kind[var] = VarKind.BINARY
        elif btype == "MI":
            lo[var] = -INF
        elif btype == "PL":
            hi[var] = INF
        elif btype == "FR":
            lo[var], hi[var] = -INF, INF
        elif btype == "UI":
            hi[var] = float(val)  # type: ignore[arg-type]
        else:
            raise ValidationError(f"unsupported bound type {btype!r}")

    row_coeffs: dict[str, list[tuple[int, float]]] = {name: [] for _, name in row_specs}
    for name in col_order:
        obj = 0.0
        for rn, val in col_entries[name]:
            if rn == obj_row:
                obj += val
        kind = col_kind[name]
        if kind is VarKind.INTEGER and lo[name] == 0 and hi[name] == 1:
            kind = VarKind.BINARY
        vid = model.add_variable(name, lo[name], hi[name], kind, obj)
        for rn, val in col_entries[name]:
            if rn == obj_row:
                continue
            if rn not in row_coeffs:
                raise ValidationError(f"entry for undeclared row {rn!r}")
            row_coeffs[rn].append((vid, val))

    for sense, name in row_specs:
        model.add_row(name, row_coeffs[name], sense, rhs.get(name, 0.0))
    return model


def write_solution_doc(model: MilpModel, values: dict[int, float]) -> str:
    """Serialize an assignment as a (variable, value) CSV document."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["variable", "value"])
    for j, v in enumerate(model.variables):
        writer.writerow([v.name, _num(values.get(j, 0.0))])
    return out.getvalue()


def parse_solution_doc(text: str) -> dict[str, float]:
    """Parse a (variable, value) CSV document, header optional."""
    values: dict[str, float] = {}
    for i, row in enumerate(csv.reader(io.StringIO(text))):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) < 2:
            raise ValidationError(f"solution row {i}: expected 'variable,value'")
        name, raw = row[0].strip(), row[1].strip()
        if i == 0 and name.lower() == "variable":
            continue
        try:
            val = float(raw)
        except ValueError as exc:
            raise ValidationError(f"solution row {i}: bad value {raw!r}") from exc
        if name in values:
            raise ValidationError(f"solution row {i}: duplicate variable {name!r}")
        values[name] = val
    return values
