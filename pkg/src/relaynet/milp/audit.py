"""Feasibility audit of solutions against the instance, not the model.

The audit recomputes every constraint family of the active pattern directly
from instance data (capacity links, volume capacity, flow balance, bounds,
integrality, HOS caps on opened services, and daily consistency ties), so a
bug in model construction cannot hide behind itself.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from ..errors import ValidationError
from ..params import Consistency, Pattern
from .formulate import Instance, usable_arcs
from .model import VarMap

ROW_TOL = 1e-6
FLOW_TOL = 1e-9


@dataclass(frozen=True)
class AuditReport:
    max_inequality_violation: float
    worst_inequality: str
    max_flow_residual: float
    worst_flow: str
    max_bound_violation: float
    max_integrality_dev: float
    hos_violations: tuple[int, ...]
    consistency_violation: float

    def passes(self, row_tol: float = ROW_TOL, flow_tol: float = FLOW_TOL) -> bool:
        return (
            self.max_inequality_violation <= row_tol
            and self.max_flow_residual <= flow_tol
            and self.max_bound_violation <= row_tol
            and self.max_integrality_dev <= row_tol
            and not self.hos_violations
            and self.consistency_violation <= row_tol
        )


def audit_solution(
    inst: Instance,
    vm: VarMap,
    values: Mapping[int, float],
    design: Mapping[int, int] | None = None,
) -> AuditReport:
    """Recompute all pattern constraints for a solution.

    X values come from the solution when the map carries first-stage
    variables, otherwise from ``design`` (second-stage audits).
    """
    services = inst.catalog.services
    tsn = inst.tsn
    sizes = tuple(h.size for h in inst.haulers)
    flu = inst.pattern in (Pattern.FLU_MCP, Pattern.FLU_SCP)

    if vm.x:
        x = {s.id: values.get(vm.x[s.id], 0.0) for s in services}
    elif design is not None:
        x = {s.id: float(design.get(s.id, 0)) for s in services}
    else:
        raise ValidationError("audit needs first-stage values or a design")

    worst_ineq, worst_ineq_name = 0.0, ""
    worst_flow, worst_flow_name = 0.0, ""
    worst_bound = 0.0
    worst_int = 0.0

    def track_ineq(violation: float, name: str) -> None:
        nonlocal worst_ineq, worst_ineq_name
        if violation > worst_ineq:
            worst_ineq, worst_ineq_name = violation, name

    def intdev(v: float) -> float:
        return abs(v - round(v))

    for s in services:
        xs = x[s.id]
        worst_bound = max(worst_bound, -xs, xs - s.capacity)
        worst_int = max(worst_int, intdev(xs))

    arcs_of = {k.id: usable_arcs(inst, k) for k in inst.commodities}

    for w in inst.scenarios.scenarios:
        fval = {
            (k.id, a): values.get(vm.f.get((k.id, a, w.id), -1), 0.0)
            for k in inst.commodities
            for a in arcs_of[k.id].all_arcs
        }
        zval = {k.id: values.get(vm.z.get((k.id, w.id), -1), 0.0) for k in inst.commodities}
        for k in inst.commodities:
            z = zval[k.id]
            worst_bound = max(worst_bound, -z, z - 1.0)
            worst_int = max(worst_int, intdev(z))
            for (kid, _a), fv in fval.items():
                if kid != k.id:
                    continue
                worst_bound = max(worst_bound, -fv)
                if inst.pattern is not Pattern.FLU_MCP:
                    worst_int = max(worst_int, intdev(fv))

        if flu:
            yval = {
                (s.id, u): values.get(vm.y.get((s.id, u, w.id), -1), 0.0)
                for s in services
                for u in sizes
            }
            for s in services:
                total = sum(yval[(s.id, u)] for u in sizes)
                track_ineq(total - x[s.id], f"eq3_s{s.id}_w{w.id}")
                for u in sizes:
                    worst_bound = max(worst_bound, -yval[(s.id, u)])
                    worst_int = max(worst_int, intdev(yval[(s.id, u)]))
            covered = sorted(inst.catalog.arc_index)
            for a in covered:
                cap = sum(
                    u * yval[(sid, u)] for sid in inst.catalog.arc_index[a] for u in sizes
                )
                if inst.pattern is Pattern.FLU_MCP:
                    load = sum(fval.get((k.id, a), 0.0) for k in inst.commodities)
                else:
                    load = sum(
                        w.volume(k.id) * fval.get((k.id, a), 0.0) for k in inst.commodities
                    )
                track_ineq(load - cap, f"eq4_arc{a}_w{w.id}")
        else:
            yval = {
                (k.id, u): values.get(vm.y.get((k.id, u, w.id), -1), 0.0)
                for k in inst.commodities
                for u in sizes
            }
            for k in inst.commodities:
                for u in sizes:
                    worst_bound = max(worst_bound, -yval[(k.id, u)])
                    worst_int = max(worst_int, intdev(yval[(k.id, u)]))
                vol = w.volume(k.id)
                supply = sum(u * yval[(k.id, u)] for u in sizes)
                track_ineq(vol * (1.0 - zval[k.id]) - supply, f"eq4_k{k.id}_w{w.id}")
            arc_load: dict[int, float] = {}
            for k in inst.commodities:
                for a in arcs_of[k.id].moving:
                    arc_load[a] = arc_load.get(a, 0.0) + fval.get((k.id, a), 0.0)
            for a, load in sorted(arc_load.items()):
                cap = sum(x[sid] for sid in inst.catalog.arc_index[a])
                track_ineq(load - cap, f"eq3_arc{a}_w{w.id}")

        for k in inst.commodities:
            vol = w.volume(k.id)
            ca = arcs_of[k.id]
            net: dict[tuple[int, int], float] = {n: 0.0 for n in ca.nodes}
            for a in ca.all_arcs:
                arc = tsn.arcs[a]
                fv = fval.get((k.id, a), 0.0)
                net[(arc.head_hub, arc.head_t)] = net.get((arc.head_hub, arc.head_t), 0.0) + fv
                net[(arc.tail_hub, arc.tail_t)] = net.get((arc.tail_hub, arc.tail_t), 0.0) - fv
            origin = (k.origin, k.entry_step)
            dest = (k.destination, k.due_step)
            for node, bal in sorted(net.items()):
                if inst.pattern is Pattern.FLU_MCP:
                    expect = (
                        vol * (zval[k.id] - 1.0)
                        if node == origin
                        else vol * (1.0 - zval[k.id])
                        if node == dest
                        else 0.0
                    )
                elif inst.pattern is Pattern.FLU_SCP:
                    expect = (
                        zval[k.id] - 1.0
                        if node == origin
                        else 1.0 - zval[k.id]
                        if node == dest
                        else 0.0
                    )
                else:
                    supply = sum(
                        values.get(vm.y.get((k.id, u, w.id), -1), 0.0) for u in sizes
                    )
                    expect = -supply if node == origin else supply if node == dest else 0.0
                resid = abs(bal - expect)
                if resid > worst_flow:
                    worst_flow = resid
                    worst_flow_name = f"eq5_k{k.id}_n{node[0]}t{node[1]}_w{w.id}"

    hos_bad = tuple(
        s.id
        for s in services
        if x[s.id] > 0.5
        and (
            s.on_duty_hours > inst.hos.max_on_duty_hours + 1e-9
            or s.driving_hours > inst.hos.max_driving_hours + 1e-9
        )
    )

    cons_violation = 0.0
    if inst.consistency is Consistency.DAILY:
        for group in inst.catalog.template_index.values():
            vals = [x[sid] for sid in group]
            cons_violation = max(cons_violation, max(vals) - min(vals))

    return AuditReport(
        max_inequality_violation=worst_ineq,
        worst_inequality=worst_ineq_name,
        max_flow_residual=worst_flow,
        worst_flow=worst_flow_name,
        max_bound_violation=worst_bound,
        max_integrality_dev=worst_int,
        hos_violations=hos_bad,
        consistency_violation=cons_violation,
    )
