"""Deterministic-equivalent model construction for all operational patterns.

The two-stage program opens services and contracts truckers first (integer
X per service), then per demand scenario assigns hauling capacity (Y),
routes commodities over the time-space network (F), or outsources them (Z).
All scenario blocks are embedded in one minimization model with expectation
weights on second-stage costs.

Row-name conventions, fixed for auditability and reused by the solution
importer: ``eq3_*`` capacity-assignment links, ``eq4_*`` volume-capacity
rows, ``eq5_*`` flow balance, ``cons_*`` schedule-consistency ties.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from ..demand import Commodity, Scenario, ScenarioSet
from ..errors import UnreachableError, ValidationError
from ..network import ArcKind, PhysicalNetwork, TimeSpaceNetwork, shortest_distance_miles
from ..params import Consistency, CostParams, HaulerOption, Pattern
from ..services import HosPolicy, Service, ServiceCatalog
from .model import INF, MilpModel, VarKind, VarMap


@dataclass
class Instance:
    """One solvable problem: network, catalog, demand, prices, and modes.

    When ``outsource_scales_with_volume`` is off, the outsourcing cost of a
    commodity is its per-vehicle price independent of the realized volume.
    """

    tsn: TimeSpaceNetwork
    catalog: ServiceCatalog
    commodities: tuple[Commodity, ...]
    scenarios: ScenarioSet
    costs: CostParams
    hauler_sizes: tuple[int, ...]
    pattern: Pattern
    consistency: Consistency
    hos: HosPolicy
    outsource_scales_with_volume: bool = True
    haulers: tuple[HaulerOption, ...] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self.haulers = self.costs.hauler_options(tuple(self.hauler_sizes))
        grid = self.tsn.grid
        priced = []
        for k in self.commodities:
            if k.due_step > grid.num_steps:
                raise ValidationError(
                    f"commodity {k.id}: due step {k.due_step} exceeds horizon {grid.num_steps}"
                )
            if k.origin >= self.tsn.num_hubs or k.destination >= self.tsn.num_hubs:
                raise ValidationError(f"commodity {k.id}: unknown hub")
            try:
                miles = shortest_distance_miles(self.pnet, k.origin, k.destination)
            except UnreachableError as exc:
                raise ValidationError(
                    f"commodity {k.id}: cannot price outsourcing, {exc}"
                ) from exc
            priced.append(
                replace(k, outsource_cost_per_vehicle=self.costs.outsource_per_vehicle_mile * miles)
            )
        self.commodities = tuple(sorted(priced, key=lambda k: k.id))
        known = {k.id for k in self.commodities}
        for s in self.scenarios.scenarios:
            extra = set(s.volumes) - known
            if extra:
                raise ValidationError(f"scenario {s.id}: volumes for unknown commodities {sorted(extra)}")

    @property
    def pnet(self) -> PhysicalNetwork:
        return self.tsn.pnet

    def commodity(self, commodity_id: int) -> Commodity:
        for k in self.commodities:
            if k.id == commodity_id:
                return k
        raise ValidationError(f"unknown commodity id {commodity_id}")


def first_stage_cost(inst: Instance, svc: Service) -> float:
    """Per-unit contracting cost of a service.

    Under hauler swapping the contracted unit is a driver-tractor pair, so
    the undiscounted tractor rate is added on top of the driver fee.
    """
    fee = svc.contract_fee
    if inst.pattern is Pattern.HS:
        fee = fee + inst.costs.tractor_hourly * svc.on_duty_hours
    return fee


def truck_rental_cost(inst: Instance, svc: Service, size: int) -> float:
    """Rental of one tractor-hauler pair assigned to a service (loading patterns)."""
    rate = inst.costs.tractor_hourly + inst.costs.hauler_hourly_by_size[size]
    return rate * svc.on_duty_hours


def hauler_rental_cost(inst: Instance, k: Commodity, size: int) -> float:
    """Rental of one hauler that stays with a commodity for its whole window."""
    hours = (k.due_step - k.entry_step) * inst.tsn.grid.step_hours
    return inst.costs.hauler_hourly_by_size[size] * hours


def outsource_cost(inst: Instance, k: Commodity, scenario: Scenario) -> float:
    """Third-party cost of one commodity in one scenario."""
    unit = k.outsource_cost_per_vehicle
    assert unit is not None
    if inst.outsource_scales_with_volume:
        return unit * scenario.volume(k.id)
    return unit


@dataclass(frozen=True)
class CommodityArcs:
    """Arcs a commodity may actually use.

    Starting set: service-covered moving arcs inside the commodity window
    plus holding arcs at the hubs those arcs touch. The time-space graph is
    acyclic, so any feasible flow decomposes into origin-destination paths;
    arcs off every such path are pruned (exactly correctness-preserving)."""

    moving: tuple[int, ...]
    holding: tuple[int, ...]
    nodes: tuple[tuple[int, int], ...]  # (hub, t) carrying flow-balance rows

    @property
    def all_arcs(self) -> tuple[int, ...]:
        return self.moving + self.holding


def usable_arcs(inst: Instance, k: Commodity) -> CommodityArcs:
    tsn = inst.tsn
    moving = sorted(
        a
        for a in inst.catalog.arc_index
        if tsn.arcs[a].tail_t >= k.entry_step and tsn.arcs[a].head_t <= k.due_step
    )
    hubs = {k.origin, k.destination}
    for a in moving:
        hubs.add(tsn.arcs[a].tail_hub)
        hubs.add(tsn.arcs[a].head_hub)
    holding = sorted(
        tsn.holding_lookup[(h, t)]
        for h in sorted(hubs)
        for t in range(k.entry_step, k.due_step)
    )

    candidates = moving + holding
    ends = {a: ((tsn.arcs[a].tail_hub, tsn.arcs[a].tail_t), (tsn.arcs[a].head_hub, tsn.arcs[a].head_t)) for a in candidates}
    fwd = _reach((k.origin, k.entry_step), ends, forward=True)
    bwd = _reach((k.destination, k.due_step), ends, forward=False)
    kept_moving = tuple(a for a in moving if ends[a][0] in fwd and ends[a][1] in bwd)
    kept_holding = tuple(a for a in holding if ends[a][0] in fwd and ends[a][1] in bwd)

    node_set = {(k.origin, k.entry_step), (k.destination, k.due_step)}
    for a in kept_moving + kept_holding:
        node_set.add(ends[a][0])
        node_set.add(ends[a][1])
    return CommodityArcs(
        moving=kept_moving, holding=kept_holding, nodes=tuple(sorted(node_set))
    )


def _reach(
    start: tuple[int, int],
    ends: dict[int, tuple[tuple[int, int], tuple[int, int]]],
    forward: bool,
) -> set[tuple[int, int]]:
    adj: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for tail, head in ends.values():
        if forward:
            adj.setdefault(tail, []).append(head)
        else:
            adj.setdefault(head, []).append(tail)
    seen = {start}
    stack = [start]
    while stack:
        node = stack.pop()
        for nxt in adj.get(node, ()):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def _hauler_count_cap(volume: float, sizes: tuple[int, ...]) -> dict[int, int]:
    return {u: int(math.ceil(volume / u)) if volume > 0 else 0 for u in sizes}


def formulate(inst: Instance) -> tuple[MilpModel, VarMap]:
    """Build the deterministic equivalent over all scenarios.

    Variable order is first stage then one block per scenario, each block
    ordered Y, Z, F by sorted semantic key, so identical instances always
    produce identical models.
    """
    model = MilpModel(name=f"relaynet_{inst.pattern.value}")
    vm = VarMap(pattern=inst.pattern.value)
    services = inst.catalog.services
    sizes = tuple(h.size for h in inst.haulers)
    scen = inst.scenarios.scenarios
    vm.scenario_ids = tuple(s.id for s in scen)

    for s in services:
        vm.x[s.id] = model.add_variable(
            f"X_s{s.id}", 0, s.capacity, VarKind.INTEGER, first_stage_cost(inst, s)
        )

    arcs_of = {k.id: usable_arcs(inst, k) for k in inst.commodities}

    for w in scen:
        p = w.probability
        _add_scenario_block(model, vm, inst, w, weight=p, sizes=sizes, arcs_of=arcs_of, fixed_x=None)

    if inst.consistency is Consistency.DAILY:
        for gi, key in enumerate(sorted(inst.catalog.template_index)):
            group = sorted(
                inst.catalog.template_index[key], key=lambda sid: (services[sid].cycle, sid)
            )
            for a, b in zip(group, group[1:]):
                model.add_row(
                    f"cons_g{gi}_s{a}_s{b}",
                    [(vm.x[a], 1.0), (vm.x[b], -1.0)],
                    "=",
                    0.0,
                )

    return model, vm


def formulate_second_stage(
    inst: Instance, design: dict[int, int], w: Scenario
) -> tuple[MilpModel, VarMap]:
    """Second-stage model for one scenario with the first stage fixed.

    ``design`` maps service id to its contracted count; services it omits
    count zero. The X columns are substituted into the right-hand sides, so
    the objective is the raw recourse cost of the scenario, unweighted and
    without contract fees.
    """
    services = inst.catalog.services
    known = {s.id for s in services}
    fixed: dict[int, int] = {}
    for sid, val in design.items():
        if sid not in known:
            raise ValidationError(f"design references unknown service id {sid}")
        cap = services[sid].capacity
        if not 0 <= val <= cap:
            raise ValidationError(f"design value {val} for service {sid} outside [0, {cap}]")
        fixed[sid] = int(val)
    for s in services:
        fixed.setdefault(s.id, 0)

    model = MilpModel(name=f"relaynet_{inst.pattern.value}_stage2_w{w.id}")
    vm = VarMap(pattern=inst.pattern.value, scenario_ids=(w.id,))
    sizes = tuple(h.size for h in inst.haulers)
    arcs_of = {k.id: usable_arcs(inst, k) for k in inst.commodities}
    _add_scenario_block(model, vm, inst, w, weight=1.0, sizes=sizes, arcs_of=arcs_of, fixed_x=fixed)
    return model, vm


def _add_scenario_block(
    model: MilpModel,
    vm: VarMap,
    inst: Instance,
    w: Scenario,
    weight: float,
    sizes: tuple[int, ...],
    arcs_of: dict[int, CommodityArcs],
    fixed_x: dict[int, int] | None,
) -> None:
    """Append the second-stage variables and rows of one scenario.

    With ``fixed_x`` given, first-stage columns are replaced by constants in
    the right-hand sides and no X terms are emitted.
    """
    services = inst.catalog.services
    tsn = inst.tsn
    pattern = inst.pattern
    flu = pattern in (Pattern.FLU_MCP, Pattern.FLU_SCP)

    if flu:
        for s in services:
            for u in sizes:
                vm.y[(s.id, u, w.id)] = model.add_variable(
                    f"Y_s{s.id}_u{u}_w{w.id}",
                    0,
                    s.capacity,
                    VarKind.INTEGER,
                    weight * truck_rental_cost(inst, s, u),
                )
    else:
        for k in inst.commodities:
            caps = _hauler_count_cap(w.volume(k.id), sizes)
            for u in sizes:
                vm.y[(k.id, u, w.id)] = model.add_variable(
                    f"Y_k{k.id}_u{u}_w{w.id}",
                    0,
                    caps[u],
                    VarKind.INTEGER,
                    weight * hauler_rental_cost(inst, k, u),
                )

    for k in inst.commodities:
        vm.z[(k.id, w.id)] = model.add_variable(
            f"Z_k{k.id}_w{w.id}", 0, 1, VarKind.BINARY, weight * outsource_cost(inst, k, w)
        )

    for k in inst.commodities:
        vol = w.volume(k.id)
        if pattern is Pattern.FLU_MCP:
            f_ub, f_kind = vol, VarKind.CONTINUOUS
        elif pattern is Pattern.FLU_SCP:
            f_ub, f_kind = 1, VarKind.BINARY
        else:
            f_ub, f_kind = sum(_hauler_count_cap(vol, sizes).values()), VarKind.INTEGER
        for a in arcs_of[k.id].all_arcs:
            vm.f[(k.id, a, w.id)] = model.add_variable(
                f"F_k{k.id}_a{a}_w{w.id}", 0, f_ub, f_kind, 0.0
            )

    def x_term(sid: int) -> float | None:
        """Fixed value of X when substituted, None when it is a column."""
        return None if fixed_x is None else float(fixed_x[sid])

    if flu:
        for s in services:
            coeffs = [(vm.y[(s.id, u, w.id)], 1.0) for u in sizes]
            fv = x_term(s.id)
            if fv is None:
                coeffs.append((vm.x[s.id], -1.0))
                model.add_row(f"eq3_s{s.id}_w{w.id}", coeffs, "<=", 0.0)
            else:
                model.add_row(f"eq3_s{s.id}_w{w.id}", coeffs, "<=", fv)

        arc_users: dict[int, list[int]] = {}
        for k in inst.commodities:
            for a in arcs_of[k.id].moving:
                arc_users.setdefault(a, []).append(k.id)
        for a in sorted(arc_users):
            coeffs = []
            for sid in sorted(inst.catalog.arc_index[a]):
                for u in sizes:
                    coeffs.append((vm.y[(sid, u, w.id)], float(u)))
            for kid in arc_users[a]:
                scale = 1.0 if pattern is Pattern.FLU_MCP else w.volume(kid)
                coeffs.append((vm.f[(kid, a, w.id)], -scale))
            model.add_row(f"eq4_arc{a}_w{w.id}", coeffs, ">=", 0.0)
    else:
        arc_users = {}
        for k in inst.commodities:
            for a in arcs_of[k.id].moving:
                arc_users.setdefault(a, []).append(k.id)
        for a in sorted(arc_users):
            coeffs = [(vm.f[(kid, a, w.id)], 1.0) for kid in arc_users[a]]
            covering = sorted(inst.catalog.arc_index[a])
            fixed_cap = 0.0
            for sid in covering:
                fv = x_term(sid)
                if fv is None:
                    coeffs.append((vm.x[sid], -1.0))
                else:
                    fixed_cap += fv
            model.add_row(f"eq3_arc{a}_w{w.id}", coeffs, "<=", fixed_cap)

        for k in inst.commodities:
            vol = w.volume(k.id)
            coeffs = [(vm.y[(k.id, u, w.id)], float(u)) for u in sizes]
            coeffs.append((vm.z[(k.id, w.id)], vol))
            model.add_row(f"eq4_k{k.id}_w{w.id}", coeffs, ">=", vol)

    for k in inst.commodities:
        vol = w.volume(k.id)
        ca = arcs_of[k.id]
        incident_in: dict[tuple[int, int], list[int]] = {}
        incident_out: dict[tuple[int, int], list[int]] = {}
        for a in ca.all_arcs:
            arc = tsn.arcs[a]
            incident_out.setdefault((arc.tail_hub, arc.tail_t), []).append(a)
            incident_in.setdefault((arc.head_hub, arc.head_t), []).append(a)
        origin_node = (k.origin, k.entry_step)
        dest_node = (k.destination, k.due_step)
        for node in ca.nodes:
            ins = incident_in.get(node, [])
            outs = incident_out.get(node, [])
            if not ins and not outs and node not in (origin_node, dest_node):
                continue
            coeffs = [(vm.f[(k.id, a, w.id)], 1.0) for a in ins]
            coeffs += [(vm.f[(k.id, a, w.id)], -1.0) for a in outs]
            rhs = 0.0
            if node == origin_node:
                if inst.pattern is Pattern.FLU_MCP:
                    coeffs.append((vm.z[(k.id, w.id)], -vol))
                    rhs = -vol
                elif inst.pattern is Pattern.FLU_SCP:
                    coeffs.append((vm.z[(k.id, w.id)], -1.0))
                    rhs = -1.0
                else:
                    coeffs += [(vm.y[(k.id, u, w.id)], 1.0) for u in sizes]
            elif node == dest_node:
                if inst.pattern is Pattern.FLU_MCP:
                    coeffs.append((vm.z[(k.id, w.id)], vol))
                    rhs = vol
                elif inst.pattern is Pattern.FLU_SCP:
                    coeffs.append((vm.z[(k.id, w.id)], 1.0))
                    rhs = 1.0
                else:
                    coeffs += [(vm.y[(k.id, u, w.id)], -1.0) for u in sizes]
            model.add_row(
                f"eq5_k{k.id}_n{node[0]}t{node[1]}_w{w.id}", coeffs, "=", rhs
            )
