"""Shared test machinery: independent oracles and instance factories.

The brute-force oracle enumerates every integer assignment of a model
within its declared bounds and settles the continuous remainder with
scipy's LP solver, so it shares no code path with the package simplex or
branch and bound.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.optimize import linprog

import relaynet as rn

FEAS_TOL = 1e-9


def brute_force_optimum(model: rn.MilpModel, max_combos: int = 300_000):
    """Exhaustive optimum of a small MILP, or None when infeasible.

    Integer variables must have finite bounds. Rows touching only integer
    variables are checked arithmetically; the rest go to scipy linprog over
    the continuous variables.
    """
    int_ids = [j for j, v in enumerate(model.variables) if v.is_integer]
    cont_ids = [j for j, v in enumerate(model.variables) if not v.is_integer]
    cont_pos = {j: i for i, j in enumerate(cont_ids)}

    domains = []
    total = 1
    for j in int_ids:
        v = model.variables[j]
        if math.isinf(v.lb) or math.isinf(v.ub):
            raise ValueError(f"integer variable {v.name} lacks finite bounds")
        domain = list(range(int(math.ceil(v.lb)), int(math.floor(v.ub)) + 1))
        domains.append(domain)
        total *= len(domain)
        if total > max_combos:
            raise ValueError(f"enumeration space {total} exceeds cap {max_combos}")

    int_rows = []
    mixed_rows = []
    for row in model.rows:
        if any(j in cont_pos for j, _ in row.coeffs):
            mixed_rows.append(row)
        else:
            int_rows.append(row)

    a_ub, b_ub_template, a_eq, b_eq_template = [], [], [], []
    for row in mixed_rows:
        arr = np.zeros(len(cont_ids))
        for j, coef in row.coeffs:
            if j in cont_pos:
                arr[cont_pos[j]] = coef
        if row.sense == "<=":
            a_ub.append(arr)
            b_ub_template.append(row)
        elif row.sense == ">=":
            a_ub.append(-arr)
            b_ub_template.append(row)
        else:
            a_eq.append(arr)
            b_eq_template.append(row)
    bounds = [(model.variables[j].lb, model.variables[j].ub) for j in cont_ids]
    c_cont = np.array([model.variables[j].obj for j in cont_ids])

    def int_part_rhs(row, assignment) -> float:
        shift = sum(coef * assignment[j] for j, coef in row.coeffs if j in assignment)
        return row.rhs - shift

    best = None
    best_values = None
    for combo in itertools.product(*domains):
        assignment = dict(zip(int_ids, (float(v) for v in combo)))
        ok = True
        for row in int_rows:
            act = sum(coef * assignment[j] for j, coef in row.coeffs)
            if row.sense == "<=" and act > row.rhs + FEAS_TOL:
                ok = False
            elif row.sense == ">=" and act < row.rhs - FEAS_TOL:
                ok = False
            elif row.sense == "=" and abs(act - row.rhs) > FEAS_TOL:
                ok = False
            if not ok:
                break
        if not ok:
            continue

        if cont_ids:
            b_ub = []
            for row in b_ub_template:
                rhs = int_part_rhs(row, assignment)
                b_ub.append(rhs if row.sense == "<=" else -rhs)
            b_eq = [int_part_rhs(row, assignment) for row in b_eq_template]
            res = linprog(
                c_cont,
                A_ub=np.array(a_ub) if a_ub else None,
                b_ub=np.array(b_ub) if b_ub else None,
                A_eq=np.array(a_eq) if a_eq else None,
                b_eq=np.array(b_eq) if b_eq else None,
                bounds=bounds,
                method="highs",
            )
            if not res.success:
                continue
            values = dict(assignment)
            values.update({j: float(res.x[cont_pos[j]]) for j in cont_ids})
        else:
            values = dict(assignment)
        obj = model.objective_value(values)
        if best is None or obj < best - 1e-12:
            best = obj
            best_values = values
    return best, best_values


def line_network_doc(num_hubs: int, miles=275.0, travel_steps: int = 1) -> dict:
    if isinstance(miles, (int, float)):
        miles = [float(miles)] * (num_hubs - 1)
    return {
        "hubs": [{"id": i, "name": f"H{i}"} for i in range(num_hubs)],
        "arcs": [
            {
                "from": i,
                "to": i + 1,
                "travel_steps": travel_steps,
                "distance_miles": miles[i],
            }
            for i in range(num_hubs - 1)
        ],
    }


def desk_hos() -> rn.HosPolicy:
    # 6h steps book a 12h round trip as driving time, so desk fixtures
    # relax the driving cap to two steps.
    return rn.HosPolicy(max_on_duty_hours=14.0, max_driving_hours=12.0)


def l3_instance(
    *,
    outsource_rate: float = 0.93,
    capacity: int = 2,
    volumes: dict[int, float] | None = None,
    pattern: rn.Pattern = rn.Pattern.FLU_MCP,
    hauler_sizes: tuple[int, ...] = (8,),
) -> rn.Instance:
    """Line A-B-C desk instance: T=2, one service per (pair, start 0),
    one commodity A->B."""
    pnet = rn.load_physical_network(line_network_doc(3))
    grid = rn.TimeGrid(step_hours=6.0, num_steps=2, cycle_steps=2, num_cycles=1)
    tsn = rn.build_time_space_network(pnet, grid)
    costs = rn.CostParams(outsource_per_vehicle_mile=outsource_rate, default_capacity=capacity)
    catalog = rn.enumerate_services(tsn, pnet, desk_hos(), costs, rn.Consistency.WEEKLY)
    k = rn.Commodity(id=0, origin=0, destination=1, entry_step=0, due_step=2)
    vols = volumes if volumes is not None else {0: 5.0}
    scen = rn.ScenarioSet(scenarios=(rn.Scenario(id=0, probability=1.0, volumes=vols),))
    return rn.Instance(
        tsn=tsn,
        catalog=catalog,
        commodities=(k,),
        scenarios=scen,
        costs=costs,
        hauler_sizes=hauler_sizes,
        pattern=pattern,
        consistency=rn.Consistency.WEEKLY,
        hos=desk_hos(),
    )


def tiny_instance(seed: int) -> rn.Instance:
    """Randomized micro-instance whose model stays within 12 integers."""
    rng = np.random.default_rng(seed)
    pattern = [rn.Pattern.FLU_MCP, rn.Pattern.FLU_SCP, rn.Pattern.HS][seed % 3]
    num_hubs = int(rng.integers(2, 4))
    miles = [float(rng.uniform(150, 400)) for _ in range(num_hubs - 1)]
    pnet = rn.load_physical_network(line_network_doc(num_hubs, miles))
    grid = rn.TimeGrid(step_hours=6.0, num_steps=3, cycle_steps=3, num_cycles=1)
    tsn = rn.build_time_space_network(pnet, grid)
    costs = rn.CostParams(
        outsource_per_vehicle_mile=float(rng.uniform(0.2, 1.6)), default_capacity=1
    )
    catalog = rn.enumerate_services(tsn, pnet, desk_hos(), costs, rn.Consistency.WEEKLY)

    n_services = 1 if pattern is rn.Pattern.FLU_SCP else min(2, len(catalog))
    picked = sorted(rng.choice(len(catalog), size=n_services, replace=False).tolist())
    rows = [
        {
            "route": list(catalog.services[i].route_hubs),
            "start_in_cycle": catalog.services[i].start_in_cycle,
        }
        for i in picked
    ]
    catalog = rn.apply_service_overrides(catalog, rows)

    if num_hubs == 2 and pattern is rn.Pattern.FLU_MCP:
        n_k = int(rng.integers(1, 3))
    else:
        n_k = 1
    kommodities = []
    for i in range(n_k):
        o = int(rng.integers(0, num_hubs - 1))
        d = int(rng.integers(o + 1, num_hubs))
        if rng.random() < 0.3:
            o, d = d, o
        entry = int(rng.integers(0, 2))
        due = int(rng.integers(entry + 1, 4))
        kommodities.append(
            rn.Commodity(id=i, origin=o, destination=d, entry_step=entry, due_step=due)
        )
    n_scen = 1 if pattern is not rn.Pattern.FLU_MCP else int(rng.integers(1, 3))
    prob = 1.0 / n_scen
    scenarios = []
    for w in range(n_scen):
        volumes = {k.id: float(rng.integers(0, 7)) for k in kommodities}
        if w == 0:
            volumes[kommodities[0].id] = float(rng.integers(1, 7))
        scenarios.append(rn.Scenario(id=w, probability=prob, volumes=volumes))
    scenarios = tuple(scenarios)
    return rn.Instance(
        tsn=tsn,
        catalog=catalog,
        commodities=tuple(kommodities),
        scenarios=rn.ScenarioSet(scenarios=scenarios, seed=seed),
        costs=costs,
        hauler_sizes=(8,) if rng.random() < 0.7 else (4,),
        pattern=pattern,
        consistency=rn.Consistency.WEEKLY,
        hos=desk_hos(),
    )


def battery_service_rows(inst: rn.Instance) -> list[dict]:
    """Override rows reproducing the battery's start-of-horizon pruning,
    usable against re-enumerated catalogs in either consistency mode."""
    return [
        {"route": list(s.route_hubs), "start_in_cycle": 0}
        for s in inst.catalog.services
    ]


def battery_instance(
    seed: int,
    *,
    pattern: rn.Pattern = rn.Pattern.FLU_MCP,
    hauler_sizes: tuple[int, ...] = (8,),
    num_scenarios: int = 5,
    capacity: int | None = None,
) -> rn.Instance:
    """Randomized 4-hub instance sized for full two-stage solves."""
    rng = np.random.default_rng(seed)
    miles = [float(rng.uniform(240, 320)) for _ in range(3)]
    pnet = rn.load_physical_network(line_network_doc(4, miles))
    grid = rn.TimeGrid(step_hours=6.0, num_steps=4, cycle_steps=4, num_cycles=1)
    tsn = rn.build_time_space_network(pnet, grid)
    cap = capacity if capacity is not None else int(rng.integers(2, 4))
    costs = rn.CostParams(default_capacity=cap)
    catalog = rn.enumerate_services(tsn, pnet, desk_hos(), costs, rn.Consistency.WEEKLY)
    rows = [
        {"route": list(s.route_hubs), "start_in_cycle": s.start_in_cycle}
        for s in catalog.services
        if s.start_t == 0
    ]
    catalog = rn.apply_service_overrides(catalog, rows)

    kommodities = (
        rn.Commodity(id=0, origin=0, destination=2, entry_step=0, due_step=3),
        rn.Commodity(id=1, origin=1, destination=3, entry_step=1, due_step=4),
    )
    spec = rn.DemandSpec(
        mean_volume=float(rng.uniform(2.0, 4.5)),
        dispersion=float(rng.uniform(0.4, 1.2)),
        east_share=0.8,
    )
    scen = rn.generate_scenarios(spec, kommodities, num_scenarios, seed=seed + 1000)
    return rn.Instance(
        tsn=tsn,
        catalog=catalog,
        commodities=kommodities,
        scenarios=scen,
        costs=costs,
        hauler_sizes=hauler_sizes,
        pattern=pattern,
        consistency=rn.Consistency.WEEKLY,
        hos=desk_hos(),
    )
