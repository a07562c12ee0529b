import math
from dataclasses import replace

import pytest

import relaynet as rn
from helpers import battery_instance, desk_hos, l3_instance, line_network_doc


def single_service_instance(pattern=rn.Pattern.FLU_MCP, volumes=None):
    pnet = rn.load_physical_network(line_network_doc(2))
    grid = rn.TimeGrid(step_hours=6.0, num_steps=2, cycle_steps=2, num_cycles=1)
    tsn = rn.build_time_space_network(pnet, grid)
    costs = rn.CostParams()
    catalog = rn.enumerate_services(tsn, pnet, desk_hos(), costs, rn.Consistency.WEEKLY)
    catalog = rn.apply_service_overrides(
        catalog, [{"route": [0, 1, 0], "start_in_cycle": 0}]
    )
    k = rn.Commodity(id=0, origin=0, destination=1, entry_step=0, due_step=2)
    scen = rn.ScenarioSet(
        scenarios=(rn.Scenario(id=0, probability=1.0, volumes=volumes or {0: 5.0}),)
    )
    return rn.Instance(
        tsn=tsn,
        catalog=catalog,
        commodities=(k,),
        scenarios=scen,
        costs=costs,
        hauler_sizes=(8,),
        pattern=pattern,
        consistency=rn.Consistency.WEEKLY,
        hos=desk_hos(),
    )


def test_variable_counts_single_service():
    inst = single_service_instance()
    model, vm = rn.formulate(inst)
    assert len(vm.x) == 1
    assert len(vm.y) == 1
    assert len(vm.z) == 1
    # Path pruning keeps exactly the outbound leg and the destination-side
    # holding arc for this one-service window.
    assert len(vm.f) == 2
    assert model.num_variables == 5


def test_scp_differs_only_in_flow_kind_and_capacity_coefficient():
    mcp_model, mcp_vm = rn.formulate(single_service_instance(rn.Pattern.FLU_MCP))
    scp_model, scp_vm = rn.formulate(single_service_instance(rn.Pattern.FLU_SCP))
    assert set(mcp_vm.f) == set(scp_vm.f)
    for key, vid in mcp_vm.f.items():
        assert mcp_model.variables[vid].kind is rn.VarKind.CONTINUOUS
        assert scp_model.variables[scp_vm.f[key]].kind is rn.VarKind.BINARY
    cap_mcp = next(r for r in mcp_model.rows if r.name.startswith("eq4_"))
    cap_scp = next(r for r in scp_model.rows if r.name.startswith("eq4_"))
    f_id_mcp = next(iter(mcp_vm.f.values()))
    f_id_scp = next(iter(scp_vm.f.values()))
    assert dict(cap_mcp.coeffs)[f_id_mcp] == -1.0
    assert dict(cap_scp.coeffs)[f_id_scp] == -5.0


def test_second_stage_block_count_scales_with_scenarios():
    inst5 = battery_instance(1, num_scenarios=5)
    inst1 = battery_instance(1, num_scenarios=1)
    m5, vm5 = rn.formulate(inst5)
    m1, vm1 = rn.formulate(inst1)
    first_stage = len(vm5.x)
    assert len(vm1.x) == first_stage
    per_block1 = m1.num_variables - first_stage
    assert m5.num_variables - first_stage == 5 * per_block1


def test_row_names_carry_semantic_ids():
    inst = l3_instance()
    model, _ = rn.formulate(inst)
    names = [r.name for r in model.rows]
    assert any(n.startswith("eq3_s") and n.endswith("_w0") for n in names)
    assert any(n.startswith("eq4_arc") for n in names)
    assert any(n.startswith("eq5_k0_n") for n in names)
    assert len(names) == len(set(names))


def test_empty_catalog_still_formulates_and_outsources():
    inst = single_service_instance()
    empty = rn.ServiceCatalog(services=(), moving_arc_ids=inst.catalog.moving_arc_ids)
    inst2 = replace(inst, catalog=empty)
    model, vm = rn.formulate(inst2)
    sol = rn.solve_milp(model)
    assert sol.status == rn.solver.OPTIMAL
    assert sol.values[vm.z[(0, 0)]] == 1.0
    assert sol.objective == pytest.approx(0.93 * 275.0 * 5)


def test_unreachable_commodity_rejected_at_instance_validation():
    doc = {
        "hubs": [{"id": 0, "name": "A"}, {"id": 1, "name": "B"}, {"id": 2, "name": "C"}],
        "arcs": [{"from": 0, "to": 1, "travel_steps": 1, "distance_miles": 100.0}],
    }
    pnet = rn.load_physical_network(doc)
    grid = rn.TimeGrid(step_hours=6.0, num_steps=2, cycle_steps=2, num_cycles=1)
    tsn = rn.build_time_space_network(pnet, grid)
    costs = rn.CostParams()
    catalog = rn.enumerate_services(tsn, pnet, desk_hos(), costs, rn.Consistency.WEEKLY)
    k = rn.Commodity(id=0, origin=0, destination=2, entry_step=0, due_step=2)
    scen = rn.ScenarioSet(scenarios=(rn.Scenario(id=0, probability=1.0, volumes={0: 1.0}),))
    with pytest.raises(rn.ValidationError, match="outsourcing"):
        rn.Instance(
            tsn=tsn, catalog=catalog, commodities=(k,), scenarios=scen, costs=costs,
            hauler_sizes=(8,), pattern=rn.Pattern.FLU_MCP,
            consistency=rn.Consistency.WEEKLY, hos=desk_hos(),
        )


def test_unknown_hauler_size_rejected():
    inst = single_service_instance()
    with pytest.raises(rn.ValidationError, match="hauler size"):
        replace(inst, hauler_sizes=(5,))


def test_daily_consistency_adds_equality_rows():
    pnet = rn.load_physical_network(line_network_doc(2))
    grid = rn.TimeGrid(step_hours=6.0, num_steps=8, cycle_steps=4, num_cycles=2)
    tsn = rn.build_time_space_network(pnet, grid)
    costs = rn.CostParams()
    catalog = rn.enumerate_services(tsn, pnet, desk_hos(), costs, rn.Consistency.DAILY)
    k = rn.Commodity(id=0, origin=0, destination=1, entry_step=0, due_step=4)
    scen = rn.ScenarioSet(scenarios=(rn.Scenario(id=0, probability=1.0, volumes={0: 2.0}),))
    inst = rn.Instance(
        tsn=tsn, catalog=catalog, commodities=(k,), scenarios=scen, costs=costs,
        hauler_sizes=(8,), pattern=rn.Pattern.FLU_MCP,
        consistency=rn.Consistency.DAILY, hos=desk_hos(),
    )
    model, vm = rn.formulate(inst)
    cons = [r for r in model.rows if r.name.startswith("cons_")]
    assert cons
    for row in cons:
        assert row.sense == "="
        assert sorted(c for _, c in row.coeffs) == [-1.0, 1.0]
    sol = rn.solve_milp(model)
    values = {s.id: sol.values[vid] for s, vid in
              zip(inst.catalog.services, [vm.x[s.id] for s in inst.catalog.services])}
    for group in inst.catalog.template_index.values():
        assert len({values[sid] for sid in group}) == 1


def test_single_scenario_equals_deterministic_model():
    inst = battery_instance(3, num_scenarios=1)
    stoch_model, _ = rn.formulate(inst)
    mean = rn.mean_scenario(inst.scenarios)
    det = replace(inst, scenarios=rn.ScenarioSet(scenarios=(mean,), seed=0))
    det_model, _ = rn.formulate(det)
    s1 = rn.solve_milp(stoch_model)
    s2 = rn.solve_milp(det_model)
    assert s1.objective == pytest.approx(s2.objective, abs=1e-9)


def test_cost_scaling_scales_objective():
    inst = l3_instance()
    model, vm = rn.formulate(inst)
    base = rn.solve_milp(model)
    alpha = 3.0
    scaled_costs = rn.CostParams(
        driver_hourly=29.0 * alpha,
        tractor_hourly=18.0 * alpha,
        hauler_hourly_by_size={8: 10.0 * alpha, 4: 5.0 * alpha},
        outsource_per_vehicle_mile=0.93 * alpha,
        default_capacity=2,
    )
    inst_scaled = l3_instance()
    inst_scaled = replace(inst_scaled, costs=scaled_costs)
    catalog = rn.enumerate_services(
        inst_scaled.tsn, inst_scaled.pnet, inst_scaled.hos, scaled_costs, rn.Consistency.WEEKLY
    )
    inst_scaled = replace(inst_scaled, catalog=catalog)
    model_s, vm_s = rn.formulate(inst_scaled)
    scaled = rn.solve_milp(model_s)
    assert scaled.objective == pytest.approx(alpha * base.objective, rel=1e-9)
    # The unscaled argmin stays optimal for the scaled model.
    remapped = {vm_s.x[s]: base.values[v] for s, v in vm.x.items()}
    for key, vid in vm.y.items():
        remapped[vm_s.y[key]] = base.values[vid]
    for key, vid in vm.z.items():
        remapped[vm_s.z[key]] = base.values[vid]
    for key, vid in vm.f.items():
        remapped[vm_s.f[key]] = base.values[vid]
    assert model_s.objective_value(remapped) == pytest.approx(scaled.objective, rel=1e-9)
    worst, _ = model_s.max_violation(remapped)
    assert worst <= 1e-6


def test_scp_solution_maps_into_mcp_feasible_set():
    # Scaling a unit path by the volume satisfies the multi-path rows, so
    # the multi-path optimum can only be at or below the single-path one.
    for seed in (21, 22, 23):
        inst_scp = battery_instance(seed, pattern=rn.Pattern.FLU_SCP, num_scenarios=2)
        model_scp, vm_scp = rn.formulate(inst_scp)
        sol_scp = rn.solve_milp(model_scp)
        inst_mcp = replace(inst_scp, pattern=rn.Pattern.FLU_MCP)
        model_mcp, vm_mcp = rn.formulate(inst_mcp)
        mapped = {vm_mcp.x[s]: sol_scp.values[v] for s, v in vm_scp.x.items()}
        for key, vid in vm_scp.y.items():
            mapped[vm_mcp.y[key]] = sol_scp.values[vid]
        for key, vid in vm_scp.z.items():
            mapped[vm_mcp.z[key]] = sol_scp.values[vid]
        for (k, a, w), vid in vm_scp.f.items():
            vol = next(s for s in inst_scp.scenarios.scenarios if s.id == w).volume(k)
            mapped[vm_mcp.f[(k, a, w)]] = vol * sol_scp.values[vid]
        worst, name = model_mcp.max_violation(mapped)
        assert worst <= 1e-6, name
        sol_mcp = rn.solve_milp(model_mcp)
        assert sol_mcp.objective <= sol_scp.objective + 1e-6


def test_formulate_second_stage_matches_full_solve_recourse():
    inst = battery_instance(7, num_scenarios=3)
    model, vm = rn.formulate(inst)
    sol = rn.solve_milp(model)
    design = rn.extract_design(vm, sol)
    recourse = rn.extract_recourse(inst, vm, sol)
    # Decomposition identity: fixing the first stage and solving per
    # scenario reproduces the full model's expected recourse.
    total = []
    for w in inst.scenarios.scenarios:
        m2, vm2 = rn.formulate_second_stage(inst, design.x, w)
        s2 = rn.solve_milp(m2)
        assert s2.status == rn.solver.OPTIMAL
        total.append(w.probability * s2.objective)
    expected_recourse = math.fsum(
        w.probability * recourse.for_scenario(w.id).cost
        for w in inst.scenarios.scenarios
    )
    assert math.fsum(total) == pytest.approx(expected_recourse, abs=1e-6)


def test_second_stage_zero_design_outsources_everything():
    inst = single_service_instance()
    w = inst.scenarios.scenarios[0]
    model, vm = rn.formulate_second_stage(inst, {0: 0}, w)
    sol = rn.solve_milp(model)
    assert sol.objective == pytest.approx(rn.outsourcing_cost(
        inst.commodities[0], w, 0.93, inst.pnet))
    assert sol.values[vm.z[(0, 0)]] == 1.0


def test_second_stage_design_above_capacity_rejected():
    inst = single_service_instance()
    w = inst.scenarios.scenarios[0]
    with pytest.raises(rn.ValidationError, match="outside"):
        rn.formulate_second_stage(inst, {0: 99}, w)


def test_audit_flags_broken_solution():
    inst = l3_instance()
    model, vm = rn.formulate(inst)
    sol = rn.solve_milp(model)
    good = rn.audit_solution(inst, vm, sol.values)
    assert good.passes()
    tampered = dict(sol.values)
    used = max(vm.x.values(), key=lambda vid: sol.values[vid])
    tampered[used] = 0.0  # keep flows, drop the trucks carrying them
    bad = rn.audit_solution(inst, vm, tampered)
    assert not bad.passes()
