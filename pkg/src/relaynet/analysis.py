"""Design extraction, KPIs, value of the stochastic solution, comparisons.

Cost assembly here mirrors model construction term by term (same coefficient
floats, exact summation), so a report's cost field reproduces the solver
objective and degenerate identities (single scenario, forced outsourcing)
hold exactly rather than within loose tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .demand import Scenario, ScenarioSet, mean_scenario
from .errors import ValidationError
from .milp.formulate import (
    Instance,
    first_stage_cost,
    formulate,
    formulate_second_stage,
    hauler_rental_cost,
    outsource_cost,
    truck_rental_cost,
)
from .milp.model import VarMap
from .params import Consistency, Pattern
from .services import enumerate_services, apply_service_overrides
from .solver import OPTIMAL, MilpSolution, SolveOptions, solve_milp


@dataclass(frozen=True)
class DesignSolution:
    """First-stage decision: contracted count per service id."""

    x: dict[int, int]

    def count(self, service_id: int) -> int:
        return self.x.get(service_id, 0)

    def validate(self, inst: Instance) -> None:
        for s in inst.catalog.services:
            val = self.count(s.id)
            if not 0 <= val <= s.capacity:
                raise ValidationError(
                    f"design count {val} for service {s.id} outside [0, {s.capacity}]"
                )
        unknown = set(self.x) - {s.id for s in inst.catalog.services}
        if unknown:
            raise ValidationError(f"design references unknown services {sorted(unknown)}")
        if inst.consistency is Consistency.DAILY:
            for group in inst.catalog.template_index.values():
                counts = {self.count(sid) for sid in group}
                if len(counts) > 1:
                    raise ValidationError(
                        f"daily consistency violated within template group {group}"
                    )


@dataclass(frozen=True)
class ScenarioRecourse:
    """Second-stage values of one scenario."""

    scenario_id: int
    y: dict[tuple[int, int], float]  # (service|commodity, size) -> count
    f: dict[tuple[int, int], float]  # (commodity, arc) -> flow
    z: dict[int, float]  # commodity -> outsourcing flag
    cost: float


@dataclass(frozen=True)
class Recourse:
    per_scenario: tuple[ScenarioRecourse, ...]

    def for_scenario(self, scenario_id: int) -> ScenarioRecourse:
        for r in self.per_scenario:
            if r.scenario_id == scenario_id:
                return r
        raise ValidationError(f"no recourse for scenario {scenario_id}")


@dataclass(frozen=True)
class KpiReport:
    """The comparison-table indicators of one run."""

    total_contracted_driver_hours: float
    avg_tractor_rental_hours: float
    avg_hauler_rental_hours: float
    avg_outsourcing_rate: float
    total_expected_cost: float
    pattern: str = ""
    consistency: str = ""


@dataclass(frozen=True)
class VssReport:
    """Stochastic optimum versus the mean-demand design evaluated on scenarios."""

    stochastic_cost: float
    deterministic_design_cost: float
    vss: float
    stochastic_design: DesignSolution
    deterministic_design: DesignSolution
    stochastic_kpis: KpiReport
    deterministic_kpis: KpiReport
    conclusive: bool
    statuses: dict[str, str]


@dataclass(frozen=True)
class ComparisonEntry:
    key: str
    status: str
    objective: float | None
    kpis: KpiReport | None
    design: DesignSolution | None


@dataclass(frozen=True)
class ComparisonReport:
    entries: tuple[ComparisonEntry, ...]
    ordering_ok: bool = True

    def entry(self, key: str) -> ComparisonEntry:
        for e in self.entries:
            if e.key == key:
                return e
        raise ValidationError(f"no comparison entry {key!r}")


def extract_design(vm: VarMap, solution: MilpSolution) -> DesignSolution:
    if solution.values is None:
        raise ValidationError(f"no values to extract (status {solution.status})")
    return DesignSolution(
        x={sid: int(round(solution.values[vid])) for sid, vid in vm.x.items()}
    )


def extract_recourse(inst: Instance, vm: VarMap, solution: MilpSolution) -> Recourse:
    """Pull second-stage values out of a full-solve solution, scenario by
    scenario, with the per-scenario unweighted recourse cost."""
    if solution.values is None:
        raise ValidationError(f"no values to extract (status {solution.status})")
    values = solution.values
    out = []
    for w in inst.scenarios.scenarios:
        y = {
            (a, u): values[vid]
            for (a, u, wid), vid in vm.y.items()
            if wid == w.id
        }
        f = {
            (k, a): values[vid]
            for (k, a, wid), vid in vm.f.items()
            if wid == w.id
        }
        z = {k: values[vid] for (k, wid), vid in vm.z.items() if wid == w.id}
        out.append(
            ScenarioRecourse(
                scenario_id=w.id, y=y, f=f, z=z, cost=_recourse_cost(inst, w, y, z)
            )
        )
    return Recourse(per_scenario=tuple(out))


def _recourse_cost(
    inst: Instance,
    w: Scenario,
    y: dict[tuple[int, int], float],
    z: dict[int, float],
) -> float:
    terms = []
    if inst.pattern in (Pattern.FLU_MCP, Pattern.FLU_SCP):
        for s in inst.catalog.services:
            for h in inst.haulers:
                terms.append(truck_rental_cost(inst, s, h.size) * y.get((s.id, h.size), 0.0))
    else:
        for k in inst.commodities:
            for h in inst.haulers:
                terms.append(hauler_rental_cost(inst, k, h.size) * y.get((k.id, h.size), 0.0))
    for k in inst.commodities:
        terms.append(outsource_cost(inst, k, w) * z.get(k.id, 0.0))
    return math.fsum(terms)


def total_expected_cost(inst: Instance, design: DesignSolution, recourse: Recourse) -> float:
    """Contract fees plus expected recourse, assembled with the same
    products the deterministic-equivalent objective uses."""
    terms = [
        first_stage_cost(inst, s) * float(design.count(s.id))
        for s in inst.catalog.services
    ]
    for w in inst.scenarios.scenarios:
        rec = recourse.for_scenario(w.id)
        if inst.pattern in (Pattern.FLU_MCP, Pattern.FLU_SCP):
            for s in inst.catalog.services:
                for h in inst.haulers:
                    coef = w.probability * truck_rental_cost(inst, s, h.size)
                    terms.append(coef * rec.y.get((s.id, h.size), 0.0))
        else:
            for k in inst.commodities:
                for h in inst.haulers:
                    coef = w.probability * hauler_rental_cost(inst, k, h.size)
                    terms.append(coef * rec.y.get((k.id, h.size), 0.0))
        for k in inst.commodities:
            coef = w.probability * outsource_cost(inst, k, w)
            terms.append(coef * rec.z.get(k.id, 0.0))
    return math.fsum(terms)


def compute_kpis(
    inst: Instance,
    design: DesignSolution,
    recourse: Recourse,
    *,
    count_weighted_rate: bool = False,
) -> KpiReport:
    """Indicators of one solved run.

    Driver hours are first-stage; tractor and hauler hours are expectations
    over scenarios. Under the loading patterns a truck assignment rents a
    tractor-hauler pair for the service duration, so the two hour figures
    coincide. Under hauler swapping tractors ride with the contracted
    drivers while haulers bill per commodity window. The outsourcing rate is
    the expected outsourced share of volume (or of commodity count with
    ``count_weighted_rate``).
    """
    design.validate(inst)
    services = inst.catalog.services
    driver_hours = math.fsum(
        design.count(s.id) * s.on_duty_hours for s in services
    )
    flu = inst.pattern in (Pattern.FLU_MCP, Pattern.FLU_SCP)

    tractor_terms = []
    hauler_terms = []
    rate_terms = []
    for w in inst.scenarios.scenarios:
        rec = recourse.for_scenario(w.id)
        if flu:
            hours = math.fsum(
                rec.y.get((s.id, h.size), 0.0) * s.on_duty_hours
                for s in services
                for h in inst.haulers
            )
            tractor_terms.append(w.probability * hours)
            hauler_terms.append(w.probability * hours)
        else:
            tractor_terms.append(w.probability * driver_hours)
            hauler_terms.append(
                w.probability
                * math.fsum(
                    rec.y.get((k.id, h.size), 0.0)
                    * (k.due_step - k.entry_step)
                    * inst.tsn.grid.step_hours
                    for k in inst.commodities
                    for h in inst.haulers
                )
            )
        if count_weighted_rate:
            share = (
                math.fsum(rec.z.get(k.id, 0.0) for k in inst.commodities)
                / len(inst.commodities)
                if inst.commodities
                else 0.0
            )
        else:
            total_vol = math.fsum(w.volume(k.id) for k in inst.commodities)
            outs_vol = math.fsum(
                w.volume(k.id) * rec.z.get(k.id, 0.0) for k in inst.commodities
            )
            share = outs_vol / total_vol if total_vol > 0 else 0.0
        rate_terms.append(w.probability * share)

    return KpiReport(
        total_contracted_driver_hours=driver_hours,
        avg_tractor_rental_hours=math.fsum(tractor_terms),
        avg_hauler_rental_hours=math.fsum(hauler_terms),
        avg_outsourcing_rate=math.fsum(rate_terms),
        total_expected_cost=total_expected_cost(inst, design, recourse),
        pattern=inst.pattern.value,
        consistency=inst.consistency.value,
    )


def evaluate_design(
    inst: Instance, design: DesignSolution, opts: SolveOptions | None = None
) -> tuple[Recourse, dict[int, str]]:
    """Solve the second stage of every scenario with the design fixed."""
    design.validate(inst)
    opts = opts or SolveOptions()
    recs = []
    statuses: dict[int, str] = {}
    for w in inst.scenarios.scenarios:
        model, vm = formulate_second_stage(inst, design.x, w)
        sol = solve_milp(model, opts)
        statuses[w.id] = sol.status
        if sol.values is None:
            raise ValidationError(
                f"second-stage solve for scenario {w.id} returned {sol.status}"
            )
        y = {(a, u): sol.values[vid] for (a, u, wid), vid in vm.y.items()}
        f = {(k, a): sol.values[vid] for (k, a, wid), vid in vm.f.items()}
        z = {k: sol.values[vid] for (k, wid), vid in vm.z.items()}
        recs.append(
            ScenarioRecourse(scenario_id=w.id, y=y, f=f, z=z, cost=sol.objective)
        )
    return Recourse(per_scenario=tuple(recs)), statuses


def compute_vss(
    inst: Instance, opts: SolveOptions | None = None, *, count_weighted_rate: bool = False
) -> VssReport:
    """Value of the stochastic solution.

    Solves the full stochastic model, then the deterministic model on the
    mean scenario, then evaluates the mean-demand design against every
    scenario. The difference of the two expected costs is the reported
    value; a limit status anywhere flags the report as non-conclusive.
    """
    opts = opts or SolveOptions()
    statuses: dict[str, str] = {}

    model_s, vm_s = formulate(inst)
    sol_s = solve_milp(model_s, opts)
    statuses["stochastic"] = sol_s.status
    if sol_s.values is None:
        raise ValidationError(f"stochastic solve returned {sol_s.status}")
    design_s = extract_design(vm_s, sol_s)
    recourse_s = extract_recourse(inst, vm_s, sol_s)
    stochastic_cost = sol_s.objective

    mean = mean_scenario(inst.scenarios)
    inst_mean = replace(
        inst, scenarios=ScenarioSet(scenarios=(mean,), seed=inst.scenarios.seed)
    )
    model_d, vm_d = formulate(inst_mean)
    sol_d = solve_milp(model_d, opts)
    statuses["deterministic"] = sol_d.status
    if sol_d.values is None:
        raise ValidationError(f"mean-scenario solve returned {sol_d.status}")
    design_d = extract_design(vm_d, sol_d)

    recourse_d, stage_statuses = evaluate_design(inst, design_d, opts)
    for wid, st in stage_statuses.items():
        statuses[f"second_stage_w{wid}"] = st
    deterministic_cost = total_expected_cost(inst, design_d, recourse_d)

    return VssReport(
        stochastic_cost=stochastic_cost,
        deterministic_design_cost=deterministic_cost,
        vss=deterministic_cost - stochastic_cost,
        stochastic_design=design_s,
        deterministic_design=design_d,
        stochastic_kpis=compute_kpis(
            inst, design_s, recourse_s, count_weighted_rate=count_weighted_rate
        ),
        deterministic_kpis=compute_kpis(
            inst, design_d, recourse_d, count_weighted_rate=count_weighted_rate
        ),
        conclusive=all(st == OPTIMAL for st in statuses.values()),
        statuses=statuses,
    )


def _solve_and_report(inst: Instance, opts: SolveOptions, key: str) -> ComparisonEntry:
    model, vm = formulate(inst)
    sol = solve_milp(model, opts)
    if sol.values is None:
        return ComparisonEntry(key=key, status=sol.status, objective=None, kpis=None, design=None)
    design = extract_design(vm, sol)
    recourse = extract_recourse(inst, vm, sol)
    return ComparisonEntry(
        key=key,
        status=sol.status,
        objective=sol.objective,
        kpis=compute_kpis(inst, design, recourse),
        design=design,
    )


def compare_patterns(inst: Instance, opts: SolveOptions | None = None) -> ComparisonReport:
    """Solve the same instance under all three operational patterns.

    The report records whether the multi-path loading optimum stays at or
    below the single-path one, which must hold since single-path solutions
    embed into the multi-path feasible set.
    """
    opts = opts or SolveOptions()
    entries = tuple(
        _solve_and_report(replace(inst, pattern=p), opts, p.value)
        for p in (Pattern.FLU_MCP, Pattern.FLU_SCP, Pattern.HS)
    )
    mcp = entries[0].objective
    scp = entries[1].objective
    ordering_ok = mcp is not None and scp is not None and mcp <= scp + 1e-6
    return ComparisonReport(entries=entries, ordering_ok=ordering_ok)


def compare_consistency(
    inst: Instance,
    opts: SolveOptions | None = None,
    *,
    fixed_sizes: tuple[int, ...] = (8,),
    various_sizes: tuple[int, ...] = (4, 8),
    service_overrides: list[dict] | None = None,
) -> ComparisonReport:
    """Solve {weekly, daily} x {fixed, various hauler sizes} on one dataset.

    Catalogs are re-enumerated per consistency mode because daily mode
    discounts driver fees; supplied service overrides are reapplied to each
    catalog. Daily mode requires the cycle length to divide the horizon.
    """
    opts = opts or SolveOptions()
    grid = inst.tsn.grid
    if grid.num_steps % grid.cycle_steps != 0:
        raise ValidationError(
            f"cycle length {grid.cycle_steps} does not divide horizon {grid.num_steps}"
        )
    entries = []
    for cons in (Consistency.WEEKLY, Consistency.DAILY):
        catalog = enumerate_services(inst.tsn, inst.pnet, inst.hos, inst.costs, cons)
        if service_overrides:
            catalog = apply_service_overrides(catalog, service_overrides)
        for label, sizes in (("fixed", fixed_sizes), ("various", various_sizes)):
            variant = replace(
                inst, catalog=catalog, consistency=cons, hauler_sizes=tuple(sizes)
            )
            entries.append(
                _solve_and_report(variant, opts, f"{cons.value}-{label}")
            )
    return ComparisonReport(entries=tuple(entries))
