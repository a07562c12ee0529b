"""Relay-trucking service network design under demand uncertainty.

Builds time-space networks over relay hubs, enumerates HOS-feasible
round-trip services, formulates the two-stage capacity/routing/outsourcing
program across demand scenarios, solves it exactly at desk scale, and
reports the standard design indicators.
"""

__version__ = "0.1.0"

from .analysis import (
    ComparisonEntry,
    ComparisonReport,
    DesignSolution,
    KpiReport,
    Recourse,
    ScenarioRecourse,
    VssReport,
    compare_consistency,
    compare_patterns,
    compute_kpis,
    compute_vss,
    evaluate_design,
    extract_design,
    extract_recourse,
    total_expected_cost,
)
from .demand import (
    Commodity,
    DemandSpec,
    Scenario,
    ScenarioSet,
    build_commodities,
    commodities_from_rows,
    generate_scenarios,
    mean_scenario,
    outsourcing_cost,
    scenarios_from_rows,
)
from .errors import NetworkDesignError, SolveError, UnreachableError, ValidationError
from .milp import (
    AuditReport,
    Instance,
    MilpModel,
    VarKind,
    VarMap,
    audit_solution,
    export_model,
    formulate,
    formulate_second_stage,
    parse_mps,
    parse_solution_doc,
    write_solution_doc,
)
from .network import (
    ArcKind,
    Hub,
    PhysicalArc,
    PhysicalNetwork,
    TimeGrid,
    TimeSpaceNetwork,
    TSArc,
    build_time_space_network,
    load_physical_network,
    shortest_distance_miles,
)
from .params import Consistency, CostParams, HaulerOption, Pattern
from .services import (
    HosPolicy,
    Service,
    ServiceCatalog,
    apply_service_overrides,
    consistency_partners,
    enumerate_services,
    services_on_arc,
)
from .solver import (
    LpSolution,
    MilpSolution,
    SolveOptions,
    import_solution,
    solve_lp,
    solve_milp,
)
