"""Command-line front end for offline planning runs.

Subcommands cover the whole workflow: validate and expand a network, draw
demand scenarios, solve a design, evaluate a fixed design, run the
stochastic-value and comparison studies, and exchange models with external
solvers through MPS and solution documents. Every run writes a manifest
(config hash, seed, version) and all randomness flows from the single
config seed.

Exit codes: 0 success/optimal, 1 unexpected error, 2 validation failure,
3 infeasible, 4 limit reached, 5 unbounded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from . import __version__
from .analysis import (
    DesignSolution,
    Recourse,
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
    ScenarioSet,
    commodities_from_rows,
    generate_scenarios,
    scenarios_from_rows,
)
from .errors import NetworkDesignError, ValidationError
from .milp import Instance, audit_solution, export_model, formulate
from .network import TimeGrid, build_time_space_network, load_physical_network
from .params import Consistency, CostParams, Pattern
from .reporting import (
    comparison_chart,
    comparison_csv,
    design_csv,
    kpi_table_csv,
    load_design_rows,
    recourse_csv,
    vss_chart,
    vss_csv,
    write_manifest,
)
from .services import HosPolicy, apply_service_overrides, enumerate_services
from .solver import (
    FEASIBLE,
    INFEASIBLE,
    LIMIT,
    OPTIMAL,
    UNBOUNDED,
    SolveOptions,
    import_solution,
    solve_milp,
)
from .testbed import make_testbed

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_VALIDATION = 2
EXIT_INFEASIBLE = 3
EXIT_LIMIT = 4
EXIT_UNBOUNDED = 5

_STATUS_EXIT = {
    OPTIMAL: EXIT_OK,
    FEASIBLE: EXIT_OK,
    INFEASIBLE: EXIT_INFEASIBLE,
    LIMIT: EXIT_LIMIT,
    UNBOUNDED: EXIT_UNBOUNDED,
}


@dataclass
class RunConfig:
    """Parsed run configuration with experiment defaults.

    Defaults: 6-hour steps over a five-day horizon with daily cycles,
    two-day delivery windows in generation, federal HOS caps, and the
    standard price book.
    """

    config_path: Path
    config_text: str
    network_path: Path
    commodities_path: Path | None
    scenarios_path: Path | None
    generate: dict | None
    grid: TimeGrid
    hos: HosPolicy
    costs: CostParams
    hauler_sizes: tuple[int, ...]
    pattern: Pattern
    consistency: Consistency
    solve: SolveOptions
    seed: int
    output_dir: Path
    service_overrides_path: Path | None = None
    outsource_scales_with_volume: bool = True
    commodity_rows: list[dict] = field(default_factory=list)


def load_config(path: Path, overrides: argparse.Namespace | None = None) -> RunConfig:
    text = path.read_text()
    raw = yaml.safe_load(text) or {}
    if not isinstance(raw, dict):
        raise ValidationError(f"config {path} is not a mapping")
    base = path.parent

    def resolve(key: str) -> Path | None:
        value = raw.get(key)
        return None if value is None else (base / str(value))

    grid_raw = raw.get("grid", {})
    grid = TimeGrid(
        step_hours=float(grid_raw.get("step_hours", 6.0)),
        num_steps=int(grid_raw.get("num_steps", 20)),
        cycle_steps=int(grid_raw.get("cycle_steps", 4)),
        num_cycles=int(grid_raw.get("num_cycles", 5)),
    )
    hos_raw = raw.get("hos", {})
    hos = HosPolicy(
        max_on_duty_hours=float(hos_raw.get("max_on_duty_hours", 14.0)),
        max_driving_hours=float(hos_raw.get("max_driving_hours", 11.0)),
    )
    costs_raw = raw.get("costs", {})
    hauler_rates = costs_raw.get("hauler_hourly", {8: 10.0, 4: 5.0})
    costs = CostParams(
        driver_hourly=float(costs_raw.get("driver_hourly", 29.0)),
        tractor_hourly=float(costs_raw.get("tractor_hourly", 18.0)),
        hauler_hourly_by_size={int(k): float(v) for k, v in hauler_rates.items()},
        outsource_per_vehicle_mile=float(costs_raw.get("outsource_per_vehicle_mile", 0.93)),
        consistency_discount=float(costs_raw.get("consistency_discount", 0.8)),
        avg_mph=float(costs_raw.get("avg_mph", 50.0)),
        default_capacity=int(costs_raw.get("default_capacity", 10)),
    )
    solve_raw = raw.get("solve", {})
    opts = SolveOptions(
        rel_gap_tol=float(solve_raw.get("rel_gap_tol", 1e-6)),
        int_feas_tol=float(solve_raw.get("int_feas_tol", 1e-6)),
        time_limit_s=(
            None if solve_raw.get("time_limit_s") is None else float(solve_raw["time_limit_s"])
        ),
        node_limit=(
            None if solve_raw.get("node_limit") is None else int(solve_raw["node_limit"])
        ),
        branching=str(solve_raw.get("branching", "most-fractional")),
        seed=int(raw.get("seed", 0)),
        workers=int(solve_raw.get("threads", 1)),
    )

    network_path = resolve("network")
    if network_path is None:
        raise ValidationError("config needs a 'network' document path")

    cfg = RunConfig(
        config_path=path,
        config_text=text,
        network_path=network_path,
        commodities_path=resolve("commodities"),
        scenarios_path=resolve("scenarios"),
        generate=raw.get("generate"),
        grid=grid,
        hos=hos,
        costs=costs,
        hauler_sizes=tuple(int(u) for u in raw.get("haulers", [8])),
        pattern=Pattern(str(raw.get("pattern", "flu-mcp"))),
        consistency=Consistency(str(raw.get("consistency", "weekly"))),
        solve=opts,
        seed=int(raw.get("seed", 0)),
        output_dir=base / str(raw.get("output_dir", "out")),
        service_overrides_path=resolve("service_overrides"),
        outsource_scales_with_volume=bool(raw.get("outsource_scales_with_volume", True)),
    )

    if overrides is not None:
        if getattr(overrides, "pattern", None):
            cfg.pattern = Pattern(overrides.pattern)
        if getattr(overrides, "consistency", None):
            cfg.consistency = Consistency(overrides.consistency)
        if getattr(overrides, "haulers", None):
            cfg.hauler_sizes = tuple(int(u) for u in overrides.haulers.split(","))
        if getattr(overrides, "seed", None) is not None:
            cfg.seed = int(overrides.seed)
            cfg.solve = replace(cfg.solve, seed=int(overrides.seed))
        if getattr(overrides, "threads", None) is not None:
            cfg.solve = replace(cfg.solve, workers=int(overrides.threads))
        if getattr(overrides, "time_limit", None) is not None:
            cfg.solve = replace(cfg.solve, time_limit_s=float(overrides.time_limit))
        if getattr(overrides, "output", None):
            cfg.output_dir = Path(overrides.output)
    return cfg


def _read_csv_rows(path: Path) -> list[dict]:
    with path.open(newline="") as fh:
        return list(csv.DictReader(fh))


def load_commodities(cfg: RunConfig) -> tuple[Commodity, ...]:
    if cfg.commodities_path is None:
        raise ValidationError("config needs a 'commodities' document path")
    return commodities_from_rows(_read_csv_rows(cfg.commodities_path))


def load_scenarios(cfg: RunConfig, commodities: tuple[Commodity, ...]) -> ScenarioSet:
    if cfg.scenarios_path is not None:
        rows = _read_csv_rows(cfg.scenarios_path)
        if not rows:
            raise ValidationError(f"scenario document {cfg.scenarios_path} is empty")
        return scenarios_from_rows(rows, commodities)
    if cfg.generate is None:
        raise ValidationError("config needs either 'scenarios' or a 'generate' block")
    gen = cfg.generate
    count = int(gen.get("count", 0))
    spec = DemandSpec(
        mean_volume=float(gen.get("mean_volume", 3.0)),
        dispersion=float(gen.get("dispersion", 0.0)),
        east_share=float(gen.get("east_share", 0.5)),
        mean_by_commodity=(
            {int(k): float(v) for k, v in gen["mean_by_commodity"].items()}
            if gen.get("mean_by_commodity")
            else None
        ),
    )
    return generate_scenarios(spec, commodities, count, cfg.seed)


def build_instance(cfg: RunConfig) -> Instance:
    network = load_physical_network(yaml.safe_load(cfg.network_path.read_text()))
    tsn = build_time_space_network(network, cfg.grid)
    catalog = enumerate_services(tsn, network, cfg.hos, cfg.costs, cfg.consistency)
    if cfg.service_overrides_path is not None:
        rows = yaml.safe_load(cfg.service_overrides_path.read_text()) or []
        catalog = apply_service_overrides(catalog, rows)
    commodities = load_commodities(cfg)
    scenarios = load_scenarios(cfg, commodities)
    return Instance(
        tsn=tsn,
        catalog=catalog,
        commodities=commodities,
        scenarios=scenarios,
        costs=cfg.costs,
        hauler_sizes=cfg.hauler_sizes,
        pattern=cfg.pattern,
        consistency=cfg.consistency,
        hos=cfg.hos,
        outsource_scales_with_volume=cfg.outsource_scales_with_volume,
    )


def _recourse_rows(inst: Instance, recourse: Recourse):
    rows = []
    for w in inst.scenarios.scenarios:
        rec = recourse.for_scenario(w.id)
        total = sum(w.volume(k.id) for k in inst.commodities)
        outs = sum(w.volume(k.id) * rec.z.get(k.id, 0.0) for k in inst.commodities)
        rows.append((w.id, w.probability, rec.cost, outs, total))
    return rows


def _write_solve_log(outdir: Path, sol) -> None:
    lines = [
        f"status: {sol.status}",
        f"objective: {sol.objective}",
        f"bound: {sol.bound}",
        f"nodes: {sol.stats.nodes}",
        f"lp_iterations: {sol.stats.lp_iterations}",
        f"wall_time_s: {sol.stats.wall_time_s:.3f}",
        f"incumbents: {list(sol.stats.incumbents)}",
    ]
    (outdir / "solve.log").write_text("\n".join(lines) + "\n")


def cmd_solve(args: argparse.Namespace) -> int:
    cfg = load_config(Path(args.config), args)
    inst = build_instance(cfg)
    outdir = cfg.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    model, vm = formulate(inst)
    if args.export_mps:
        (outdir / "model.mps").write_text(export_model(model))
        write_manifest(outdir, "solve --export-mps", cfg.config_text, cfg.seed)
        print(f"wrote {outdir / 'model.mps'} ({model.num_variables} variables)")
        return EXIT_OK

    sol = solve_milp(model, cfg.solve)
    _write_solve_log(outdir, sol)
    write_manifest(outdir, "solve", cfg.config_text, cfg.seed)
    if sol.values is None:
        print(f"solve finished: {sol.status}", file=sys.stderr)
        return _STATUS_EXIT.get(sol.status, EXIT_ERROR)

    design = extract_design(vm, sol)
    recourse = extract_recourse(inst, vm, sol)
    kpis = compute_kpis(inst, design, recourse)
    audit = audit_solution(inst, vm, sol.values)
    (outdir / "design.csv").write_text(design_csv(design.x))
    (outdir / "recourse.csv").write_text(recourse_csv(_recourse_rows(inst, recourse)))
    (outdir / "kpis.csv").write_text(kpi_table_csv({cfg.pattern.value: kpis}))
    (outdir / "audit.json").write_text(
        json.dumps(
            {
                "passes": audit.passes(),
                "max_inequality_violation": audit.max_inequality_violation,
                "max_flow_residual": audit.max_flow_residual,
            },
            indent=2,
            sort_keys=True,
        )
        + "\n"
    )
    print(f"{sol.status}: objective {sol.objective}")
    return _STATUS_EXIT.get(sol.status, EXIT_ERROR)


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = load_config(Path(args.config), args)
    inst = build_instance(cfg)
    design = DesignSolution(x=load_design_rows(Path(args.design).read_text()))
    recourse, statuses = evaluate_design(inst, design, cfg.solve)
    expected = total_expected_cost(inst, design, recourse)
    kpis = compute_kpis(inst, design, recourse)
    outdir = cfg.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "recourse.csv").write_text(recourse_csv(_recourse_rows(inst, recourse)))
    (outdir / "kpis.csv").write_text(kpi_table_csv({"evaluated": kpis}))
    write_manifest(outdir, "evaluate", cfg.config_text, cfg.seed)
    print(f"expected total cost {expected}")
    ok = all(st == OPTIMAL for st in statuses.values())
    return EXIT_OK if ok else EXIT_LIMIT


def cmd_vss(args: argparse.Namespace) -> int:
    cfg = load_config(Path(args.config), args)
    inst = build_instance(cfg)
    report = compute_vss(inst, cfg.solve)
    outdir = cfg.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "vss.csv").write_text(vss_csv(report))
    (outdir / "vss_kpis.csv").write_text(
        kpi_table_csv(
            {
                "deterministic": report.deterministic_kpis,
                "stochastic": report.stochastic_kpis,
            }
        )
    )
    (outdir / "design_stochastic.csv").write_text(design_csv(report.stochastic_design.x))
    (outdir / "design_deterministic.csv").write_text(
        design_csv(report.deterministic_design.x)
    )
    vss_chart(outdir / "vss.svg", report)
    write_manifest(outdir, "vss", cfg.config_text, cfg.seed)
    print(f"vss {report.vss} (conclusive: {report.conclusive})")
    return EXIT_OK if report.conclusive else EXIT_LIMIT


def cmd_compare_patterns(args: argparse.Namespace) -> int:
    cfg = load_config(Path(args.config), args)
    inst = build_instance(cfg)
    report = compare_patterns(inst, cfg.solve)
    outdir = cfg.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "patterns.csv").write_text(comparison_csv(report))
    comparison_chart(outdir / "patterns.svg", report)
    write_manifest(outdir, "compare-patterns", cfg.config_text, cfg.seed)
    print(f"pattern comparison written (mcp<=scp: {report.ordering_ok})")
    ok = all(e.status == OPTIMAL for e in report.entries)
    return EXIT_OK if ok else EXIT_LIMIT


def cmd_compare_consistency(args: argparse.Namespace) -> int:
    cfg = load_config(Path(args.config), args)
    inst = build_instance(cfg)
    overrides = None
    if cfg.service_overrides_path is not None:
        overrides = yaml.safe_load(cfg.service_overrides_path.read_text()) or []
    report = compare_consistency(inst, cfg.solve, service_overrides=overrides)
    outdir = cfg.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "consistency.csv").write_text(comparison_csv(report))
    comparison_chart(outdir / "consistency.svg", report)
    write_manifest(outdir, "compare-consistency", cfg.config_text, cfg.seed)
    print("consistency comparison written")
    ok = all(e.status == OPTIMAL for e in report.entries)
    return EXIT_OK if ok else EXIT_LIMIT


def cmd_build_network(args: argparse.Namespace) -> int:
    cfg = load_config(Path(args.config), args)
    network = load_physical_network(yaml.safe_load(cfg.network_path.read_text()))
    tsn = build_time_space_network(network, cfg.grid)
    catalog = enumerate_services(tsn, network, cfg.hos, cfg.costs, cfg.consistency)
    moving = sum(1 for a in tsn.arcs if a.kind.value == "moving")
    summary = {
        "hubs": network.num_hubs,
        "directed_arcs": len(network.arcs),
        "ts_nodes": tsn.num_nodes,
        "moving_arcs": moving,
        "holding_arcs": len(tsn.arcs) - moving,
        "candidate_services": len(catalog),
    }
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    (cfg.output_dir / "network_summary.json").write_text(
        json.dumps(summary, indent=2, sort_keys=True) + "\n"
    )
    write_manifest(cfg.output_dir, "build-network", cfg.config_text, cfg.seed)
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


def cmd_gen_scenarios(args: argparse.Namespace) -> int:
    cfg = load_config(Path(args.config), args)
    commodities = load_commodities(cfg)
    sset = load_scenarios(cfg, commodities)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["scenario_id", "probability", "commodity_id", "volume"])
    for s in sset.scenarios:
        for kid in sorted(s.volumes):
            writer.writerow([s.id, format(s.probability, ".17g"), kid, format(s.volumes[kid], ".17g")])
    target = Path(args.output) if args.output else cfg.output_dir / "scenarios.csv"
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(out.getvalue())
    print(f"wrote {target} ({len(sset)} scenarios)")
    return EXIT_OK


def cmd_export_mps(args: argparse.Namespace) -> int:
    cfg = load_config(Path(args.config), args)
    inst = build_instance(cfg)
    model, _ = formulate(inst)
    target = Path(args.output) if args.output else cfg.output_dir / "model.mps"
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(export_model(model))
    print(f"wrote {target} ({model.num_variables} variables, {model.num_rows} rows)")
    return EXIT_OK


def cmd_import_solution(args: argparse.Namespace) -> int:
    cfg = load_config(Path(args.config), args)
    inst = build_instance(cfg)
    model, vm = formulate(inst)
    sol = import_solution(model, vm, Path(args.solution).read_text())
    design = extract_design(vm, sol)
    recourse = extract_recourse(inst, vm, sol)
    kpis = compute_kpis(inst, design, recourse)
    outdir = cfg.output_dir
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "design.csv").write_text(design_csv(design.x))
    (outdir / "kpis.csv").write_text(kpi_table_csv({"imported": kpis}))
    write_manifest(outdir, "import-solution", cfg.config_text, cfg.seed)
    print(f"imported solution, objective {sol.objective}")
    return EXIT_OK


def cmd_gen_testbed(args: argparse.Namespace) -> int:
    bundle = make_testbed(
        num_hubs=args.hubs,
        num_arcs=args.arcs,
        seed=args.seed if args.seed is not None else 7,
        days=args.days,
        demand_days=args.demand_days,
        commodities_per_day=args.commodities_per_day,
        num_scenarios=args.scenarios,
    )
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "network.yaml").write_text(yaml.safe_dump(bundle["network"], sort_keys=False))
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["id", "origin", "destination", "entry_step", "due_step"])
    for row in bundle["commodities"]:
        writer.writerow(
            [row["id"], row["origin"], row["destination"], row["entry_step"], row["due_step"]]
        )
    (outdir / "commodities.csv").write_text(out.getvalue())
    (outdir / "config.yaml").write_text(yaml.safe_dump(bundle["config"], sort_keys=False))
    print(f"testbed written to {outdir} ({len(bundle['commodities'])} commodities)")
    return EXIT_OK


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("-c", "--config", required=True, help="run configuration YAML")
    parser.add_argument("--pattern", choices=[p.value for p in Pattern])
    parser.add_argument("--consistency", choices=[c.value for c in Consistency])
    parser.add_argument("--haulers", help="comma-separated hauler sizes, e.g. 8 or 4,8")
    parser.add_argument("--threads", type=int, help="solver workers (default 1)")
    parser.add_argument("--seed", type=int, help="override the config seed")
    parser.add_argument("--time-limit", type=float, dest="time_limit")
    parser.add_argument("-o", "--output", help="override the output directory")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="relaynet",
        description="Relay-trucking service network design under demand uncertainty.",
    )
    parser.add_argument("--version", action="version", version=f"relaynet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve the two-stage design")
    _add_common(p)
    p.add_argument("--export-mps", action="store_true", help="write the model and skip solving")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("evaluate", help="second stage on a fixed design")
    _add_common(p)
    p.add_argument("--design", required=True, help="design CSV (service_id,count)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("vss", help="value of the stochastic solution")
    _add_common(p)
    p.set_defaults(func=cmd_vss)

    p = sub.add_parser("compare-patterns", help="run all three operational patterns")
    _add_common(p)
    p.set_defaults(func=cmd_compare_patterns)

    p = sub.add_parser("compare-consistency", help="weekly vs daily, fixed vs various sizes")
    _add_common(p)
    p.set_defaults(func=cmd_compare_consistency)

    p = sub.add_parser("build-network", help="validate and summarize the network")
    _add_common(p)
    p.set_defaults(func=cmd_build_network)

    p = sub.add_parser("gen-scenarios", help="draw demand scenarios to CSV")
    _add_common(p)
    p.set_defaults(func=cmd_gen_scenarios)

    p = sub.add_parser("export-mps", help="write the model in MPS format")
    _add_common(p)
    p.set_defaults(func=cmd_export_mps)

    p = sub.add_parser("import-solution", help="validate an external solution document")
    _add_common(p)
    p.add_argument("--solution", required=True, help="solution CSV (variable,value)")
    p.set_defaults(func=cmd_import_solution)

    p = sub.add_parser("gen-testbed", help="fabricate a west-east corridor testbed")
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--hubs", type=int, default=19)
    p.add_argument("--arcs", type=int, default=95)
    p.add_argument("--days", type=int, default=5)
    p.add_argument("--demand-days", type=int, default=4, dest="demand_days")
    p.add_argument("--commodities-per-day", type=int, default=49, dest="commodities_per_day")
    p.add_argument("--scenarios", type=int, default=30)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_gen_testbed)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NetworkDesignError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
