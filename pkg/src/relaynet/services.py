"""Candidate round-trip services under hour-of-service limits.

A service is a home-hub round trip over two moving arcs of the time-space
network: out to an adjacent hub, an optional dwell there, and back home.
On-duty time is the elapsed span from first departure to final arrival;
driving time is the sum of leg travel times. Both are capped by the HOS
policy. The catalog indexes services by the moving arcs they cover and by
schedule template for consistency handling.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .errors import ValidationError
from .network import ArcKind, PhysicalNetwork, TimeSpaceNetwork
from .params import Consistency, CostParams

TemplateKey = tuple[tuple[int, ...], tuple[int, ...], int]


@dataclass(frozen=True)
class HosPolicy:
    """Daily federal hour-of-service caps applied to candidate services."""

    max_on_duty_hours: float = 14.0
    max_driving_hours: float = 11.0

    def __post_init__(self) -> None:
        if not 0 < self.max_driving_hours <= self.max_on_duty_hours:
            raise ValidationError(
                "require 0 < max_driving_hours <= max_on_duty_hours, got "
                f"({self.max_driving_hours}, {self.max_on_duty_hours})"
            )


@dataclass(frozen=True)
class Service:
    """One contractible round trip.

    ``legs`` are moving-arc ids in travel order. ``template_key`` groups
    occurrences that share the route, the within-trip timing offsets, and
    the start step within their cycle; partners in a group differ only by
    cycle and are tied together under daily consistency.
    """

    id: int
    home_hub: int
    away_hub: int
    legs: tuple[int, ...]
    cycle: int
    start_in_cycle: int
    start_t: int
    on_duty_hours: float
    driving_hours: float
    contract_fee: float
    capacity: int
    route_hubs: tuple[int, ...]
    template_key: TemplateKey


@dataclass
class ServiceCatalog:
    """Immutable set of candidate services with arc and template indexes."""

    services: tuple[Service, ...]
    arc_index: dict[int, frozenset[int]] = field(init=False, repr=False)
    template_index: dict[TemplateKey, tuple[int, ...]] = field(init=False, repr=False)
    moving_arc_ids: frozenset[int] = frozenset()

    def __post_init__(self) -> None:
        arc_map: dict[int, set[int]] = {}
        tmpl: dict[TemplateKey, list[int]] = {}
        for svc in self.services:
            for leg in svc.legs:
                arc_map.setdefault(leg, set()).add(svc.id)
            tmpl.setdefault(svc.template_key, []).append(svc.id)
        self.arc_index = {a: frozenset(ids) for a, ids in arc_map.items()}
        self.template_index = {k: tuple(sorted(v)) for k, v in tmpl.items()}

    def __len__(self) -> int:
        return len(self.services)

    def service(self, service_id: int) -> Service:
        if not 0 <= service_id < len(self.services):
            raise ValidationError(f"unknown service id {service_id}")
        return self.services[service_id]


def enumerate_services(
    tsn: TimeSpaceNetwork,
    pnet: PhysicalNetwork,
    hos: HosPolicy,
    costs: CostParams,
    consistency: Consistency = Consistency.WEEKLY,
) -> ServiceCatalog:
    """Enumerate every feasible adjacent-hub round trip.

    For each ordered hub pair connected in both directions, every departure
    step and every away-hub dwell that keeps the trip inside the horizon and
    inside both HOS caps yields one service. The contract fee is the driver
    hourly rate times on-duty hours; under daily consistency the driver rate
    carries the consistency discount. Ids follow the deterministic loop
    order (home hub, away hub, departure, return departure).
    """
    grid = tsn.grid
    step_h = grid.step_hours
    rate = costs.driver_hourly
    if consistency is Consistency.DAILY:
        rate = rate * costs.consistency_discount

    services: list[Service] = []
    for home in range(pnet.num_hubs):
        for away in pnet.out_neighbors.get(home, ()):
            out_arc = pnet.arc_between(home, away)
            back_arc = pnet.arc_between(away, home)
            if out_arc is None or back_arc is None:
                continue
            driving_h = (out_arc.travel_steps + back_arc.travel_steps) * step_h
            if driving_h > hos.max_driving_hours + 1e-9:
                continue
            for t1 in range(grid.num_steps + 1):
                arr1 = t1 + out_arc.travel_steps
                if arr1 > grid.num_steps:
                    break
                for t2 in range(arr1, grid.num_steps + 1):
                    arr2 = t2 + back_arc.travel_steps
                    if arr2 > grid.num_steps:
                        break
                    on_duty_h = (arr2 - t1) * step_h
                    if on_duty_h > hos.max_on_duty_hours + 1e-9:
                        break
                    if consistency is Consistency.DAILY:
                        cycle, start_in_cycle = divmod(t1, grid.cycle_steps)
                        if cycle >= grid.num_cycles:
                            raise ValidationError(
                                f"service start {t1} falls outside the {grid.num_cycles} "
                                "declared cycles; extend num_cycles to cover the horizon"
                            )
                    else:
                        cycle, start_in_cycle = 0, t1
                    legs = (
                        tsn.moving_lookup[(home, t1, away)],
                        tsn.moving_lookup[(away, t2, home)],
                    )
                    route = (home, away, home)
                    services.append(
                        Service(
                            id=len(services),
                            home_hub=home,
                            away_hub=away,
                            legs=legs,
                            cycle=cycle,
                            start_in_cycle=start_in_cycle,
                            start_t=t1,
                            on_duty_hours=on_duty_h,
                            driving_hours=driving_h,
                            contract_fee=rate * on_duty_h,
                            capacity=costs.default_capacity,
                            route_hubs=route,
                            template_key=(route, (0, t2 - t1), start_in_cycle),
                        )
                    )

    moving_ids = frozenset(
        arc.id for arc in tsn.arcs if arc.kind is ArcKind.MOVING
    )
    return ServiceCatalog(services=tuple(services), moving_arc_ids=moving_ids)


def services_on_arc(catalog: ServiceCatalog, arc_id: int) -> frozenset[int]:
    """Ids of the services whose legs include the given moving arc."""
    if arc_id not in catalog.moving_arc_ids:
        raise ValidationError(f"arc {arc_id} is not a moving arc of this catalog's network")
    return catalog.arc_index.get(arc_id, frozenset())


def consistency_partners(catalog: ServiceCatalog, service_id: int) -> tuple[int, ...]:
    """All services sharing the template of the given one, itself included.

    Sorted by cycle. Under weekly enumeration every template is a singleton.
    """
    svc = catalog.service(service_id)
    partners = catalog.template_index[svc.template_key]
    return tuple(sorted(partners, key=lambda sid: (catalog.services[sid].cycle, sid)))


def apply_service_overrides(catalog: ServiceCatalog, rows: list[dict]) -> ServiceCatalog:
    """Prune the catalog to the listed services, optionally re-pricing them.

    Each row selects enumerated services by ``route`` (hub id sequence) and
    ``start_in_cycle``, optionally narrowed by ``cycle``, and may override
    ``capacity`` and ``contract_fee``. The returned catalog contains exactly
    the matched services, re-indexed densely in their original order. A row
    matching nothing is an error.
    """
    keep: dict[int, Service] = {}
    for i, row in enumerate(rows):
        try:
            route = tuple(int(h) for h in row["route"])
            start_in_cycle = int(row["start_in_cycle"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"override row {i}: {exc}") from exc
        cycle = row.get("cycle")
        matched = [
            s
            for s in catalog.services
            if s.route_hubs == route
            and s.start_in_cycle == start_in_cycle
            and (cycle is None or s.cycle == int(cycle))
        ]
        if not matched:
            raise ValidationError(
                f"override row {i}: no service matches route={route}, "
                f"start_in_cycle={start_in_cycle}, cycle={cycle}"
            )
        for s in matched:
            updated = keep.get(s.id, s)
            if "capacity" in row and row["capacity"] is not None:
                cap = int(row["capacity"])
                if cap < 0:
                    raise ValidationError(f"override row {i}: capacity must be >= 0")
                updated = replace(updated, capacity=cap)
            if "contract_fee" in row and row["contract_fee"] is not None:
                updated = replace(updated, contract_fee=float(row["contract_fee"]))
            keep[s.id] = updated

    ordered = [keep[sid] for sid in sorted(keep)]
    reindexed = tuple(replace(s, id=i) for i, s in enumerate(ordered))
    return ServiceCatalog(services=reindexed, moving_arc_ids=catalog.moving_arc_ids)
