"""Commodities, demand scenarios, and outsourcing prices.

Only volumes vary across scenarios; origins, destinations, and time windows
are commodity attributes. The bundled generator draws volumes from an
over-dispersed integer law (negative-binomial shape) with a configurable
eastbound/westbound imbalance, fully reproducible from a seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .network import PhysicalNetwork, TimeGrid, shortest_distance_miles

PROBABILITY_TOL = 1e-12


@dataclass(frozen=True)
class Commodity:
    """One transport request: origin, destination, entry and due steps.

    ``outsource_cost_per_vehicle`` is the per-vehicle third-party price
    (rate times shortest o-d distance); it is populated when the commodity
    is priced against a network, None before that.
    """

    id: int
    origin: int
    destination: int
    entry_step: int
    due_step: int
    outsource_cost_per_vehicle: float | None = None

    def __post_init__(self) -> None:
        if self.origin == self.destination:
            raise ValidationError(f"commodity {self.id}: origin equals destination")
        if not 0 <= self.entry_step < self.due_step:
            raise ValidationError(
                f"commodity {self.id}: need 0 <= entry < due, got "
                f"({self.entry_step}, {self.due_step})"
            )


@dataclass(frozen=True)
class Scenario:
    """One demand realization: a probability and per-commodity volumes."""

    id: int
    probability: float
    volumes: dict[int, float]

    def volume(self, commodity_id: int) -> float:
        return self.volumes.get(commodity_id, 0.0)


@dataclass(frozen=True)
class ScenarioSet:
    """Nonempty scenario collection whose probabilities sum to one."""

    scenarios: tuple[Scenario, ...]
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.scenarios:
            raise ValidationError("scenario set must be nonempty")
        ids = [s.id for s in self.scenarios]
        if len(set(ids)) != len(ids):
            raise ValidationError(f"duplicate scenario ids: {ids}")
        for s in self.scenarios:
            if not 0 < s.probability <= 1:
                raise ValidationError(f"scenario {s.id}: probability must be in (0, 1]")
            for k, v in s.volumes.items():
                if v < 0 or not math.isfinite(v):
                    raise ValidationError(f"scenario {s.id}: bad volume {v} for commodity {k}")
        total = math.fsum(s.probability for s in self.scenarios)
        if abs(total - 1.0) > PROBABILITY_TOL:
            raise ValidationError(f"scenario probabilities sum to {total!r}, not 1")

    def __len__(self) -> int:
        return len(self.scenarios)


@dataclass(frozen=True)
class DemandSpec:
    """Shape of generated demand.

    ``mean_volume`` is the base per-commodity mean; eastbound commodities
    (destination id greater than origin id, matching the west-to-east hub
    numbering of the bundled testbed) get weight ``2 * east_share`` and
    westbound ones ``2 * (1 - east_share)``, so a balanced OD mix keeps the
    overall mean. ``dispersion`` is the negative-binomial overdispersion
    (variance = mean * (1 + dispersion * mean)); zero degenerates to the
    rounded mean. ``mean_by_commodity`` overrides the mean per commodity id.
    """

    mean_volume: float
    dispersion: float = 0.0
    east_share: float = 0.5
    demand_days: int = 1
    entry_step_in_day: int = 0
    window_days: int = 2
    mean_by_commodity: dict[int, float] | None = None

    def __post_init__(self) -> None:
        if self.mean_volume < 0 or not math.isfinite(self.mean_volume):
            raise ValidationError("mean_volume must be finite and nonnegative")
        if self.dispersion < 0 or not math.isfinite(self.dispersion):
            raise ValidationError("dispersion must be finite and nonnegative")
        if not 0 <= self.east_share <= 1:
            raise ValidationError("east_share must be in [0, 1]")
        if self.demand_days < 1 or self.window_days < 1:
            raise ValidationError("demand_days and window_days must be at least 1")

    def mean_for(self, commodity: Commodity) -> float:
        if self.mean_by_commodity is not None and commodity.id in self.mean_by_commodity:
            return self.mean_by_commodity[commodity.id]
        eastbound = commodity.destination > commodity.origin
        weight = 2.0 * self.east_share if eastbound else 2.0 * (1.0 - self.east_share)
        return self.mean_volume * weight


def generate_scenarios(
    spec: DemandSpec, commodities: list[Commodity] | tuple[Commodity, ...], n: int, seed: int
) -> ScenarioSet:
    """Draw ``n`` equiprobable scenarios of integer volumes.

    Volumes are independent per commodity, negative-binomial with the
    commodity mean and the spec dispersion; dispersion zero yields the
    rounded mean deterministically.
    """
    if n < 1:
        raise ValidationError("scenario count must be at least 1")
    rng = np.random.default_rng(seed)
    ordered = sorted(commodities, key=lambda k: k.id)
    prob = 1.0 / n
    scenarios = []
    for w in range(n):
        volumes: dict[int, float] = {}
        for k in ordered:
            mean = spec.mean_for(k)
            if mean <= 0:
                volumes[k.id] = 0.0
            elif spec.dispersion == 0:
                volumes[k.id] = float(round(mean))
            else:
                shape = 1.0 / spec.dispersion
                p = shape / (shape + mean)
                volumes[k.id] = float(rng.negative_binomial(shape, p))
        scenarios.append(Scenario(id=w, probability=prob, volumes=volumes))
    return ScenarioSet(scenarios=tuple(scenarios), seed=seed)


def mean_scenario(sset: ScenarioSet) -> Scenario:
    """Probability-one scenario carrying the expected volume per commodity."""
    keys: set[int] = set()
    for s in sset.scenarios:
        keys.update(s.volumes)
    volumes = {
        k: math.fsum(s.probability * s.volumes.get(k, 0.0) for s in sset.scenarios)
        for k in sorted(keys)
    }
    return Scenario(id=0, probability=1.0, volumes=volumes)


def outsourcing_cost(
    commodity: Commodity, scenario: Scenario, rate: float, pnet: PhysicalNetwork
) -> float:
    """Third-party cost of the commodity in one scenario.

    Rate per vehicle-mile times the shortest o-d distance times the realized
    volume. Raises UnreachableError when the pair is disconnected.
    """
    miles = shortest_distance_miles(pnet, commodity.origin, commodity.destination)
    return rate * miles * scenario.volume(commodity.id)


def commodities_from_rows(rows: list[dict]) -> tuple[Commodity, ...]:
    """Parse commodity document rows {id, origin, destination, entry_step, due_step}."""
    out = []
    for i, row in enumerate(rows):
        try:
            out.append(
                Commodity(
                    id=int(row["id"]),
                    origin=int(row["origin"]),
                    destination=int(row["destination"]),
                    entry_step=int(row["entry_step"]),
                    due_step=int(row["due_step"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"commodity row {i}: {exc}") from exc
    ids = [k.id for k in out]
    if len(set(ids)) != len(ids):
        raise ValidationError("duplicate commodity ids")
    return tuple(sorted(out, key=lambda k: k.id))


def scenarios_from_rows(
    rows: list[dict], commodities: tuple[Commodity, ...]
) -> ScenarioSet:
    """Parse scenario document rows {scenario_id, probability, commodity_id, volume}.

    Commodities missing from a scenario get volume zero. Ingested sets carry
    seed 0.
    """
    known = {k.id for k in commodities}
    probs: dict[int, float] = {}
    volumes: dict[int, dict[int, float]] = {}
    for i, row in enumerate(rows):
        try:
            sid = int(row["scenario_id"])
            p = float(row["probability"])
            kid = int(row["commodity_id"])
            vol = float(row["volume"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"scenario row {i}: {exc}") from exc
        if kid not in known:
            raise ValidationError(f"scenario row {i}: unknown commodity id {kid}")
        if sid in probs and probs[sid] != p:
            raise ValidationError(f"scenario row {i}: conflicting probability for scenario {sid}")
        probs[sid] = p
        volumes.setdefault(sid, {})[kid] = vol
    scenarios = tuple(
        Scenario(
            id=sid,
            probability=probs[sid],
            volumes={k.id: volumes[sid].get(k.id, 0.0) for k in commodities},
        )
        for sid in sorted(probs)
    )
    return ScenarioSet(scenarios=scenarios, seed=0)


def build_commodities(
    spec: DemandSpec, grid: TimeGrid, od_pairs: list[tuple[int, int]]
) -> tuple[Commodity, ...]:
    """Fabricate one commodity per OD pair per demand day.

    Entry falls at ``entry_step_in_day`` of each day; the due step follows
    ``window_days`` later. Raises when a window would leave the horizon.
    """
    steps_per_day = grid.cycle_steps
    out = []
    for day in range(spec.demand_days):
        entry = day * steps_per_day + spec.entry_step_in_day
        due = entry + spec.window_days * steps_per_day
        if due > grid.num_steps:
            raise ValidationError(
                f"demand day {day}: due step {due} exceeds horizon {grid.num_steps}"
            )
        for o, d in od_pairs:
            out.append(
                Commodity(
                    id=len(out), origin=o, destination=d, entry_step=entry, due_step=due
                )
            )
    return tuple(out)
