"""Synthetic testbed generator: a west-to-east relay hub corridor.

Fabricates a hub network laid out west to east, connected by short arcs
sized so a round trip fits the daily driving window, plus commodities over
the early planning days and an east-biased demand specification. The
default shape (19 hubs, 95 arcs, five 6-hour-step days, two-day windows,
196 commodities) makes the full planning workflow runnable end to end on
fabricated data; smaller shapes solve quickly with the built-in solver,
larger ones are best exported to MPS.
"""

from __future__ import annotations

import math

import numpy as np

from .demand import DemandSpec, build_commodities
from .errors import ValidationError
from .network import TimeGrid, load_physical_network
from .params import CostParams


def make_network_doc(
    num_hubs: int = 19,
    num_arcs: int = 95,
    *,
    seed: int = 7,
    travel_steps: int = 1,
    leg_hours: float = 5.5,
    avg_mph: float = 50.0,
) -> dict:
    """Connected corridor network document.

    Hubs are numbered west to east; a chain guarantees connectivity and the
    remaining arcs join the nearest hub pairs first. Arc length is the leg
    driving time at the average speed.
    """
    max_arcs = num_hubs * (num_hubs - 1) // 2
    if not 1 < num_hubs:
        raise ValidationError("need at least 2 hubs")
    if not num_hubs - 1 <= num_arcs <= max_arcs:
        raise ValidationError(
            f"num_arcs must be in [{num_hubs - 1}, {max_arcs}] for {num_hubs} hubs"
        )
    rng = np.random.default_rng(seed)
    lon0, lon1 = -88.0, -81.0
    hubs = []
    for i in range(num_hubs):
        frac = i / max(1, num_hubs - 1)
        hubs.append(
            {
                "id": i,
                "name": f"H{i:02d}",
                "lon": round(lon0 + frac * (lon1 - lon0) + float(rng.uniform(-0.15, 0.15)), 4),
                "lat": round(33.5 + float(rng.uniform(-1.0, 1.0)), 4),
            }
        )
    pairs = sorted(
        ((i, j) for i in range(num_hubs) for j in range(i + 1, num_hubs)),
        key=lambda p: (p[1] - p[0], p[0]),
    )
    miles = leg_hours * avg_mph
    arcs = [
        {"from": a, "to": b, "travel_steps": travel_steps, "distance_miles": miles}
        for a, b in pairs[:num_arcs]
    ]
    return {"hubs": hubs, "arcs": arcs}


def make_testbed(
    num_hubs: int = 19,
    num_arcs: int = 95,
    *,
    seed: int = 7,
    days: int = 5,
    step_hours: float = 6.0,
    demand_days: int = 4,
    window_days: int = 2,
    commodities_per_day: int = 49,
    mean_volume: float = 3.0,
    dispersion: float = 0.6,
    east_share: float = 0.949,
    num_scenarios: int = 30,
) -> dict:
    """Network document, commodity rows, and a run configuration mapping.

    Commodity OD pairs are drawn (reproducibly from the seed) over the hub
    set with the given count per demand day. The returned config carries a
    scenario-generation block rather than fixed scenarios.
    """
    steps_per_day = int(round(24.0 / step_hours))
    if not math.isclose(steps_per_day * step_hours, 24.0):
        raise ValidationError(f"step_hours {step_hours} does not divide a day")
    network = make_network_doc(num_hubs, num_arcs, seed=seed)
    grid = TimeGrid(
        step_hours=step_hours,
        num_steps=days * steps_per_day,
        cycle_steps=steps_per_day,
        num_cycles=days,
    )

    rng = np.random.default_rng(seed + 1)
    all_pairs = [(o, d) for o in range(num_hubs) for d in range(num_hubs) if o != d]
    if commodities_per_day > len(all_pairs):
        raise ValidationError(
            f"commodities_per_day {commodities_per_day} exceeds OD pairs {len(all_pairs)}"
        )
    chosen = rng.choice(len(all_pairs), size=commodities_per_day, replace=False)
    od_pairs = [all_pairs[int(i)] for i in sorted(chosen)]

    spec = DemandSpec(
        mean_volume=mean_volume,
        dispersion=dispersion,
        east_share=east_share,
        demand_days=demand_days,
        window_days=window_days,
    )
    commodities = build_commodities(spec, grid, od_pairs)
    commodity_rows = [
        {
            "id": k.id,
            "origin": k.origin,
            "destination": k.destination,
            "entry_step": k.entry_step,
            "due_step": k.due_step,
        }
        for k in commodities
    ]

    costs = CostParams(avg_mph=50.0)
    config = {
        "network": "network.yaml",
        "commodities": "commodities.csv",
        "generate": {
            "count": num_scenarios,
            "mean_volume": mean_volume,
            "dispersion": dispersion,
            "east_share": east_share,
        },
        "grid": {
            "step_hours": step_hours,
            "num_steps": grid.num_steps,
            "cycle_steps": grid.cycle_steps,
            "num_cycles": grid.num_cycles,
        },
        # Whole-step accounting folds the half-hour buffer into driving
        # time, so a 6h-step round trip books 12 driving hours; the cap
        # must admit that for any service to exist on this grid.
        "hos": {"max_on_duty_hours": 14.0, "max_driving_hours": 2.0 * step_hours},
        "costs": {
            "driver_hourly": costs.driver_hourly,
            "tractor_hourly": costs.tractor_hourly,
            "hauler_hourly": {int(k): float(v) for k, v in costs.hauler_hourly_by_size.items()},
            "outsource_per_vehicle_mile": costs.outsource_per_vehicle_mile,
            "consistency_discount": costs.consistency_discount,
            "avg_mph": costs.avg_mph,
            "default_capacity": costs.default_capacity,
        },
        "haulers": [8],
        "pattern": "flu-mcp",
        "consistency": "weekly",
        "seed": seed,
        "output_dir": "out",
    }
    load_physical_network(network)  # validate before handing out
    return {"network": network, "commodities": commodity_rows, "config": config}
