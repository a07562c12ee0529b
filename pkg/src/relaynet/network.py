"""Physical hub networks and their time-space expansion.

The physical network is a directed graph of relay hubs with per-arc travel
times counted in whole grid steps (travel plus buffer). Planning happens on a
time-space expansion: every hub is replicated once per time instant, a moving
arc connects replicates of adjacent hubs offset by the travel steps, and a
holding arc connects consecutive replicates of the same hub.

Construction is pure; the resulting objects are treated as immutable and are
safe to share across concurrent readers.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field
from enum import Enum

from .errors import UnreachableError, ValidationError


@dataclass(frozen=True)
class Hub:
    """A relay hub. Coordinates are reporting metadata only."""

    id: int
    name: str
    lon: float | None = None
    lat: float | None = None


@dataclass(frozen=True)
class PhysicalArc:
    """Directed hub-to-hub connection."""

    from_hub: int
    to_hub: int
    travel_steps: int
    distance_miles: float


@dataclass(frozen=True)
class TimeGrid:
    """Discretized planning horizon with its cycle layout.

    Time instants are 0..num_steps. ``cycle_steps`` is the length of one
    schedule cycle (a day, under daily consistency) in steps.
    """

    step_hours: float
    num_steps: int
    cycle_steps: int
    num_cycles: int

    def __post_init__(self) -> None:
        if self.step_hours <= 0:
            raise ValidationError("step_hours must be positive")
        if self.num_steps < 1:
            raise ValidationError("num_steps must be at least 1")
        if self.cycle_steps < 1 or self.num_cycles < 1:
            raise ValidationError("cycle_steps and num_cycles must be at least 1")


class ArcKind(str, Enum):
    HOLDING = "holding"
    MOVING = "moving"


@dataclass(frozen=True)
class TSArc:
    """Arc of the time-space network.

    ``phys_index`` points into PhysicalNetwork.arcs for moving arcs and is
    None for holding arcs.
    """

    id: int
    kind: ArcKind
    tail_hub: int
    tail_t: int
    head_hub: int
    head_t: int
    phys_index: int | None = None

    @property
    def travel_steps(self) -> int:
        return self.head_t - self.tail_t


@dataclass
class PhysicalNetwork:
    """Validated hub network with directed arcs and lookup indexes."""

    hubs: tuple[Hub, ...]
    arcs: tuple[PhysicalArc, ...]
    arc_index: dict[tuple[int, int], int] = field(init=False, repr=False)
    out_neighbors: dict[int, tuple[int, ...]] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        ids = [h.id for h in self.hubs]
        if ids != list(range(len(self.hubs))):
            raise ValidationError(f"hub ids must be dense 0..{len(self.hubs) - 1}, got {ids}")
        self.arc_index = {}
        outs: dict[int, list[int]] = {h.id: [] for h in self.hubs}
        for i, arc in enumerate(self.arcs):
            key = (arc.from_hub, arc.to_hub)
            if key in self.arc_index:
                raise ValidationError(f"duplicate directed arc {key}")
            self.arc_index[key] = i
            outs[arc.from_hub].append(arc.to_hub)
        self.out_neighbors = {h: tuple(sorted(v)) for h, v in outs.items()}

    @property
    def num_hubs(self) -> int:
        return len(self.hubs)

    def arc_between(self, from_hub: int, to_hub: int) -> PhysicalArc | None:
        idx = self.arc_index.get((from_hub, to_hub))
        return None if idx is None else self.arcs[idx]


def load_physical_network(doc: dict) -> PhysicalNetwork:
    """Build a PhysicalNetwork from a parsed network document.

    The document holds a ``hubs`` list ({id, name, lon?, lat?}) and an
    ``arcs`` list ({from, to, travel_steps, distance_miles, directed?}).
    Arc rows are bidirectional unless flagged ``directed: true``; each
    bidirectional row expands into two directed arcs. Errors name the
    offending row.
    """
    if not isinstance(doc, dict) or "hubs" not in doc or "arcs" not in doc:
        raise ValidationError("network document needs 'hubs' and 'arcs' lists")

    hubs = []
    for i, row in enumerate(doc["hubs"]):
        try:
            hubs.append(
                Hub(
                    id=int(row["id"]),
                    name=str(row.get("name", f"hub{row['id']}")),
                    lon=None if row.get("lon") is None else float(row["lon"]),
                    lat=None if row.get("lat") is None else float(row["lat"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"hub row {i}: {exc}") from exc
    hubs.sort(key=lambda h: h.id)
    known = {h.id for h in hubs}
    if len(known) != len(hubs):
        raise ValidationError("duplicate hub ids")

    arcs: list[PhysicalArc] = []
    seen: set[tuple[int, int]] = set()

    def add(row_no: int, a: int, b: int, steps: int, miles: float) -> None:
        if a == b:
            raise ValidationError(f"arc row {row_no}: self-loop on hub {a}")
        if a not in known or b not in known:
            raise ValidationError(f"arc row {row_no}: unknown hub id in ({a}, {b})")
        if steps < 1:
            raise ValidationError(f"arc row {row_no}: travel_steps must be >= 1, got {steps}")
        if miles <= 0:
            raise ValidationError(f"arc row {row_no}: distance_miles must be > 0, got {miles}")
        if (a, b) in seen:
            raise ValidationError(f"arc row {row_no}: duplicate arc ({a}, {b})")
        seen.add((a, b))
        arcs.append(PhysicalArc(a, b, steps, miles))

    for i, row in enumerate(doc["arcs"]):
        try:
            a = int(row["from"])
            b = int(row["to"])
            steps = int(row["travel_steps"])
            miles = float(row["distance_miles"])
            directed = bool(row.get("directed", False))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"arc row {i}: {exc}") from exc
        add(i, a, b, steps, miles)
        if not directed:
            add(i, b, a, steps, miles)

    return PhysicalNetwork(hubs=tuple(hubs), arcs=tuple(arcs))


@dataclass
class TimeSpaceNetwork:
    """Time-expanded network over a PhysicalNetwork and a TimeGrid.

    Nodes are (hub, t) pairs encoded as ``hub * (T + 1) + t``. Arc ids are
    assigned deterministically: sorted by kind (holding before moving), tail
    hub, tail time, then head hub.
    """

    pnet: PhysicalNetwork
    grid: TimeGrid
    arcs: tuple[TSArc, ...]
    in_arcs: tuple[tuple[int, ...], ...]
    out_arcs: tuple[tuple[int, ...], ...]
    moving_lookup: dict[tuple[int, int, int], int]  # (from_hub, depart_t, to_hub) -> arc id
    holding_lookup: dict[tuple[int, int], int]  # (hub, t) -> arc id of (hub,t)->(hub,t+1)

    @property
    def num_hubs(self) -> int:
        return self.pnet.num_hubs

    @property
    def num_nodes(self) -> int:
        return self.pnet.num_hubs * (self.grid.num_steps + 1)

    def node_id(self, hub: int, t: int) -> int:
        return hub * (self.grid.num_steps + 1) + t

    def node_of(self, node_id: int) -> tuple[int, int]:
        return divmod(node_id, self.grid.num_steps + 1)

    def moving_arc_ids(self) -> tuple[int, ...]:
        return tuple(a.id for a in self.arcs if a.kind is ArcKind.MOVING)


def build_time_space_network(pnet: PhysicalNetwork, grid: TimeGrid) -> TimeSpaceNetwork:
    """Expand a physical network over the grid.

    Every holding arc (n, t) -> (n, t + 1) exists for t < T. A moving arc
    exists for each physical arc and each departure whose arrival stays
    within the horizon; later departures are simply not created.
    """
    T = grid.num_steps
    raw: list[tuple[ArcKind, int, int, int, int, int | None]] = []
    for hub in range(pnet.num_hubs):
        for t in range(T):
            raw.append((ArcKind.HOLDING, hub, t, hub, t + 1, None))
    for pi, parc in enumerate(pnet.arcs):
        for t in range(T - parc.travel_steps + 1):
            raw.append((ArcKind.MOVING, parc.from_hub, t, parc.to_hub, t + parc.travel_steps, pi))

    raw.sort(key=lambda r: (r[0].value, r[1], r[2], r[3]))
    arcs = tuple(
        TSArc(i, kind, th, tt, hh, ht, pi) for i, (kind, th, tt, hh, ht, pi) in enumerate(raw)
    )

    num_nodes = pnet.num_hubs * (T + 1)
    ins: list[list[int]] = [[] for _ in range(num_nodes)]
    outs: list[list[int]] = [[] for _ in range(num_nodes)]
    moving_lookup: dict[tuple[int, int, int], int] = {}
    holding_lookup: dict[tuple[int, int], int] = {}
    for arc in arcs:
        tail = arc.tail_hub * (T + 1) + arc.tail_t
        head = arc.head_hub * (T + 1) + arc.head_t
        outs[tail].append(arc.id)
        ins[head].append(arc.id)
        if arc.kind is ArcKind.MOVING:
            moving_lookup[(arc.tail_hub, arc.tail_t, arc.head_hub)] = arc.id
        else:
            holding_lookup[(arc.tail_hub, arc.tail_t)] = arc.id

    return TimeSpaceNetwork(
        pnet=pnet,
        grid=grid,
        arcs=arcs,
        in_arcs=tuple(tuple(v) for v in ins),
        out_arcs=tuple(tuple(v) for v in outs),
        moving_lookup=moving_lookup,
        holding_lookup=holding_lookup,
    )


def shortest_distance_miles(pnet: PhysicalNetwork, origin: int, destination: int) -> float:
    """Length in miles of the shortest path from origin to destination.

    Dijkstra over declared arc distances. Raises UnreachableError when no
    path exists.
    """
    if origin not in range(pnet.num_hubs) or destination not in range(pnet.num_hubs):
        raise ValidationError(f"unknown hub in pair ({origin}, {destination})")
    if origin == destination:
        return 0.0
    dist = {origin: 0.0}
    heap: list[tuple[float, int]] = [(0.0, origin)]
    done: set[int] = set()
    while heap:
        d, node = heapq.heappop(heap)
        if node in done:
            continue
        if node == destination:
            return d
        done.add(node)
        for nbr in pnet.out_neighbors.get(node, ()):
            arc = pnet.arcs[pnet.arc_index[(node, nbr)]]
            nd = d + arc.distance_miles
            if nd < dist.get(nbr, float("inf")):
                dist[nbr] = nd
                heapq.heappush(heap, (nd, nbr))
    raise UnreachableError(f"hub {destination} is unreachable from hub {origin}")
