"""Compile gadget networks into levels.

Single-player levels place one door stamp per instance in a row and give
every wire its own track above or below the stamps. Junctions become
vertical spines to the right of the stamps; their order is searched until
no two corridors meet.

Zero-player levels route jellyfish: each output drops onto the bus row of
its wire component, glides right into a riser of springs, rides it up to a
return row above the stamps, glides left and falls into the component's
input. Outputs whose component has no input fall into a pit.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import islice, permutations
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from gadgetforge.blueprints import (
    FLAVOR_KINDS,
    Blueprint,
    FinalGadget,
    Flavor,
    Side,
    crossover_blueprint,
    diode_blueprint,
    door_blueprint,
    goal_blueprint,
    switch_blueprint,
)
from gadgetforge.config import CompilerSettings
from gadgetforge.errors import (
    BranchingWire,
    FlavorMismatch,
    InitialStateUnsupported,
    RoutingFailure,
)
from gadgetforge.gadgets import OPEN, GadgetKind
from gadgetforge.levels import Cell, Entity, Level, Tile
from gadgetforge.network import Mode, Network, split_endpoint, validate_network

logger = logging.getLogger(__name__)


# =============================================================================
# MANIFEST
# =============================================================================

@dataclass(frozen=True)
class StampPlacement:
    instance: str
    blueprint: str
    x: int
    y: int
    width: int
    height: int
    chamber: bool = False


@dataclass
class RoutingPlan:
    hallways: int = 0
    merges: int = 0
    crossovers: int = 0
    downward_turns: int = 0
    crossings: List[Cell] = field(default_factory=list)


@dataclass(frozen=True)
class SizeBound:
    """``M <= constant * max(1, instances + edges) * stamp_side``."""
    units: int
    stamp_side: int
    constant: int

    @property
    def limit(self) -> int:
        return self.constant * max(1, self.units) * self.stamp_side


@dataclass
class Manifest:
    mode: Mode
    width: int
    height: int
    stamps: List[StampPlacement] = field(default_factory=list)
    ports: Dict[str, Cell] = field(default_factory=dict)
    start: Optional[Cell] = None
    goal: Optional[Cell] = None
    plan: RoutingPlan = field(default_factory=RoutingPlan)
    bound: Optional[SizeBound] = None


def format_manifest(manifest: Manifest) -> str:
    lines = [f"manifest {manifest.mode.value}", f"size {manifest.width} {manifest.height}"]
    for s in manifest.stamps:
        lines.append(f"stamp {s.instance} {s.x} {s.y} {s.width} {s.height} {s.blueprint}")
    for endpoint, (x, y) in manifest.ports.items():
        lines.append(f"port {endpoint} {x} {y}")
    if manifest.start is not None:
        lines.append(f"start {manifest.start[0]} {manifest.start[1]}")
    if manifest.goal is not None:
        lines.append(f"goal {manifest.goal[0]} {manifest.goal[1]}")
    plan = manifest.plan
    lines.append(
        f"pieces hallway={plan.hallways} merge={plan.merges} "
        f"crossover={plan.crossovers} downward_turn={plan.downward_turns}"
    )
    lines.extend(f"crossing {x} {y}" for x, y in plan.crossings)
    if manifest.bound is not None:
        b = manifest.bound
        lines.append(
            f"bound M={max(manifest.width, manifest.height)} c={b.constant} "
            f"units={b.units} stamp_side={b.stamp_side} limit={b.limit}"
        )
    return "\n".join(lines) + "\n"


# =============================================================================
# CANVAS
# =============================================================================

class _Canvas:
    """Solid grid that corridors are carved out of."""

    def __init__(self, width: int, height: int) -> None:
        self.width = width
        self.height = height
        self.tiles = np.full((height, width), Tile.SOLID, dtype=np.uint8)
        self.entities: List[Entity] = []

    def carve_h(self, y: int, x0: int, x1: int) -> None:
        lo, hi = sorted((x0, x1))
        self.tiles[y, lo:hi + 1] = Tile.EMPTY

    def carve_v(self, x: int, y0: int, y1: int) -> None:
        lo, hi = sorted((y0, y1))
        self.tiles[lo:hi + 1, x] = Tile.EMPTY

    def place(self, blueprint: Blueprint, x0: int, y0: int, prefix: str) -> None:
        h, w = blueprint.height, blueprint.width
        self.tiles[y0:y0 + h, x0:x0 + w] = blueprint.tiles()
        for e in blueprint.entities:
            # Block ids are scoped per stamp so springs find their own blocks.
            params = tuple(
                (k, f"{prefix}/{v}") if k in ("id", "block") else (k, v) for k, v in e.params
            )
            self.entities.append(Entity(e.kind, x0 + e.x, y0 + e.y, params))

    def add(self, kind: str, x: int, y: int, **params: str) -> None:
        self.entities.append(Entity(kind, x, y, tuple(params.items())))

    def level(self, manifest: Manifest) -> Level:
        return Level(self.width, self.height, self.tiles, self.entities, manifest)


class _Segments:
    """Straight corridor pieces, tagged with the wire they belong to."""

    def __init__(self) -> None:
        self.horizontal: List[Tuple[int, int, int, object]] = []  # (y, x0, x1, owner)
        self.vertical: List[Tuple[int, int, int, object]] = []  # (x, y0, y1, owner)

    def h(self, y: int, x0: int, x1: int, owner: object) -> None:
        self.horizontal.append((y, min(x0, x1), max(x0, x1), owner))

    def v(self, x: int, y0: int, y1: int, owner: object) -> None:
        self.vertical.append((x, min(y0, y1), max(y0, y1), owner))

    def carve(self, canvas: _Canvas) -> None:
        for y, x0, x1, _ in self.horizontal:
            canvas.carve_h(y, x0, x1)
        for x, y0, y1, _ in self.vertical:
            canvas.carve_v(x, y0, y1)

    def crossings(self, related) -> List[Cell]:
        found = set()
        for y, x0, x1, a in self.horizontal:
            for x, y0, y1, b in self.vertical:
                if x0 <= x <= x1 and y0 <= y <= y1 and not related(a, b):
                    found.add((x, y))
        return sorted(found, key=lambda c: (c[1], c[0]))

    def __len__(self) -> int:
        return len(self.horizontal) + len(self.vertical)


def _check_bound(width: int, height: int, bound: SizeBound) -> None:
    if max(width, height) > bound.limit:
        raise RoutingFailure(f"level side {max(width, height)} exceeds the bound {bound.limit}")


# =============================================================================
# SINGLE PLAYER
# =============================================================================

def _one_player_blueprint(flavor: Flavor, kind: GadgetKind, state: str) -> Blueprint:
    if kind is GadgetKind.DIODE:
        return diode_blueprint()
    if kind is GadgetKind.CROSSOVER:
        return crossover_blueprint()
    return door_blueprint(flavor, state)


def _check_flavor(network: Network, flavor: Flavor) -> None:
    door_kind = FLAVOR_KINDS[flavor]
    for inst in network.instances:
        if inst.kind not in (door_kind, GadgetKind.DIODE, GadgetKind.CROSSOVER):
            raise FlavorMismatch(f"{inst.id} is a {inst.label}; the {flavor.value} flavor builds {door_kind.value}")
        if flavor is Flavor.KEVIN and inst.kind is door_kind and inst.initial_state == OPEN:
            raise InitialStateUnsupported(f"{inst.id} starts open; Kevin doors always start closed")


# Junction spine orders tried before giving up on a crossing-free layout.
SPINE_ORDERS = 720


class _OnePlayerLayout:
    """Tracks for one left-to-right order of the junction spines.

    Every wire is an arc over the row of stamps: above it when it touches a
    top port, below it when it touches a bottom port, above it when it joins
    two junctions. A wire from a top port to a bottom port goes round a
    connector column on the right. Shorter arcs get the rows nearest the
    stamps, so an arc nested inside another never meets it.
    """

    def __init__(
        self,
        network: Network,
        blueprints: List[Blueprint],
        stamp_x: List[int],
        stamp_height: int,
        x: int,
        spines: Tuple[str, ...],
    ) -> None:
        self.network = network
        self.blueprints = blueprints
        self.stamp_x = stamp_x
        self.spine_x = {j: x + 2 * n for n, j in enumerate(spines)}
        x += 2 * len(spines)

        self.connector: Dict[int, int] = {}
        joins = [i for i, (a, b) in enumerate(network.edges) if {self.page(a), self.page(b)} == {Side.TOP, Side.BOTTOM}]
        for i in sorted(joins, key=lambda i: (-self.x_of(self.upper(i)), i)):
            self.connector[i] = x
            x += 2
        self.width = max(x + 1, 3)

        arcs: Dict[Side, List[Tuple[int, int, int]]] = {Side.TOP: [], Side.BOTTOM: []}
        for i, (a, b) in enumerate(network.edges):
            if i in self.connector:
                cx = self.connector[i]
                arcs[Side.TOP].append((cx - self.x_of(self.upper(i)), self.x_of(self.upper(i)), i))
                arcs[Side.BOTTOM].append((cx - self.x_of(self.lower(i)), self.x_of(self.lower(i)), i))
                continue
            pages = {self.page(a), self.page(b)}
            page = Side.BOTTOM if Side.BOTTOM in pages else Side.TOP
            lo, hi = sorted((self.x_of(a), self.x_of(b)))
            arcs[page].append((hi - lo, lo, i))

        top = sorted(arcs[Side.TOP])
        bottom = sorted(arcs[Side.BOTTOM])
        self.y_stamps = 2 * len(top) + 1
        y_bottom = self.y_stamps + stamp_height + 1
        self.height = y_bottom + 2 * len(bottom) + 1
        self.top_row = {i: self.y_stamps - 2 - 2 * k for k, (_, _, i) in enumerate(top)}
        self.bottom_row = {i: y_bottom + 2 * k for k, (_, _, i) in enumerate(bottom)}

        self.segments = _Segments()
        self._trace()
        self.crossings = self.segments.crossings(self.related)

    def side(self, endpoint: str) -> Optional[Side]:
        node, location = split_endpoint(endpoint)
        if location is None:
            return None
        return self.blueprints[self.network.instance_index[node]].port(location).side

    def page(self, endpoint: str) -> Optional[Side]:
        side = self.side(endpoint)
        if side is None:
            return None
        return Side.TOP if side is Side.TOP else Side.BOTTOM

    def upper(self, edge: int) -> str:
        a, b = self.network.edges[edge]
        return a if self.page(a) is Side.TOP else b

    def lower(self, edge: int) -> str:
        a, b = self.network.edges[edge]
        return b if self.page(a) is Side.TOP else a

    def x_of(self, endpoint: str) -> int:
        node, location = split_endpoint(endpoint)
        if location is None:
            return self.spine_x[node]
        index = self.network.instance_index[node]
        return self.stamp_x[index] + self.blueprints[index].port(location).x

    def anchor(self, endpoint: str) -> Cell:
        node, location = split_endpoint(endpoint)
        if location is None:
            return (self.spine_x[node], self.y_stamps)
        index = self.network.instance_index[node]
        return (self.x_of(endpoint), self.y_stamps + self.blueprints[index].port(location).y)

    def related(self, edge: object, owner: object) -> bool:
        if isinstance(owner, tuple):
            return owner[1] == edge
        return owner in self.network.edges[edge]

    def _trace(self) -> None:
        spine_rows: Dict[str, List[int]] = {j: [self.y_stamps] for j in self.spine_x}

        def reach(endpoint: str, row: int) -> None:
            ax, ay = self.anchor(endpoint)
            if self.side(endpoint) is None:
                spine_rows[endpoint].append(row)
            elif self.side(endpoint) is Side.TOP:
                self.segments.v(ax, ay - 1, row, endpoint)
            else:
                self.segments.v(ax, ay + 1, row, endpoint)

        for i, (a, b) in enumerate(self.network.edges):
            if i in self.connector:
                up, down = self.upper(i), self.lower(i)
                top, bottom, cx = self.top_row[i], self.bottom_row[i], self.connector[i]
                reach(up, top)
                reach(down, bottom)
                self.segments.h(top, self.x_of(up), cx, i)
                self.segments.v(cx, top, bottom, ("connector", i))
                self.segments.h(bottom, cx, self.x_of(down), i)
                continue
            row = self.top_row[i] if i in self.top_row else self.bottom_row[i]
            reach(a, row)
            reach(b, row)
            self.segments.h(row, self.x_of(a), self.x_of(b), i)

        for j, rows in spine_rows.items():
            self.segments.v(self.spine_x[j], min(rows), max(rows), j)


def compile_one_player(
    network: Network,
    flavor: Flavor | str,
    settings: Optional[CompilerSettings] = None,
) -> Level:
    settings = settings or CompilerSettings()
    flavor = Flavor(flavor)
    _check_flavor(network, flavor)
    report = validate_network(network, Mode.ONE_PLAYER)
    if not report.planar:
        raise RoutingFailure("; ".join(report.diagnostics))

    blueprints = [_one_player_blueprint(flavor, i.kind, i.initial_state) for i in network.instances]
    stamp_height = max((b.height for b in blueprints), default=0)

    # Columns: stamps, then junction spines, then connector columns.
    x = 1
    stamp_x = []
    for bp in blueprints:
        stamp_x.append(x)
        x += bp.width + settings.stamp_gap
    spines = [
        j for j in network.junctions
        if network.incident[j] or j in (network.start, network.goal)
    ]

    first: Optional[_OnePlayerLayout] = None
    layout: Optional[_OnePlayerLayout] = None
    for order in islice(permutations(spines), SPINE_ORDERS):
        candidate = _OnePlayerLayout(network, blueprints, stamp_x, stamp_height, x, order)
        first = first or candidate
        if not candidate.crossings:
            layout = candidate
            break
    if layout is None:
        cx, cy = first.crossings[0]
        raise RoutingFailure(f"wires cross at ({cx}, {cy}); declare the crossing and insert a crossover first")
    logger.debug("Spine order %s routes without crossings", list(layout.spine_x))

    width, height = layout.width, layout.height
    sides_seen = [max(b.width, b.height) for b in blueprints]
    bound = SizeBound(len(network.instances) + len(network.edges), max(sides_seen, default=3), settings.layout_constant)
    _check_bound(width, height, bound)

    canvas = _Canvas(width, height)
    manifest = Manifest(Mode.ONE_PLAYER, width, height, bound=bound)
    for inst, bp, sx in zip(network.instances, blueprints, stamp_x):
        canvas.place(bp, sx, layout.y_stamps, inst.id)
        manifest.stamps.append(StampPlacement(inst.id, bp.name, sx, layout.y_stamps, bp.width, bp.height))

    for inst in network.instances:
        for loc in inst.spec.location_names:
            manifest.ports[inst.endpoint(loc)] = layout.anchor(inst.endpoint(loc))
    for j in layout.spine_x:
        manifest.ports[j] = layout.anchor(j)

    layout.segments.carve(canvas)
    manifest.plan = RoutingPlan(hallways=len(layout.segments))

    manifest.start = layout.anchor(network.start)
    manifest.goal = layout.anchor(network.goal)
    canvas.add("madeline", *manifest.start)
    canvas.add("goal", *manifest.goal)
    logger.info(
        "Compiled %d instances into a %dx%d %s level",
        len(network.instances), width, height, flavor.value,
    )
    return canvas.level(manifest)


# =============================================================================
# ZERO PLAYER
# =============================================================================

@dataclass
class _Route:
    """One wire component that carries jellyfish to an input."""
    sink_x: int
    sources: List[int]
    owner: int


def _sources(network: Network, component: Iterable[str], entries) -> List[str]:
    return [
        ep for ep in network.endpoints
        if ep in component and network.is_location(ep) and ep not in entries
    ]


def compile_zero_player(
    network: Network,
    final: FinalGadget | str = FinalGadget.AUTONOMOUS,
    settings: Optional[CompilerSettings] = None,
) -> Level:
    settings = settings or CompilerSettings()
    final = FinalGadget(final)
    for inst in network.instances:
        if inst.kind is not GadgetKind.SWITCH:
            raise FlavorMismatch(f"{inst.id} is a {inst.label}; zero-player levels only build switches")
    report = validate_network(network, Mode.ZERO_PLAYER)
    if not report.branchless:
        raise BranchingWire("; ".join(report.diagnostics))

    gap = settings.stamp_gap
    switches = [switch_blueprint(inst.initial_state) for inst in network.instances]
    goal_bp = goal_blueprint(final)
    stamp_height = max([goal_bp.height] + [b.height for b in switches])

    x = 1
    stamp_x = []
    port_x: Dict[str, int] = {}
    for inst, bp in zip(network.instances, switches):
        stamp_x.append(x)
        for label, port in bp.ports:
            port_x[inst.endpoint(label)] = x + port.x
        x += bp.width + gap
    goal_x = x
    sensor_x = goal_x + goal_bp.port("in").x
    start_x = goal_x + goal_bp.width + gap
    riser_base = start_x + 2

    entries = network.entry_locations()
    start, goal = network.start, network.goal
    routes: List[_Route] = []
    pits: List[int] = []
    start_sink_x: Optional[int] = None

    for component in network.wire_components:
        if goal in component:
            sink_x: Optional[int] = sensor_x
        else:
            inputs = [ep for ep in network.endpoints if ep in component and ep in entries]
            sink_x = port_x[inputs[0]] if inputs else None
        columns = [port_x[ep] for ep in _sources(network, component, entries)]
        if start in component:
            if start == goal or (sink_x is not None and start in entries and goal not in component):
                start_sink_x = sink_x
            else:
                columns.append(start_x)
        if not columns:
            continue
        if sink_x is None:
            pits.extend(columns)
        else:
            routes.append(_Route(sink_x, sorted(columns), len(routes)))

    k_routes = len(routes)
    y0 = 2 * k_routes + 1
    source_row = y0 + stamp_height
    pit_row = source_row + 1 + 2 * k_routes
    height = pit_row + 2
    width = riser_base + 2 * k_routes

    side = max([max(b.width, b.height) for b in switches] + [max(goal_bp.width, goal_bp.height)])
    bound = SizeBound(len(network.instances) + len(network.edges), side, settings.layout_constant)
    _check_bound(width, height, bound)

    canvas = _Canvas(width, height)
    manifest = Manifest(Mode.ZERO_PLAYER, width, height, bound=bound)
    for inst, bp, sx in zip(network.instances, switches, stamp_x):
        canvas.place(bp, sx, y0, inst.id)
        manifest.stamps.append(StampPlacement(inst.id, bp.name, sx, y0, bp.width, bp.height, chamber=True))
        for label, port in bp.ports:
            manifest.ports[inst.endpoint(label)] = (sx + port.x, y0 + port.y)
    canvas.place(goal_bp, goal_x, y0, "goal")
    manifest.stamps.append(StampPlacement("goal", goal_bp.name, goal_x, y0, goal_bp.width, goal_bp.height))

    segments = _Segments()
    springs: List[Tuple[str, int, int]] = []
    for route in routes:
        k = route.owner
        top = 1 + 2 * k
        bus = source_row + 1 + 2 * k
        riser = riser_base + 2 * k
        for column in route.sources:
            segments.v(column, source_row, bus, k)
            springs.append(("spring-right", column, bus))
        segments.h(bus, route.sources[0], riser, k)
        segments.v(riser, top, bus, k)
        springs.extend(("spring-up", riser, y) for y in range(top + 1, bus + 1))
        springs.append(("spring-left", riser, top))
        segments.h(top, route.sink_x, riser, k)
        segments.v(route.sink_x, top + 1, y0 - 1, k)
    for n, column in enumerate(pits):
        segments.v(column, source_row, pit_row, ("pit", n))

    segments.carve(canvas)
    for kind, sx, sy in springs:
        canvas.add(kind, sx, sy)

    if start == goal:
        manifest.start = (sensor_x, y0)
    elif start_sink_x is not None:
        manifest.start = (start_sink_x, y0 - 1)
        canvas.carve_v(start_sink_x, y0 - 1, y0 - 1)
    else:
        manifest.start = (start_x, source_row)
    manifest.goal = (sensor_x, y0)
    canvas.add("jellyfish", *manifest.start)
    canvas.add("goal", *manifest.goal)

    crossings = segments.crossings(lambda a, b: a == b)
    manifest.plan = RoutingPlan(
        hallways=len(segments),
        merges=sum(len(r.sources) - 1 for r in routes),
        crossovers=len(crossings),
        downward_turns=k_routes,
        crossings=crossings,
    )
    logger.info(
        "Compiled %d switches into a %dx%d zero-player level (%d routed components, %d pits)",
        len(network.instances), width, height, k_routes, len(pits),
    )
    return canvas.level(manifest)
