"""Tile-and-entity templates for every gadget the level compiler can place.

Stamps are re-drawn approximations: each one uses exactly the mechanics of
its construction, carries annotated critical gaps for the geometry check,
and declares the gadget it stands for. The zero-player stamps are also
exercised end to end by the entity simulator.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, FrozenSet, List, NamedTuple, Optional, Tuple

import numpy as np

from gadgetforge.errors import MissingAnnotation
from gadgetforge.gadgets import (
    CLOSED,
    OPEN,
    UP,
    GadgetKind,
    GadgetSpec,
    standard_gadget,
)
from gadgetforge.levels import Entity, MovementEnvelope, glyph_grid

logger = logging.getLogger(__name__)


class Flavor(str, Enum):
    SEEKER = "seeker"
    JELLY = "jelly"
    PUFFER = "puffer"
    KEVIN = "kevin"

    @classmethod
    def _missing_(cls, value: object):
        aliases = {
            "seeker-barrier-move": cls.SEEKER,
            "jellyfish-barrier": cls.JELLY,
            "pufferfish": cls.PUFFER,
        }
        return aliases.get(value)


class FinalGadget(str, Enum):
    AUTONOMOUS = "autonomous"
    TRAP = "trap"

    @classmethod
    def _missing_(cls, value: object):
        return cls.TRAP if value == "player-trap" else None


# Door kind built by each single-player flavor.
FLAVOR_KINDS: Dict[Flavor, GadgetKind] = {
    Flavor.SEEKER: GadgetKind.OCT_DOOR,
    Flavor.JELLY: GadgetKind.SELF_CLOSING_OPEN_OPTIONAL,
    Flavor.PUFFER: GadgetKind.SYMMETRIC_SELF_CLOSING,
    Flavor.KEVIN: GadgetKind.SELF_CLOSING_OPEN_OPTIONAL,
}

# Mechanics used by each of the five constructions.
MECHANICS: Dict[str, FrozenSet[str]] = {
    Flavor.SEEKER.value: frozenset({"spinner", "seeker", "barrier", "move block"}),
    Flavor.JELLY.value: frozenset({"spinner", "jellyfish", "barrier"}),
    Flavor.PUFFER.value: frozenset({"spinner", "pufferfish"}),
    Flavor.KEVIN.value: frozenset({"spinner", "kevin"}),
    "zero-player": frozenset({"spring", "jellyfish", "move block"}),
}

_ENTITY_MECHANIC = {
    "seeker": "seeker",
    "barrier": "barrier",
    "jellyfish": "jellyfish",
    "pufferfish": "pufferfish",
    "kevin": "kevin",
    "jumpthrough": "jumpthrough",
    "crumble": "crumble",
}


def entity_mechanic(kind: str) -> Optional[str]:
    """Mechanic an entity kind belongs to; None for markers like madeline."""
    if kind.startswith("moveblock-"):
        return "move block"
    if kind.startswith("spring-"):
        return "spring"
    return _ENTITY_MECHANIC.get(kind)


# =============================================================================
# TYPES
# =============================================================================

class Side(str, Enum):
    TOP = "top"
    BOTTOM = "bottom"
    LEFT = "left"
    RIGHT = "right"


class Port(NamedTuple):
    x: int
    y: int
    side: Side


class GapDirection(str, Enum):
    ACROSS = "across"
    UP = "up"
    DOWN = "down"


@dataclass(frozen=True)
class Gap:
    """A critical gap. ``fall_height`` is the rise for upward gaps."""
    name: str
    direction: GapDirection
    fall_height: float
    span: float = 0.0
    dashes: int = 0
    jelly: bool = False
    traversable: bool = False
    dash_reach: Optional[float] = None  # tiles one dash contributes here
    assumption: bool = False


@dataclass(frozen=True)
class Blueprint:
    name: str
    kind: Optional[GadgetKind]
    stamp: Tuple[str, ...]
    entities: Tuple[Entity, ...]
    ports: Tuple[Tuple[str, Port], ...]
    declared_spec: Optional[GadgetSpec]
    mechanics: FrozenSet[str]
    gaps: Tuple[Gap, ...] = ()
    construction: Optional[str] = None  # key into MECHANICS

    @property
    def width(self) -> int:
        return len(self.stamp[0])

    @property
    def height(self) -> int:
        return len(self.stamp)

    def tiles(self) -> np.ndarray:
        return glyph_grid(self.stamp)

    def port(self, label: str) -> Port:
        return dict(self.ports)[label]

    def used_mechanics(self) -> FrozenSet[str]:
        used = {entity_mechanic(e.kind) for e in self.entities}
        used.discard(None)
        if any("*" in row for row in self.stamp):
            used.add("spinner")
        return frozenset(used)

    def problems(self) -> List[str]:
        """Shape violations: ports off the boundary, entities outside or in walls."""
        found = []
        if any(len(row) != self.width for row in self.stamp):
            found.append("stamp is not rectangular")
        w, h = self.width, self.height
        for label, (x, y, side) in self.ports:
            on_side = {
                Side.TOP: y == 0,
                Side.BOTTOM: y == h - 1,
                Side.LEFT: x == 0,
                Side.RIGHT: x == w - 1,
            }[side]
            if not (0 <= x < w and 0 <= y < h and on_side):
                found.append(f"port {label} at ({x}, {y}) is not on the {side.value} boundary")
            elif self.stamp[y][x] == "#":
                found.append(f"port {label} sits in a wall")
        for e in self.entities:
            if not (0 <= e.x < w and 0 <= e.y < h):
                found.append(f"{e.kind} at ({e.x}, {e.y}) is outside the stamp")
            elif self.stamp[e.y][e.x] == "#":
                found.append(f"{e.kind} at ({e.x}, {e.y}) sits in a wall")
        if self.declared_spec is not None:
            missing = set(self.declared_spec.location_names) - {label for label, _ in self.ports}
            if missing:
                found.append(f"locations without ports: {sorted(missing)}")
        return found


# =============================================================================
# GEOMETRY
# =============================================================================

@dataclass(frozen=True)
class GapFinding:
    name: str
    traversable: bool
    required: float
    reach: float
    margin: Optional[float]
    assumed: bool = False

    @property
    def ok(self) -> bool:
        return self.assumed or (self.margin is not None and self.margin > 0)


@dataclass
class GeometryReport:
    blueprint: str
    findings: List[GapFinding] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(f.ok for f in self.findings)

    def to_dict(self) -> dict:
        return {
            "blueprint": self.blueprint,
            "passed": self.passed,
            "gaps": [
                {
                    "name": f.name,
                    "traversable": f.traversable,
                    "required": f.required,
                    "reach": f.reach,
                    "margin": f.margin,
                    "assumed": f.assumed,
                }
                for f in self.findings
            ],
        }


def _reach(gap: Gap, envelope: MovementEnvelope) -> Tuple[float, float]:
    """(distance the gap demands, distance Madeline can cover)."""
    if gap.direction is GapDirection.DOWN:
        return gap.fall_height, math.inf
    if gap.direction is GapDirection.UP:
        per_dash = envelope.dash_diag_vertical if gap.dash_reach is None else gap.dash_reach
        return gap.fall_height, gap.dashes * per_dash
    ratio = envelope.jelly_glide_ratio if gap.jelly else envelope.glide_ratio
    per_dash = envelope.dash_horizontal if gap.dash_reach is None else gap.dash_reach
    return gap.span, gap.fall_height * ratio + gap.dashes * per_dash


def check_blueprint_geometry(blueprint: Blueprint, envelope: Optional[MovementEnvelope] = None) -> GeometryReport:
    envelope = envelope or MovementEnvelope()
    if not blueprint.gaps:
        raise MissingAnnotation(f"{blueprint.name} has no annotated gaps")

    report = GeometryReport(blueprint.name)
    for gap in blueprint.gaps:
        required, reach = _reach(gap, envelope)
        if gap.assumption:
            report.findings.append(GapFinding(gap.name, gap.traversable, required, reach, None, assumed=True))
            continue
        if math.isinf(reach):
            margin = gap.fall_height if gap.traversable else -gap.fall_height
        elif gap.traversable:
            margin = reach - required
        else:
            margin = required - reach
        report.findings.append(GapFinding(gap.name, gap.traversable, required, reach, round(margin, 6)))

    if not report.passed:
        logger.warning("Geometry check failed for %s", blueprint.name)
    return report


# =============================================================================
# REFLECTION
# =============================================================================

_MIRRORED_KINDS = {
    "moveblock-left": "moveblock-right",
    "moveblock-right": "moveblock-left",
    "spring-left": "spring-right",
    "spring-right": "spring-left",
}
_MIRRORED_SIDES = {Side.LEFT: Side.RIGHT, Side.RIGHT: Side.LEFT}
_MIRROR_SUFFIX = " (mirrored)"


def reflect_blueprint(blueprint: Blueprint) -> Blueprint:
    """Mirror about the vertical axis.

    The symmetric self-closing door comes out with its other tunnel open,
    so its declared initial state flips.
    """
    w = blueprint.width
    spec = blueprint.declared_spec
    if spec is not None and blueprint.kind is GadgetKind.SYMMETRIC_SELF_CLOSING:
        spec = spec.with_initial_state(OPEN if spec.initial_state == CLOSED else CLOSED)

    name = blueprint.name
    name = name[: -len(_MIRROR_SUFFIX)] if name.endswith(_MIRROR_SUFFIX) else name + _MIRROR_SUFFIX

    return replace(
        blueprint,
        name=name,
        stamp=tuple(row[::-1] for row in blueprint.stamp),
        entities=tuple(
            e._replace(kind=_MIRRORED_KINDS.get(e.kind, e.kind), x=w - 1 - e.x)
            for e in blueprint.entities
        ),
        ports=tuple(
            (label, Port(w - 1 - p.x, p.y, _MIRRORED_SIDES.get(p.side, p.side)))
            for label, p in blueprint.ports
        ),
        declared_spec=spec,
    )


# =============================================================================
# SINGLE-PLAYER DOORS
# =============================================================================

def _e(kind: str, x: int, y: int, **params: str) -> Entity:
    return Entity(kind, x, y, tuple(params.items()))


def _bottom(*pairs: Tuple[str, int], y: int) -> Tuple[Tuple[str, Port], ...]:
    return tuple((label, Port(x, y, Side.BOTTOM)) for label, x in pairs)


def seeker_door(state: str = CLOSED) -> Blueprint:
    stamp = (
        "#############",
        "#*.........*#",
        "#.#.......#.#",
        "#.#.......#.#",
        "#.#.......#.#",
        "#.#.......#.#",
        "#.####.####.#",
        "#.#.#.#.#.#.#",
        "#.#.#.#.#.#.#",
    )
    ring = [(x, y) for y in (3, 4, 5) for x in (5, 6, 7) if (x, y) != (6, 4)]
    entities = (
        _e("seeker", 6, 4),
        *(_e("barrier", x, y) for x, y in ring),
        _e("moveblock-right", 3, 3, id="open_a"),
        _e("moveblock-left", 9, 3, id="open_b"),
        _e("moveblock-right", 3, 5, id="close_a"),
        _e("moveblock-left", 9, 5, id="close_b"),
    )
    ports = _bottom(
        ("open_in", 1), ("open_out", 3), ("close_in", 5),
        ("close_out", 7), ("traverse_in", 9), ("traverse_out", 11),
        y=8,
    )
    gaps = (
        Gap("traverse tunnel while closed", GapDirection.ACROSS, fall_height=2, span=7),
        Gap("traverse tunnel dash", GapDirection.ACROSS, fall_height=0, span=8, dashes=1, traversable=True),
    )
    return Blueprint(
        name="seeker open-close-traverse door",
        kind=GadgetKind.OCT_DOOR,
        stamp=stamp,
        entities=entities,
        ports=ports,
        declared_spec=standard_gadget(GadgetKind.OCT_DOOR, state),
        mechanics=MECHANICS[Flavor.SEEKER.value],
        gaps=gaps,
        construction=Flavor.SEEKER.value,
    )


_SELF_CLOSING_ART = (
    "###########",
    "#*.......*#",
    "#.#######.#",
    "#.#.....#.#",
    "#.#.###.#.#",
    "#...#.#...#",
    "###.#.#.###",
    "###.#.#.###",
    "###.#.#.###",
)

_SELF_CLOSING_PORTS = _bottom(("open", 3), ("selfclose_in", 5), ("selfclose_out", 7), y=8)


def jelly_door(state: str = CLOSED) -> Blueprint:
    gaps = (
        # One dash only gets Madeline around one of the two corners.
        Gap("corner gap without jellyfish", GapDirection.ACROSS, fall_height=2, span=5, dashes=1, dash_reach=2.0),
        Gap(
            "corner gap with jellyfish", GapDirection.ACROSS, fall_height=2, span=5,
            dashes=1, dash_reach=2.0, jelly=True, traversable=True,
        ),
    )
    return Blueprint(
        name="jellyfish self-closing door",
        kind=GadgetKind.SELF_CLOSING_OPEN_OPTIONAL,
        stamp=_SELF_CLOSING_ART,
        entities=(_e("jellyfish", 4, 3), _e("barrier", 5, 5)),
        ports=_SELF_CLOSING_PORTS,
        declared_spec=standard_gadget(GadgetKind.SELF_CLOSING_OPEN_OPTIONAL, state),
        mechanics=MECHANICS[Flavor.JELLY.value],
        gaps=gaps,
        construction=Flavor.JELLY.value,
    )


def kevin_door(state: str = CLOSED) -> Blueprint:
    stamp = ("###########", "#**.....**#") + _SELF_CLOSING_ART[2:]
    gaps = (
        Gap("closed passage climb", GapDirection.UP, fall_height=4, dashes=1),
        Gap("wound passage", GapDirection.ACROSS, fall_height=0, span=5, dashes=1, traversable=True),
    )
    return Blueprint(
        name="kevin self-closing door",
        kind=GadgetKind.SELF_CLOSING_OPEN_OPTIONAL,
        stamp=stamp,
        entities=(_e("kevin", 5, 3),),
        ports=_SELF_CLOSING_PORTS,
        declared_spec=standard_gadget(GadgetKind.SELF_CLOSING_OPEN_OPTIONAL, state),
        mechanics=MECHANICS[Flavor.KEVIN.value],
        gaps=gaps,
        construction=Flavor.KEVIN.value,
    )


def puffer_door(state: str = CLOSED) -> Blueprint:
    """Drawn with the self-open tunnel open; the other state is its mirror image."""
    stamp = (
        "###########",
        "#....*....#",
        "#.###.###.#",
        "#.#.....#.#",
        "#.#.....#.#",
        "#.###.###.#",
        "#.#.....#.#",
        "#.#.#.#.#.#",
        "#.#.#.#.#.#",
    )
    gaps = (
        Gap("blocked tunnel", GapDirection.ACROSS, fall_height=3, span=6, dashes=1, dash_reach=2.0),
        Gap("right wall climb", GapDirection.UP, fall_height=4, traversable=True, assumption=True),
    )
    base = Blueprint(
        name="pufferfish symmetric self-closing door",
        kind=GadgetKind.SYMMETRIC_SELF_CLOSING,
        stamp=stamp,
        entities=(_e("pufferfish", 4, 3),),
        ports=_bottom(("selfopen_in", 1), ("selfopen_out", 3), ("selfclose_in", 7), ("selfclose_out", 9), y=8),
        declared_spec=standard_gadget(GadgetKind.SYMMETRIC_SELF_CLOSING, CLOSED),
        mechanics=MECHANICS[Flavor.PUFFER.value],
        gaps=gaps,
        construction=Flavor.PUFFER.value,
    )
    return base if state == CLOSED else reflect_blueprint(base)


def door_blueprint(flavor: Flavor | str, state: str) -> Blueprint:
    builders = {
        Flavor.SEEKER: seeker_door,
        Flavor.JELLY: jelly_door,
        Flavor.PUFFER: puffer_door,
        Flavor.KEVIN: kevin_door,
    }
    return builders[Flavor(flavor)](state)


# =============================================================================
# CORRIDOR PIECES
# =============================================================================

def diode_blueprint() -> Blueprint:
    """Long-fall diode: a plain shaft with no jumpthrough or crumble ledges."""
    stamp = (
        "##.##",
        "#...#",
        "#...#",
        "#...#",
        "##.##",
    )
    gaps = (
        Gap("climb back up", GapDirection.UP, fall_height=3, dashes=1),
        Gap("fall through", GapDirection.DOWN, fall_height=3, traversable=True),
    )
    return Blueprint(
        name="long-fall diode",
        kind=GadgetKind.DIODE,
        stamp=stamp,
        entities=(),
        ports=(("in", Port(2, 0, Side.TOP)), ("out", Port(2, 4, Side.BOTTOM))),
        declared_spec=standard_gadget(GadgetKind.DIODE, "only"),
        mechanics=frozenset(),
        gaps=gaps,
    )


def crossover_blueprint() -> Blueprint:
    """Primitive directed crossover; its door-level construction is not modeled."""
    stamp = (
        "#.###.#",
        "#.....#",
        "##...##",
        "#.....#",
        "#.###.#",
    )
    return Blueprint(
        name="crossover",
        kind=GadgetKind.CROSSOVER,
        stamp=stamp,
        entities=(),
        ports=(
            ("a_in", Port(1, 0, Side.TOP)),
            ("b_in", Port(5, 0, Side.TOP)),
            ("a_out", Port(5, 4, Side.BOTTOM)),
            ("b_out", Port(1, 4, Side.BOTTOM)),
        ),
        declared_spec=standard_gadget(GadgetKind.CROSSOVER, "only"),
        mechanics=frozenset(),
        gaps=(Gap("climb against a tunnel", GapDirection.UP, fall_height=3, dashes=1),),
    )


# =============================================================================
# ZERO-PLAYER
# =============================================================================

SWITCH_STAMP = (
    "#.###########.#",
    "#.###########.#",
    "#.#...........#",
    "#.#.###########",
    "#..........####",
    "###.######.####",
    "#.....##.....##",
    "##.#.####.#.###",
    "##.#.####.#.###",
    "##.#.####.#.###",
)

# Resting cells of the chamber jellyfish for each state.
SWITCH_CHAMBERS = {"up": (3, 6), "down": (10, 6)}


def switch_blueprint(state: str = UP) -> Blueprint:
    """Set-up/set-down switch.

    A jellyfish entering ``set_up`` bounces left along the top corridor,
    triggering the move block that sweeps the down chamber and then the one
    that sweeps the up chamber; the swept jellyfish drops out through the
    output below it and the newcomer settles in the up chamber. ``set_down``
    is the same along the lower corridor in the other direction.
    """
    entities = (
        _e("moveblock-right", 1, 6, id="up_u"),
        _e("moveblock-left", 5, 6, id="down_u"),
        _e("moveblock-right", 8, 6, id="up_d"),
        _e("moveblock-left", 12, 6, id="down_d"),
        _e("spring-left", 13, 2, block="up_d"),
        _e("spring-left", 7, 2, block="up_u"),
        _e("spring-right", 1, 4, block="down_u"),
        _e("spring-right", 6, 4, block="down_d"),
        _e("jellyfish", *SWITCH_CHAMBERS[state]),
    )
    ports = (
        ("set_up", Port(13, 0, Side.TOP)),
        ("set_down", Port(1, 0, Side.TOP)),
        *_bottom(("out_down_up", 2), ("out_up_up", 4), ("out_down_down", 9), ("out_up_down", 11), y=9),
    )
    gaps = (
        Gap("input shaft climb", GapDirection.UP, fall_height=4),
        Gap("output drop", GapDirection.DOWN, fall_height=3, traversable=True),
    )
    return Blueprint(
        name="set-up/set-down switch",
        kind=GadgetKind.SWITCH,
        stamp=SWITCH_STAMP,
        entities=entities,
        ports=ports,
        declared_spec=standard_gadget(GadgetKind.SWITCH, state),
        mechanics=MECHANICS["zero-player"],
        gaps=gaps,
        construction="zero-player",
    )


def goal_blueprint(final: FinalGadget | str) -> Blueprint:
    """Final gadget; the entering jellyfish is sensed at the ``in`` port."""
    final = FinalGadget(final)
    if final is FinalGadget.AUTONOMOUS:
        stamp = (
            "###.###",
            "###.###",
            "###.###",
            "#.....#",
            "#.#####",
            "#.#...#",
            "#.#...#",
            "#.#####",
            "#.....#",
            "#######",
        )
        entities = (
            _e("spring-left", 3, 3, block="car"),
            _e("madeline", 3, 5),
            _e("moveblock-right", 3, 6, id="car"),
        )
        name = "autonomous goal"
    else:
        stamp = (
            "###.###",
            "###.###",
            "###.###",
            "###.###",
            "###.###",
            "##...##",
            "##.####",
            "##.####",
            "##.####",
            "#######",
        )
        entities = (
            _e("spring-right", 3, 5, block="lid"),
            _e("moveblock-up", 2, 7, id="lid"),
            _e("madeline", 2, 8),
        )
        name = "player trap goal"
    return Blueprint(
        name=name,
        kind=None,
        stamp=stamp,
        entities=entities,
        ports=(("in", Port(3, 0, Side.TOP)),),
        declared_spec=None,
        mechanics=frozenset({"spring", "move block"}),
        gaps=(Gap("sensor shaft climb", GapDirection.UP, fall_height=3),),
    )


def shipped_blueprints() -> List[Blueprint]:
    result = [door_blueprint(flavor, CLOSED) for flavor in Flavor]
    result.append(puffer_door(OPEN))
    result += [diode_blueprint(), crossover_blueprint()]
    result += [switch_blueprint("up"), switch_blueprint("down")]
    result += [goal_blueprint(final) for final in FinalGadget]
    return result
