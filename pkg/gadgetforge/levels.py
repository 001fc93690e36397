from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import IntEnum
from typing import TYPE_CHECKING, Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from gadgetforge.errors import LevelFormatError

if TYPE_CHECKING:
    from gadgetforge.compiler import Manifest

logger = logging.getLogger(__name__)

Cell = Tuple[int, int]  # (x, y), origin top-left, y grows downward


# =============================================================================
# MOVEMENT ENVELOPE
# =============================================================================

@dataclass(frozen=True)
class MovementEnvelope:
    """Kinematic limits used to certify that gaps can or cannot be crossed."""
    glide_ratio: float = 0.563
    jelly_glide_ratio: float = 4.5
    dash_horizontal: float = 9.6
    dash_diag_horizontal: float = 8.0
    dash_diag_vertical: float = 2.1

    def __post_init__(self) -> None:
        values = (
            self.glide_ratio,
            self.jelly_glide_ratio,
            self.dash_horizontal,
            self.dash_diag_horizontal,
            self.dash_diag_vertical,
        )
        if min(values) <= 0:
            raise ValueError("movement envelope values must be positive")
        if self.jelly_glide_ratio <= self.glide_ratio:
            raise ValueError("jellyfish must improve the glide ratio")


# =============================================================================
# TILES AND ENTITIES
# =============================================================================

class Tile(IntEnum):
    EMPTY = 0
    SOLID = 1
    SPINNER = 2


GLYPHS: Dict[Tile, str] = {Tile.EMPTY: ".", Tile.SOLID: "#", Tile.SPINNER: "*"}
_FROM_GLYPH = {glyph: tile for tile, glyph in GLYPHS.items()}

MOVEBLOCK_KINDS = ("moveblock-left", "moveblock-right", "moveblock-up", "moveblock-down")
SPRING_KINDS = ("spring-up", "spring-left", "spring-right")

ENTITY_KINDS = frozenset({
    "jumpthrough",
    "crumble",
    *SPRING_KINDS,
    "seeker",
    "jellyfish",
    "pufferfish",
    "barrier",
    *MOVEBLOCK_KINDS,
    "kevin",
    "madeline",
    "goal",
})


class Entity(NamedTuple):
    kind: str
    x: int
    y: int
    params: Tuple[Tuple[str, str], ...] = ()

    @property
    def cell(self) -> Cell:
        return (self.x, self.y)

    def param(self, name: str) -> Optional[str]:
        for key, value in self.params:
            if key == name:
                return value
        return None

    def moved(self, dx: int, dy: int) -> "Entity":
        return self._replace(x=self.x + dx, y=self.y + dy)


def glyph_grid(rows: Sequence[str]) -> np.ndarray:
    """Tile array of shape (height, width) from glyph rows."""
    try:
        return np.array([[_FROM_GLYPH[c] for c in row] for row in rows], dtype=np.uint8)
    except KeyError as e:
        raise LevelFormatError(f"unknown tile glyph {e.args[0]!r}") from None


def grid_rows(tiles: np.ndarray) -> List[str]:
    return ["".join(GLYPHS[Tile(int(v))] for v in row) for row in tiles]


@dataclass(eq=False)
class Level:
    width: int
    height: int
    tiles: np.ndarray
    entities: List[Entity] = field(default_factory=list)
    manifest: Optional["Manifest"] = None

    def __post_init__(self) -> None:
        if self.tiles.shape != (self.height, self.width):
            raise LevelFormatError(
                f"tile grid is {self.tiles.shape[1]}x{self.tiles.shape[0]}, "
                f"header says {self.width}x{self.height}"
            )

    @classmethod
    def filled(cls, width: int, height: int, tile: Tile = Tile.SOLID) -> "Level":
        return cls(width, height, np.full((height, width), tile, dtype=np.uint8))

    def in_bounds(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def is_solid(self, x: int, y: int) -> bool:
        # Outside the grid counts as wall.
        return not self.in_bounds(x, y) or self.tiles[y, x] == Tile.SOLID

    def entities_of(self, *kinds: str) -> List[Entity]:
        return [e for e in self.entities if e.kind in kinds]

    def _single(self, kind: str) -> Optional[Cell]:
        found = self.entities_of(kind)
        return found[0].cell if found else None

    @property
    def madeline_start(self) -> Optional[Cell]:
        return self._single("madeline")

    @property
    def goal(self) -> Optional[Cell]:
        return self._single("goal")

    @property
    def size(self) -> int:
        """Side of the smallest square containing the level."""
        return max(self.width, self.height)


# =============================================================================
# TEXT FORMAT
# =============================================================================

def _format_entity(entity: Entity) -> str:
    parts = ["entity", entity.kind, str(entity.x), str(entity.y)]
    parts.extend(f"{k}={v}" for k, v in entity.params)
    return " ".join(parts)


def format_level(level: Level) -> str:
    lines = [f"level {level.width} {level.height}"]
    lines.extend(grid_rows(level.tiles))
    lines.extend(_format_entity(e) for e in level.entities)
    return "\n".join(lines) + "\n"


def _parse_int(token: str, what: str, lineno: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise LevelFormatError(f"line {lineno}: {what} must be an integer, got {token!r}") from None


def _parse_entity(parts: List[str], lineno: int, width: int, height: int) -> Entity:
    if len(parts) < 4:
        raise LevelFormatError(f"line {lineno}: entity needs a kind and two coordinates")
    kind = parts[1]
    if kind not in ENTITY_KINDS:
        raise LevelFormatError(f"line {lineno}: unknown entity kind {kind!r}")
    x = _parse_int(parts[2], "x", lineno)
    y = _parse_int(parts[3], "y", lineno)
    if not (0 <= x < width and 0 <= y < height):
        raise LevelFormatError(f"line {lineno}: entity at ({x}, {y}) is outside the level")
    params = []
    for token in parts[4:]:
        key, sep, value = token.partition("=")
        if not sep or not key:
            raise LevelFormatError(f"line {lineno}: expected key=value, got {token!r}")
        params.append((key, value))
    return Entity(kind, x, y, tuple(params))


def parse_level(text: str) -> Level:
    lines = [line.rstrip() for line in text.splitlines()]
    numbered = [(i, line) for i, line in enumerate(lines, start=1) if line]
    if not numbered:
        raise LevelFormatError("empty level file")

    lineno, header = numbered[0]
    parts = header.split()
    if len(parts) != 3 or parts[0] != "level":
        raise LevelFormatError(f"line {lineno}: expected 'level <width> <height>'")
    width = _parse_int(parts[1], "width", lineno)
    height = _parse_int(parts[2], "height", lineno)
    if width <= 0 or height <= 0:
        raise LevelFormatError(f"line {lineno}: level dimensions must be positive")

    body = numbered[1:]
    if len(body) < height:
        raise LevelFormatError(f"expected {height} tile rows, found {len(body)}")
    rows = []
    for lineno, row in body[:height]:
        if len(row) != width:
            raise LevelFormatError(f"line {lineno}: row has {len(row)} tiles, expected {width}")
        rows.append(row)
    tiles = glyph_grid(rows)

    entities = []
    for lineno, line in body[height:]:
        parts = line.split()
        if parts[0] != "entity":
            raise LevelFormatError(f"line {lineno}: expected an entity line")
        entities.append(_parse_entity(parts, lineno, width, height))

    logger.debug("Parsed %dx%d level with %d entities", width, height, len(entities))
    return Level(width, height, tiles, entities)


def count_kinds(entities: Iterable[Entity]) -> Dict[str, int]:
    counts: Dict[str, int] = {}
    for entity in entities:
        counts[entity.kind] = counts.get(entity.kind, 0) + 1
    return counts
