"""Deterministic, input-free simulation of the zero-player entities.

Kinematics are discrete: positions are tiles, velocities are tiles per tick
(positive ``vy`` is upward, screen ``y`` grows downward). Each tick applies
the phases in this fixed order:

1. springs: a jellyfish on a spring cell takes the spring's launch velocity
   and triggers the move block attached to it
2. activation: triggered idle blocks, and idle blocks with a jellyfish
   resting on top, start moving
3. move blocks advance one tile, pushing jellyfish ahead of them; a blocked
   block vanishes and reappears at home once its countdown expires
4. jellyfish: gliding sideways while ``vx`` is set, rising while ``vy`` is
   positive, otherwise falling; barriers destroy them
5. Kevin blocks charge or retrace their stack
6. goal sensing
"""
from __future__ import annotations

import logging
import weakref
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, FrozenSet, List, NamedTuple, Optional, Tuple

from gadgetforge.config import SimConstants
from gadgetforge.errors import InconsistentState
from gadgetforge.levels import MOVEBLOCK_KINDS, SPRING_KINDS, Cell, Level
from gadgetforge.solver import Cycle, Reached, Timeout, ZeroPlayerOutcome, verdict_name

logger = logging.getLogger(__name__)


class Direction(str, Enum):
    LEFT = "left"
    RIGHT = "right"
    UP = "up"
    DOWN = "down"

    @property
    def delta(self) -> Cell:
        return _DELTAS[self]

    @property
    def horizontal(self) -> bool:
        return self in (Direction.LEFT, Direction.RIGHT)

    def perpendicular(self, other: "Direction") -> bool:
        return self.horizontal != other.horizontal


_DELTAS = {
    Direction.LEFT: (-1, 0),
    Direction.RIGHT: (1, 0),
    Direction.UP: (0, -1),
    Direction.DOWN: (0, 1),
}


class BlockPhase(str, Enum):
    IDLE = "idle"
    MOVING = "moving"
    RESPAWNING = "respawning"


class KevinPhase(str, Enum):
    IDLE = "idle"
    CHARGING = "charging"
    RETURNING = "returning"


class Jellyfish(NamedTuple):
    x: int
    y: int
    vx: int = 0
    vy: int = 0
    alive: bool = True

    @property
    def cell(self) -> Cell:
        return (self.x, self.y)


class MoveBlock(NamedTuple):
    id: str
    home: Cell
    x: int
    y: int
    direction: Direction
    phase: BlockPhase = BlockPhase.IDLE
    countdown: int = 0

    @property
    def present(self) -> bool:
        return self.phase is not BlockPhase.RESPAWNING

    @property
    def cell(self) -> Cell:
        return (self.x, self.y)


class KevinBlock(NamedTuple):
    x: int
    y: int
    stack: Tuple[Tuple[Cell, Direction], ...] = ()
    phase: KevinPhase = KevinPhase.IDLE
    heading: Optional[Direction] = None  # set while charging

    @property
    def cell(self) -> Cell:
        return (self.x, self.y)


class SimState(NamedTuple):
    tick: int
    jellyfish: Tuple[Jellyfish, ...]
    move_blocks: Tuple[MoveBlock, ...]
    kevins: Tuple[KevinBlock, ...]
    madeline: Optional[Cell]
    reached_goal: bool = False

    def key(self) -> tuple:
        """Everything but the tick; equal keys mean the run repeats."""
        return tuple(self[1:])


# =============================================================================
# STATIC LEVEL DATA
# =============================================================================

@dataclass(frozen=True)
class _Statics:
    springs: Dict[Cell, Tuple[str, Optional[str]]]
    barriers: FrozenSet[Cell]


_STATICS: "weakref.WeakKeyDictionary[Level, _Statics]" = weakref.WeakKeyDictionary()


def _statics(level: Level) -> _Statics:
    cached = _STATICS.get(level)
    if cached is None:
        springs: Dict[Cell, Tuple[str, Optional[str]]] = {}
        for e in level.entities_of(*SPRING_KINDS):
            # Entity-index order decides between springs sharing a cell.
            springs.setdefault(e.cell, (e.kind, e.param("block")))
        barriers = frozenset(e.cell for e in level.entities_of("barrier"))
        cached = _STATICS[level] = _Statics(springs, barriers)
    return cached


def initial_sim_state(level: Level) -> SimState:
    jellyfish = tuple(Jellyfish(e.x, e.y) for e in level.entities_of("jellyfish"))
    blocks = []
    for i, e in enumerate(level.entities_of(*MOVEBLOCK_KINDS)):
        direction = Direction(e.kind.split("-", 1)[1])
        blocks.append(MoveBlock(e.param("id") or f"block{i}", e.cell, e.x, e.y, direction))
    kevins = tuple(KevinBlock(e.x, e.y) for e in level.entities_of("kevin"))
    state = SimState(0, jellyfish, tuple(blocks), kevins, level.madeline_start)
    _check_consistent(level, state)
    goal = level.goal
    reached = goal is not None and any(j.alive and j.cell == goal for j in jellyfish)
    return state._replace(reached_goal=reached)


def _check_consistent(level: Level, state: SimState) -> None:
    for j in state.jellyfish:
        if j.alive and level.is_solid(j.x, j.y):
            raise InconsistentState(f"jellyfish inside a wall at ({j.x}, {j.y})")
    for b in state.move_blocks:
        if b.present and level.is_solid(b.x, b.y):
            raise InconsistentState(f"move block {b.id} inside a wall at ({b.x}, {b.y})")
    for k in state.kevins:
        if level.is_solid(k.x, k.y):
            raise InconsistentState(f"Kevin block inside a wall at ({k.x}, {k.y})")


# =============================================================================
# KEVIN BLOCKS
# =============================================================================

def kevin_activate(kevin: KevinBlock, hit_direction: Direction | str) -> KevinBlock:
    """Madeline dashes into the block; it charges toward the side she hit."""
    hit = Direction(hit_direction)
    stack = kevin.stack
    if not stack or stack[-1][1].perpendicular(hit):
        stack = stack + ((kevin.cell, hit),)
    return kevin._replace(stack=stack, phase=KevinPhase.CHARGING, heading=hit)


def _toward(x: int, y: int, target: Cell) -> Cell:
    tx, ty = target
    if x != tx:
        return (x + (1 if tx > x else -1), y)
    if y != ty:
        return (x, y + (1 if ty > y else -1))
    return (x, y)


def kevin_step(
    kevin: KevinBlock,
    level: Level,
    constants: Optional[SimConstants] = None,
    blocked: Optional[Callable[[int, int], bool]] = None,
) -> KevinBlock:
    c = constants or SimConstants()
    if level.is_solid(kevin.x, kevin.y):
        raise InconsistentState(f"Kevin block inside a wall at ({kevin.x}, {kevin.y})")

    def wall(x: int, y: int) -> bool:
        return level.is_solid(x, y) or (blocked is not None and blocked(x, y))

    if kevin.phase is KevinPhase.CHARGING:
        dx, dy = kevin.heading.delta
        x, y = kevin.cell
        for _ in range(c.kevin_charge_speed):
            if wall(x + dx, y + dy):
                return kevin._replace(x=x, y=y, phase=KevinPhase.RETURNING, heading=None)
            x, y = x + dx, y + dy
        return kevin._replace(x=x, y=y)

    if kevin.phase is KevinPhase.RETURNING:
        stack = list(kevin.stack)
        x, y = kevin.cell
        while stack and stack[-1][0] == (x, y):
            stack.pop()
        for _ in range(c.kevin_return_speed):
            if not stack:
                break
            x, y = _toward(x, y, stack[-1][0])
            while stack and stack[-1][0] == (x, y):
                stack.pop()
        phase = KevinPhase.RETURNING if stack else KevinPhase.IDLE
        return kevin._replace(x=x, y=y, stack=tuple(stack), phase=phase)

    return kevin


# =============================================================================
# STEP
# =============================================================================

def _spring_velocity(kind: str, jelly: Jellyfish, c: SimConstants) -> Tuple[int, int]:
    if kind == "spring-right":
        return c.spring_side_speed, c.spring_side_lift
    if kind == "spring-left":
        return -c.spring_side_speed, c.spring_side_lift
    return jelly.vx, c.spring_up_launch


def _advance_jelly(
    jelly: Jellyfish,
    blocked: Callable[[int, int], bool],
    barriers: FrozenSet[Cell],
    c: SimConstants,
) -> Jellyfish:
    x, y, vx, vy = jelly.x, jelly.y, jelly.vx, jelly.vy

    if vx != 0:
        dx, dy, steps = (1 if vx > 0 else -1), 0, abs(vx)
    elif vy > 0:
        dx, dy, steps = 0, -1, vy
    else:
        vy = max(vy - c.gravity, -c.terminal_fall)
        dx, dy, steps = 0, 1, -vy

    for _ in range(steps):
        if blocked(x + dx, y + dy):
            if vx != 0:
                vx = vy = 0
            else:
                vy = 0
            break
        x, y = x + dx, y + dy
        if (x, y) in barriers:
            return Jellyfish(x, y, 0, 0, alive=False)
    else:
        if vx == 0 and vy > 0:
            vy = max(vy - c.gravity, 0)
    return Jellyfish(x, y, vx, vy, True)


def sim_step(level: Level, state: SimState, constants: Optional[SimConstants] = None) -> SimState:
    c = constants or SimConstants()
    statics = _statics(level)
    _check_consistent(level, state)
    jellies = list(state.jellyfish)
    blocks = list(state.move_blocks)
    kevins = list(state.kevins)

    # 1. springs
    triggered: List[str] = []
    for i, j in enumerate(jellies):
        spring = statics.springs.get(j.cell) if j.alive else None
        if spring is None:
            continue
        kind, block = spring
        vx, vy = _spring_velocity(kind, j, c)
        jellies[i] = j._replace(vx=vx, vy=vy)
        if block is not None and block not in triggered:
            triggered.append(block)

    # 2. activation
    resting_on = {(j.x, j.y + 1) for j in jellies if j.alive and j.vx == 0 and j.vy == 0}
    for i, b in enumerate(blocks):
        if b.phase is BlockPhase.IDLE and (b.id in triggered or b.cell in resting_on):
            blocks[i] = b._replace(phase=BlockPhase.MOVING)

    # 3. move blocks
    occupied: Dict[Cell, int] = {b.cell: i for i, b in enumerate(blocks) if b.present}
    kevin_cells = {k.cell for k in kevins}

    def obstacle(cell: Cell) -> bool:
        return level.is_solid(*cell) or cell in occupied or cell in kevin_cells

    for i, b in enumerate(blocks):
        if b.phase is BlockPhase.RESPAWNING:
            countdown = max(b.countdown - 1, 0)
            home_free = not obstacle(b.home) and not any(j.alive and j.cell == b.home for j in jellies)
            if countdown == 0 and home_free:
                blocks[i] = b._replace(x=b.home[0], y=b.home[1], phase=BlockPhase.IDLE, countdown=0)
                occupied[b.home] = i
            else:
                blocks[i] = b._replace(countdown=countdown)
            continue
        if b.phase is not BlockPhase.MOVING:
            continue

        dx, dy = b.direction.delta
        target = (b.x + dx, b.y + dy)
        beyond = (target[0] + dx, target[1] + dy)
        pushed = [k for k, j in enumerate(jellies) if j.alive and j.cell == target]
        occupied.pop(b.cell, None)
        if obstacle(target) or (pushed and obstacle(beyond)):
            blocks[i] = b._replace(phase=BlockPhase.RESPAWNING, countdown=c.respawn_delay)
            continue
        for k in pushed:
            jellies[k] = jellies[k]._replace(x=beyond[0], y=beyond[1], vx=0, vy=0)
        blocks[i] = b._replace(x=target[0], y=target[1])
        occupied[target] = i

    # 4. jellyfish
    def blocked(x: int, y: int) -> bool:
        return obstacle((x, y))

    for i, j in enumerate(jellies):
        if j.alive:
            jellies[i] = _advance_jelly(j, blocked, statics.barriers, c)

    # 5. Kevin blocks
    for i, k in enumerate(kevins):
        others = {o.cell for n, o in enumerate(kevins) if n != i}
        kevins[i] = kevin_step(
            k, level, c, blocked=lambda x, y: (x, y) in occupied or (x, y) in others
        )

    # 6. goal
    goal = level.goal
    reached = state.reached_goal or (
        goal is not None and any(j.alive and j.cell == goal for j in jellies)
    )
    return SimState(state.tick + 1, tuple(jellies), tuple(blocks), tuple(kevins), state.madeline, reached)


# =============================================================================
# RUN
# =============================================================================

def sim_run(level: Level, max_steps: int = 100_000, constants: Optional[SimConstants] = None) -> ZeroPlayerOutcome:
    state = initial_sim_state(level)
    trace = [state]
    seen = {state.key(): 0}

    for _ in range(max_steps + 1):
        if state.reached_goal:
            logger.debug("Goal reached at tick %d", state.tick)
            return ZeroPlayerOutcome(Reached(state.tick), trace)
        if state.tick == max_steps:
            break
        state = sim_step(level, state, constants)
        trace.append(state)
        key = state.key()
        if key in seen:
            prefix = seen[key]
            logger.debug("Simulation repeats: prefix %d, period %d", prefix, state.tick - prefix)
            return ZeroPlayerOutcome(Cycle(prefix, state.tick - prefix), trace)
        seen[key] = state.tick

    logger.warning("Simulation hit max_steps=%d", max_steps)
    return ZeroPlayerOutcome(Timeout(max_steps), trace)


def chamber_regions(level: Level) -> List[Tuple[int, int, int, int]]:
    """Switch stamp rectangles ``(x0, y0, x1, y1)``, end-exclusive."""
    if level.manifest is None:
        return []
    return [
        (s.x, s.y, s.x + s.width, s.y + s.height)
        for s in level.manifest.stamps
        if s.chamber
    ]


def jellyfish_outside_chambers(level: Level, state: SimState) -> int:
    regions = chamber_regions(level)

    def inside(cell: Cell) -> bool:
        return any(x0 <= cell[0] < x1 and y0 <= cell[1] < y1 for x0, y0, x1, y1 in regions)

    return sum(1 for j in state.jellyfish if j.alive and not inside(j.cell))


# =============================================================================
# TRACE
# =============================================================================

def _describe(state: SimState) -> Dict[str, str]:
    described = {}
    for i, j in enumerate(state.jellyfish):
        status = "alive" if j.alive else "dead"
        described[f"jellyfish {i}"] = f"at {j.x} {j.y} vel {j.vx} {j.vy} {status}"
    for b in state.move_blocks:
        extra = f" {b.countdown}" if b.phase is BlockPhase.RESPAWNING else ""
        described[f"moveblock {b.id}"] = f"at {b.x} {b.y} {b.phase.value}{extra}"
    for i, k in enumerate(state.kevins):
        described[f"kevin {i}"] = f"at {k.x} {k.y} {k.phase.value} stack {len(k.stack)}"
    if state.reached_goal:
        described["goal"] = "reached"
    return described


def format_sim_trace(outcome: ZeroPlayerOutcome) -> str:
    """One line per changed entity per tick, then the verdict line."""
    lines: List[str] = []
    previous: Dict[str, str] = {}
    for state in outcome.trace:
        current = _describe(state)
        for name, text in current.items():
            if previous.get(name) != text:
                lines.append(f"tick {state.tick} {name} {text}")
        previous = current
    numbers = " ".join(str(n) for n in outcome.verdict.numbers())
    lines.append(f"verdict {verdict_name(outcome.verdict)} {numbers}")
    return "\n".join(lines) + "\n"
