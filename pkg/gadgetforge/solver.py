from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, FrozenSet, Iterator, List, NamedTuple, Optional, Tuple, Union

from gadgetforge.errors import NondeterminismDetected, ResourceLimit
from gadgetforge.gadgets import available_traversals
from gadgetforge.network import Network, split_endpoint

logger = logging.getLogger(__name__)


class Configuration(NamedTuple):
    agent_at: str
    states: Tuple[str, ...]


class WireMove(NamedTuple):
    edge: int


class TraverseMove(NamedTuple):
    instance: str
    entry: str
    exit: str


Move = Union[WireMove, TraverseMove]


@dataclass(frozen=True)
class Witness:
    steps: Tuple[Move, ...]

    def __len__(self) -> int:
        return len(self.steps)


@dataclass(frozen=True)
class Unreachable:
    explored: int


class RejectReason(str, Enum):
    BLOCKED = "Blocked"
    NOT_ADJACENT = "NotAdjacent"
    NOT_AT_GOAL = "NotAtGoal"


@dataclass(frozen=True)
class Accept:
    pass


@dataclass(frozen=True)
class Reject:
    step: int
    reason: RejectReason


# =============================================================================
# VERDICTS
# =============================================================================

@dataclass(frozen=True)
class Reached:
    steps: int

    def numbers(self) -> Tuple[int, ...]:
        return (self.steps,)


@dataclass(frozen=True)
class Cycle:
    prefix: int
    period: int

    def numbers(self) -> Tuple[int, ...]:
        return (self.prefix, self.period)


@dataclass(frozen=True)
class Stuck:
    steps: int

    def numbers(self) -> Tuple[int, ...]:
        return (self.steps,)


@dataclass(frozen=True)
class Timeout:
    steps: int

    def numbers(self) -> Tuple[int, ...]:
        return (self.steps,)


Verdict = Union[Reached, Cycle, Stuck, Timeout]


@dataclass
class ZeroPlayerOutcome:
    """Shared by the abstract solver and the entity simulator.

    ``trace`` holds configurations or simulator states, one per step.
    """
    verdict: Verdict
    trace: list = field(default_factory=list)
    moves: List[Move] = field(default_factory=list)


def verdict_name(verdict: object) -> str:
    return type(verdict).__name__


# =============================================================================
# MOVES
# =============================================================================

def initial_configuration(network: Network) -> Configuration:
    return Configuration(network.start, network.initial_states)


def successors(network: Network, config: Configuration) -> Iterator[Tuple[Move, Configuration]]:
    """Enabled moves in canonical order: wires by index, then traversals."""
    here = config.agent_at
    for i in network.incident[here]:
        yield WireMove(i), Configuration(network.edges[i].other(here), config.states)

    node, location = split_endpoint(here)
    if location is None:
        return
    index = network.instance_index[node]
    spec = network.instances[index].spec
    for exit, after in sorted(available_traversals(spec, config.states[index], location)):
        states = config.states[:index] + (after,) + config.states[index + 1:]
        yield TraverseMove(node, location, exit), Configuration(f"{node}.{exit}", states)


def apply_move(network: Network, config: Configuration, move: Move) -> Optional[Configuration]:
    """Result of one move, or None when it is not enabled."""
    for candidate, result in successors(network, config):
        if candidate == move:
            return result
    return None


# =============================================================================
# ONE-PLAYER
# =============================================================================

def solve_one_player(network: Network, budget: Optional[int] = None) -> Union[Witness, Unreachable]:
    """Breadth-first search over configurations; returns a shortest witness."""
    start = initial_configuration(network)
    parent: Dict[Configuration, Optional[Tuple[Configuration, Move]]] = {start: None}
    queue = deque([start])
    found: Optional[Configuration] = start if start.agent_at == network.goal else None

    while queue and found is None:
        config = queue.popleft()
        for move, nxt in successors(network, config):
            if nxt in parent:
                continue
            parent[nxt] = (config, move)
            if budget is not None and len(parent) > budget:
                logger.warning("Search stopped after %d configurations", len(parent))
                raise ResourceLimit(budget)
            if nxt.agent_at == network.goal:
                found = nxt
                break
            queue.append(nxt)

    if found is None:
        logger.debug("Goal unreachable; explored %d configurations", len(parent))
        return Unreachable(explored=len(parent))

    steps: List[Move] = []
    node = found
    while parent[node] is not None:
        prev, move = parent[node]
        steps.append(move)
        node = prev
    steps.reverse()
    logger.debug("Witness of %d steps after %d configurations", len(steps), len(parent))
    return Witness(tuple(steps))


def enumerate_configurations(
    network: Network, budget: Optional[int] = None
) -> Dict[Configuration, List[Tuple[Move, Configuration]]]:
    """The reachable configuration graph as an adjacency map."""
    start = initial_configuration(network)
    graph: Dict[Configuration, List[Tuple[Move, Configuration]]] = {}
    queue = deque([start])
    seen = {start}
    while queue:
        config = queue.popleft()
        graph[config] = list(successors(network, config))
        for _, nxt in graph[config]:
            if nxt not in seen:
                seen.add(nxt)
                if budget is not None and len(seen) > budget:
                    raise ResourceLimit(budget)
                queue.append(nxt)
    return graph


def verify_witness(network: Network, witness: Witness) -> Union[Accept, Reject]:
    config = initial_configuration(network)
    for index, move in enumerate(witness.steps):
        if isinstance(move, WireMove):
            if move.edge >= len(network.edges) or move.edge not in network.incident[config.agent_at]:
                return Reject(index, RejectReason.NOT_ADJACENT)
        elif config.agent_at != f"{move.instance}.{move.entry}":
            return Reject(index, RejectReason.NOT_ADJACENT)
        nxt = apply_move(network, config, move)
        if nxt is None:
            return Reject(index, RejectReason.BLOCKED)
        config = nxt
    if config.agent_at != network.goal:
        return Reject(max(len(witness.steps) - 1, 0), RejectReason.NOT_AT_GOAL)
    return Accept()


# =============================================================================
# ZERO-PLAYER
# =============================================================================

class _ZeroPlayerPlan:
    """Per-component sink and next-hop tables for deterministic agent motion."""

    def __init__(self, network: Network) -> None:
        self.network = network
        entries = network.entry_locations()
        self.sink: Dict[FrozenSet[str], Optional[str]] = {}
        self.next_hop: Dict[str, int] = {}

        for component in network.wire_components:
            if network.goal in component:
                sink: Optional[str] = network.goal
            else:
                inputs = sorted(ep for ep in component if ep in entries)
                if len(inputs) > 1:
                    raise NondeterminismDetected(
                        f"wire component reaches several inputs: {', '.join(inputs)}"
                    )
                sink = inputs[0] if inputs else None
            self.sink[component] = sink
            if sink is not None:
                self._route_towards(sink)

    def _route_towards(self, sink: str) -> None:
        # BFS outward from the sink; the first edge found is the lowest index.
        queue = deque([sink])
        seen = {sink}
        while queue:
            here = queue.popleft()
            for i in self.network.incident[here]:
                there = self.network.edges[i].other(here)
                if there not in seen:
                    seen.add(there)
                    self.next_hop[there] = i
                    queue.append(there)

    def move(self, config: Configuration) -> Optional[Tuple[Move, Configuration]]:
        network = self.network
        here = config.agent_at
        sink = self.sink[network.component_of(here)]
        if sink is None:
            return None
        if here != sink:
            i = self.next_hop[here]
            return WireMove(i), Configuration(network.edges[i].other(here), config.states)

        node, location = split_endpoint(here)
        index = network.instance_index[node]
        spec = network.instances[index].spec
        options = sorted(available_traversals(spec, config.states[index], location))
        if not options:
            return None
        if len(options) > 1:
            raise NondeterminismDetected(f"{here} has {len(options)} enabled traversals")
        exit, after = options[0]
        states = config.states[:index] + (after,) + config.states[index + 1:]
        return TraverseMove(node, location, exit), Configuration(f"{node}.{exit}", states)


def simulate_zero_player(network: Network, max_steps: int = 100_000) -> ZeroPlayerOutcome:
    """Advance the unique enabled move until goal, repetition or a dead end.

    The agent walks each wire component toward its sink: the goal when the
    component contains it, otherwise the component's single input location.
    """
    plan = _ZeroPlayerPlan(network)
    config = initial_configuration(network)
    trace = [config]
    moves: List[Move] = []
    visited = {config: 0}

    for step in range(max_steps + 1):
        if config.agent_at == network.goal:
            return ZeroPlayerOutcome(Reached(step), trace, moves)
        if step == max_steps:
            break
        result = plan.move(config)
        if result is None:
            return ZeroPlayerOutcome(Stuck(step), trace, moves)
        move, config = result
        moves.append(move)
        trace.append(config)
        if config in visited:
            prefix = visited[config]
            logger.debug("Zero-player cycle: prefix %d, period %d", prefix, step + 1 - prefix)
            return ZeroPlayerOutcome(Cycle(prefix, step + 1 - prefix), trace, moves)
        visited[config] = step + 1

    logger.warning("Zero-player run hit max_steps=%d", max_steps)
    return ZeroPlayerOutcome(Timeout(max_steps), trace, moves)
