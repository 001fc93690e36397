from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from typing import Dict, FrozenSet, List, Optional, Sequence, Set, Tuple

from gadgetforge.errors import LabelMismatch, LeakDetected, ResourceLimit
from gadgetforge.gadgets import (
    CLOSED,
    DOOR_STATES,
    GadgetSpec,
    LocationRole,
    Transition,
)
from gadgetforge.network import Network, split_endpoint
from gadgetforge.solver import Configuration, successors

logger = logging.getLogger(__name__)

Label = Tuple[str, str]


@dataclass(frozen=True)
class ExternalInterface:
    """Network endpoints exposed as the locations of a derived gadget."""
    externals: Tuple[Tuple[str, str], ...]  # (endpoint, label)

    @classmethod
    def identity(cls, network: Network, instance_id: str) -> "ExternalInterface":
        inst = network.instance(instance_id)
        return cls(tuple((inst.endpoint(loc), loc) for loc in inst.spec.location_names))

    @classmethod
    def from_mapping(cls, mapping: Dict[str, str]) -> "ExternalInterface":
        """Build from ``{label: endpoint}``."""
        return cls(tuple((endpoint, label) for label, endpoint in mapping.items()))

    @property
    def labels(self) -> Tuple[str, ...]:
        return tuple(label for _, label in self.externals)

    def by_endpoint(self) -> Dict[str, str]:
        return dict(self.externals)


@dataclass(frozen=True)
class EquivalenceVerdict:
    equivalent: bool
    counterexample: Tuple[Label, ...] = ()


# =============================================================================
# DERIVED GADGETS
# =============================================================================

def _state_name(states: Tuple[str, ...]) -> str:
    return "|".join(states)


def _exits_from(
    network: Network,
    entry: str,
    states: Tuple[str, ...],
    external: Dict[str, str],
    budget: Optional[int],
) -> Set[Tuple[str, Tuple[str, ...]]]:
    """Every (exit label, states) where the agent can step off the fragment.

    Reaching an external endpoint records an exit; the agent may also walk on
    through it, so passing back over the entry does not end the search.
    """
    start = Configuration(entry, states)
    seen = {start}
    queue = deque([start])
    results: Set[Tuple[str, Tuple[str, ...]]] = set()

    while queue:
        config = queue.popleft()
        moved = False
        for _, nxt in successors(network, config):
            moved = True
            if nxt.agent_at in external:
                results.add((external[nxt.agent_at], nxt.states))
            if nxt not in seen:
                seen.add(nxt)
                if budget is not None and len(seen) > budget:
                    raise ResourceLimit(budget)
                queue.append(nxt)
        if not moved and config.agent_at not in external:
            raise LeakDetected(f"agent entering at {entry} can come to rest at {config.agent_at}")
    return results


def _derived_role(network: Network, endpoint: str, entered: bool, exited: bool) -> LocationRole:
    if entered and exited:
        return LocationRole.PORT
    if entered:
        return LocationRole.ENTRANCE
    if exited:
        return LocationRole.EXIT
    node, location = split_endpoint(endpoint)
    if location is not None:
        return network.instance(node).spec.roles[location]
    return LocationRole.PORT


def derive_gadget(
    network: Network,
    interface: ExternalInterface,
    name: str = "Derived",
    budget: Optional[int] = None,
) -> GadgetSpec:
    """Collapse a network fragment into the gadget it simulates.

    States are the reachable joint state vectors. A transition
    ``(S, entry, exit, S')`` exists when an agent placed at ``entry`` with
    the network in ``S`` can walk to ``exit`` and stop there, leaving the
    network in ``S'``. The walk may pass over other external locations.
    """
    external = interface.by_endpoint()
    initial = network.initial_states
    order = [initial]
    seen = {initial}
    queue = deque([initial])
    transitions: Set[Transition] = set()

    while queue:
        states = queue.popleft()
        for endpoint, label in interface.externals:
            for exit_label, after in _exits_from(network, endpoint, states, external, budget):
                transitions.add(Transition(_state_name(states), label, exit_label, _state_name(after)))
                if after not in seen:
                    seen.add(after)
                    order.append(after)
                    queue.append(after)
                    if budget is not None and len(seen) > budget:
                        raise ResourceLimit(budget)

    entered = {t.entry for t in transitions}
    exited = {t.exit for t in transitions}
    locations = tuple(
        (label, _derived_role(network, endpoint, label in entered, label in exited))
        for endpoint, label in interface.externals
    )
    logger.debug("Derived %s: %d states, %d transitions", name, len(order), len(transitions))
    return GadgetSpec(
        name=name,
        states=tuple(_state_name(s) for s in order),
        locations=locations,
        transitions=frozenset(transitions),
        initial_state=_state_name(initial),
    )


# =============================================================================
# BISIMULATION
# =============================================================================
# Entering and leaving at the same location without changing the behavioural
# class of the state is a stationary visit; it is invisible to the outside
# and ignored on both sides.
# =============================================================================

Node = Tuple[int, str]


def _reachable(spec: GadgetSpec) -> List[str]:
    seen = [spec.initial_state]
    queue = deque(seen)
    while queue:
        state = queue.popleft()
        for t in sorted(spec.transitions):
            if t.before == state and t.after not in seen:
                seen.append(t.after)
                queue.append(t.after)
    return seen


def _moves(specs: Sequence[GadgetSpec]) -> Dict[Node, List[Tuple[str, str, Node]]]:
    moves: Dict[Node, List[Tuple[str, str, Node]]] = {}
    for i, spec in enumerate(specs):
        for state in _reachable(spec):
            moves[(i, state)] = []
        for t in sorted(spec.transitions):
            if (i, t.before) in moves:
                moves[(i, t.before)].append((t.entry, t.exit, (i, t.after)))
    return moves


def _signature(node: Node, moves, block: Dict[Node, int]) -> FrozenSet[Tuple[str, str, int]]:
    return frozenset(
        (entry, exit, block[target])
        for entry, exit, target in moves[node]
        if not (entry == exit and block[target] == block[node])
    )


def bisimulation_partition(specs: Sequence[GadgetSpec]) -> Dict[Node, int]:
    """Coarsest stable partition of the reachable states of ``specs``."""
    moves = _moves(specs)
    nodes = sorted(moves)
    block = {node: 0 for node in nodes}
    count = 1
    while True:
        keys: Dict[Tuple[int, FrozenSet], int] = {}
        refined = {}
        for node in nodes:
            key = (block[node], _signature(node, moves, block))
            refined[node] = keys.setdefault(key, len(keys))
        if len(keys) == count:
            return refined
        block, count = refined, len(keys)


def _labels(node: Node, moves, block: Dict[Node, int]) -> Dict[Label, List[Node]]:
    result: Dict[Label, List[Node]] = {}
    for entry, exit, target in moves[node]:
        if entry == exit and block[target] == block[node]:
            continue
        result.setdefault((entry, exit), []).append(target)
    return result


def _counterexample(moves, block: Dict[Node, int], start: Tuple[Node, Node]) -> Tuple[Label, ...]:
    """Shortest label sequence leading to a difference in enabled traversals."""
    seen = {start}
    queue = deque([(start, ())])
    fallback: Optional[Tuple[Label, ...]] = None
    while queue:
        (p, q), path = queue.popleft()
        lp, lq = _labels(p, moves, block), _labels(q, moves, block)
        differing = sorted(set(lp) ^ set(lq))
        if differing:
            return path + (differing[0],)
        for label in sorted(lp):
            targets_p = {block[t] for t in lp[label]}
            targets_q = {block[t] for t in lq[label]}
            if fallback is None and targets_p != targets_q:
                fallback = path + (label,)
            for p2 in lp[label]:
                for q2 in lq[label]:
                    pair = (p2, q2)
                    if block[p2] != block[q2] and pair not in seen:
                        seen.add(pair)
                        queue.append((pair, path + (label,)))
    return fallback or ()


def _check_labels(candidate: GadgetSpec, reference: GadgetSpec) -> None:
    if set(candidate.location_names) != set(reference.location_names):
        raise LabelMismatch(
            f"{candidate.name} has {sorted(candidate.location_names)}, "
            f"{reference.name} has {sorted(reference.location_names)}"
        )


def check_equivalence(candidate: GadgetSpec, reference: GadgetSpec) -> EquivalenceVerdict:
    _check_labels(candidate, reference)
    block = bisimulation_partition([candidate, reference])
    start = ((0, candidate.initial_state), (1, reference.initial_state))
    if block[start[0]] == block[start[1]]:
        return EquivalenceVerdict(True)
    counterexample = _counterexample(_moves([candidate, reference]), block, start)
    logger.info("%s differs from %s after %d traversals", candidate.name, reference.name, len(counterexample))
    return EquivalenceVerdict(False, counterexample)


def check_trace_equivalence(candidate: GadgetSpec, reference: GadgetSpec) -> EquivalenceVerdict:
    """Compare the sets of traversal sequences each gadget admits."""
    _check_labels(candidate, reference)
    specs = [candidate, reference]
    moves = _moves(specs)
    block = bisimulation_partition(specs)

    def step(nodes: FrozenSet[Node]) -> Dict[Label, FrozenSet[Node]]:
        result: Dict[Label, Set[Node]] = {}
        for node in nodes:
            for label, targets in _labels(node, moves, block).items():
                result.setdefault(label, set()).update(targets)
        return {label: frozenset(ts) for label, ts in result.items()}

    start = (frozenset({(0, candidate.initial_state)}), frozenset({(1, reference.initial_state)}))
    seen = {start}
    queue = deque([(start, ())])
    while queue:
        (p, q), path = queue.popleft()
        sp, sq = step(p), step(q)
        differing = sorted(set(sp) ^ set(sq))
        if differing:
            return EquivalenceVerdict(False, path + (differing[0],))
        for label in sorted(sp):
            pair = (sp[label], sq[label])
            if pair not in seen:
                seen.add(pair)
                queue.append((pair, path + (label,)))
    return EquivalenceVerdict(True)


def quotient_by_bisimilarity(spec: GadgetSpec) -> GadgetSpec:
    """Merge bisimilar reachable states and drop stationary visits."""
    block = bisimulation_partition([spec])
    representative: Dict[int, str] = {}
    for state in spec.states:
        if (0, state) in block:
            representative.setdefault(block[(0, state)], state)

    def rep(state: str) -> str:
        return representative[block[(0, state)]]

    transitions = set()
    for t in spec.transitions:
        if (0, t.before) not in block:
            continue
        before, after = rep(t.before), rep(t.after)
        if t.entry == t.exit and before == after:
            continue
        transitions.add(Transition(before, t.entry, t.exit, after))

    return GadgetSpec(
        name=spec.name,
        states=tuple(s for s in spec.states if s in representative.values()),
        locations=spec.locations,
        transitions=frozenset(transitions),
        initial_state=rep(spec.initial_state),
    )


def dual_open_port_reference() -> GadgetSpec:
    """Open-optional self-closing door with two independent open ports."""
    P, E, X = LocationRole.PORT, LocationRole.ENTRANCE, LocationRole.EXIT
    transitions = [Transition(s, port, port, "open") for s in DOOR_STATES for port in ("open1", "open2")]
    transitions.append(Transition("open", "selfclose_in", "selfclose_out", CLOSED))
    return GadgetSpec(
        name="DualOpenPortDoor",
        states=DOOR_STATES,
        locations=(("open1", P), ("open2", P), ("selfclose_in", E), ("selfclose_out", X)),
        transitions=frozenset(transitions),
        initial_state=CLOSED,
    )
