from __future__ import annotations

import logging
import re
from dataclasses import asdict, dataclass, replace
from enum import Enum
from functools import cached_property
from typing import Dict, FrozenSet, Iterable, List, Mapping, NamedTuple, Optional, Tuple

import networkx as nx

from gadgetforge.errors import (
    AmbiguousTransition,
    DslSyntaxError,
    InvalidState,
    MalformedGadget,
    UnknownKind,
    UnknownLocation,
)

logger = logging.getLogger(__name__)


class GadgetKind(str, Enum):
    OCT_DOOR = "OCTDoor"
    OCT_DOOR_OPEN_OPTIONAL = "OCTDoorOpenOptional"
    SELF_CLOSING = "SelfClosing"
    SELF_CLOSING_OPEN_OPTIONAL = "SelfClosingOpenOptional"
    SYMMETRIC_SELF_CLOSING = "SymmetricSelfClosing"
    DIODE = "Diode"
    HALLWAY = "Hallway"
    BRANCHING_HALLWAY = "BranchingHallway"
    CROSSOVER = "Crossover"
    SWITCH = "SetUpSetDownSwitch"


class LocationRole(str, Enum):
    ENTRANCE = "entrance"
    EXIT = "exit"
    PORT = "port"  # both entrance and exit

    @property
    def can_enter(self) -> bool:
        return self is not LocationRole.EXIT

    @property
    def can_exit(self) -> bool:
        return self is not LocationRole.ENTRANCE


class Transition(NamedTuple):
    before: str
    entry: str
    exit: str
    after: str


class _BlockedType(Enum):
    BLOCKED = "Blocked"

    def __repr__(self) -> str:
        return "Blocked"


Blocked = _BlockedType.BLOCKED

OPEN = "open"
CLOSED = "closed"
UP = "up"
DOWN = "down"
ONLY = "only"

DOOR_STATES = (OPEN, CLOSED)
SWITCH_STATES = (UP, DOWN)

DOOR_KINDS = frozenset({
    GadgetKind.OCT_DOOR,
    GadgetKind.OCT_DOOR_OPEN_OPTIONAL,
    GadgetKind.SELF_CLOSING,
    GadgetKind.SELF_CLOSING_OPEN_OPTIONAL,
    GadgetKind.SYMMETRIC_SELF_CLOSING,
})


@dataclass(frozen=True)
class GadgetSpec:
    """A finite-state gadget: states, tagged locations and a transition relation."""
    name: str
    states: Tuple[str, ...]
    locations: Tuple[Tuple[str, LocationRole], ...]
    transitions: FrozenSet[Transition]
    initial_state: str
    input_output: bool = False

    def __post_init__(self) -> None:
        if len(set(self.states)) != len(self.states):
            raise MalformedGadget(f"{self.name}: duplicate state")
        names = [loc for loc, _ in self.locations]
        if len(set(names)) != len(names):
            raise MalformedGadget(f"{self.name}: duplicate location")
        if self.initial_state not in self.states:
            raise InvalidState(f"{self.name}: initial state {self.initial_state!r} is not a state")

        roles = dict(self.locations)
        for t in self.transitions:
            if t.before not in self.states or t.after not in self.states:
                raise MalformedGadget(f"{self.name}: transition {t} references an unknown state")
            if t.entry not in roles or t.exit not in roles:
                raise MalformedGadget(f"{self.name}: transition {t} references an unknown location")
            if not roles[t.entry].can_enter:
                raise MalformedGadget(f"{self.name}: {t.entry} is not an entrance")
            if not roles[t.exit].can_exit:
                raise MalformedGadget(f"{self.name}: {t.exit} is not an exit")

        if self.input_output:
            entries = {t.entry for t in self.transitions}
            exits = {t.exit for t in self.transitions}
            if entries & exits:
                raise MalformedGadget(
                    f"{self.name}: input/output gadget uses {sorted(entries & exits)} both ways"
                )

    @cached_property
    def roles(self) -> Dict[str, LocationRole]:
        return dict(self.locations)

    @property
    def location_names(self) -> Tuple[str, ...]:
        return tuple(loc for loc, _ in self.locations)

    @cached_property
    def _by_entry(self) -> Dict[Tuple[str, str], FrozenSet[Tuple[str, str]]]:
        index: Dict[Tuple[str, str], set] = {}
        for t in self.transitions:
            index.setdefault((t.before, t.entry), set()).add((t.exit, t.after))
        return {key: frozenset(value) for key, value in index.items()}

    def with_initial_state(self, state: str) -> "GadgetSpec":
        if state not in self.states:
            raise InvalidState(f"{self.name}: {state!r} is not a state")
        return replace(self, initial_state=state)

    def relabel(self, mapping: Mapping[str, str], name: Optional[str] = None) -> "GadgetSpec":
        """Rename locations; unmapped locations keep their names."""
        def m(loc: str) -> str:
            return mapping.get(loc, loc)

        return GadgetSpec(
            name=name or self.name,
            states=self.states,
            locations=tuple((m(loc), role) for loc, role in self.locations),
            transitions=frozenset(
                Transition(t.before, m(t.entry), m(t.exit), t.after) for t in self.transitions
            ),
            initial_state=self.initial_state,
            input_output=self.input_output,
        )


@dataclass(frozen=True)
class GadgetProperties:
    is_input_output: bool
    is_deterministic: bool
    is_output_disjoint: bool
    is_unbounded: bool
    nontrivial_input_count: int
    state_count: int

    def to_dict(self) -> dict:
        return asdict(self)


# =============================================================================
# STANDARD LIBRARY
# =============================================================================

DEFAULT_BRANCHING_ARITY = 3
_BRANCHING_RE = re.compile(r"^BranchingHallway\((\d+)\)$")


def parse_kind(label: str) -> Tuple[GadgetKind, int]:
    """Parse a kind label such as ``SelfClosing`` or ``BranchingHallway(3)``."""
    match = _BRANCHING_RE.match(label)
    if match:
        return GadgetKind.BRANCHING_HALLWAY, int(match.group(1))
    try:
        return GadgetKind(label), 0
    except ValueError:
        raise UnknownKind(f"unknown gadget kind {label!r}") from None


def kind_label(kind: GadgetKind, arity: int = 0) -> str:
    if kind is GadgetKind.BRANCHING_HALLWAY:
        return f"BranchingHallway({arity})"
    return kind.value


def valid_states(kind: GadgetKind) -> Tuple[str, ...]:
    if kind in DOOR_KINDS:
        return DOOR_STATES
    if kind is GadgetKind.SWITCH:
        return SWITCH_STATES
    return (ONLY,)


def switch_output(entered: str, previous: str) -> str:
    return f"out_{entered}_{previous}"


def _door(kind: GadgetKind) -> Tuple[List[Tuple[str, LocationRole]], List[Transition]]:
    E, X, P = LocationRole.ENTRANCE, LocationRole.EXIT, LocationRole.PORT
    locations: List[Tuple[str, LocationRole]] = []
    transitions: List[Transition] = []

    if kind in (GadgetKind.OCT_DOOR, GadgetKind.SELF_CLOSING):
        locations += [("open_in", E), ("open_out", X)]
        transitions += [Transition(s, "open_in", "open_out", OPEN) for s in DOOR_STATES]
    elif kind in (GadgetKind.OCT_DOOR_OPEN_OPTIONAL, GadgetKind.SELF_CLOSING_OPEN_OPTIONAL):
        locations += [("open", P)]
        transitions += [Transition(s, "open", "open", OPEN) for s in DOOR_STATES]
    else:
        locations += [("selfopen_in", E), ("selfopen_out", X)]
        transitions += [Transition(CLOSED, "selfopen_in", "selfopen_out", OPEN)]

    if kind in (GadgetKind.OCT_DOOR, GadgetKind.OCT_DOOR_OPEN_OPTIONAL):
        locations += [("close_in", E), ("close_out", X), ("traverse_in", E), ("traverse_out", X)]
        transitions += [Transition(s, "close_in", "close_out", CLOSED) for s in DOOR_STATES]
        transitions += [Transition(OPEN, "traverse_in", "traverse_out", OPEN)]
    else:
        locations += [("selfclose_in", E), ("selfclose_out", X)]
        transitions += [Transition(OPEN, "selfclose_in", "selfclose_out", CLOSED)]

    return locations, transitions


def standard_gadget(
    kind: GadgetKind | str, initial_state: str, arity: int = DEFAULT_BRANCHING_ARITY
) -> GadgetSpec:
    """Return the canonical spec of a library gadget.

    ``arity`` only matters for BranchingHallway.
    """
    if isinstance(kind, str) and not isinstance(kind, GadgetKind):
        kind, parsed_arity = parse_kind(kind)
        arity = parsed_arity or arity

    if initial_state not in valid_states(kind):
        raise InvalidState(f"{kind.value} has no state {initial_state!r}")

    E, X, P = LocationRole.ENTRANCE, LocationRole.EXIT, LocationRole.PORT
    input_output = False

    if kind in DOOR_KINDS:
        locations, transitions = _door(kind)
        states = DOOR_STATES
    elif kind is GadgetKind.SWITCH:
        states = SWITCH_STATES
        locations = [("set_up", E), ("set_down", E)]
        locations += [(switch_output(i, s), X) for i in SWITCH_STATES for s in SWITCH_STATES]
        transitions = [
            Transition(s, f"set_{i}", switch_output(i, s), i)
            for i in SWITCH_STATES
            for s in SWITCH_STATES
        ]
        input_output = True
    elif kind is GadgetKind.DIODE:
        states = (ONLY,)
        locations = [("in", E), ("out", X)]
        transitions = [Transition(ONLY, "in", "out", ONLY)]
        input_output = True
    elif kind is GadgetKind.HALLWAY:
        states = (ONLY,)
        locations = [("a", P), ("b", P)]
        transitions = [Transition(ONLY, "a", "b", ONLY), Transition(ONLY, "b", "a", ONLY)]
    elif kind is GadgetKind.BRANCHING_HALLWAY:
        if arity < 2:
            raise MalformedGadget("BranchingHallway needs at least two branches")
        states = (ONLY,)
        names = [f"b{i}" for i in range(1, arity + 1)]
        locations = [(n, P) for n in names]
        transitions = [Transition(ONLY, a, b, ONLY) for a in names for b in names if a != b]
    elif kind is GadgetKind.CROSSOVER:
        states = (ONLY,)
        # Cyclic order around the box: the two tunnels cross.
        locations = [("a_in", E), ("b_in", E), ("a_out", X), ("b_out", X)]
        transitions = [
            Transition(ONLY, "a_in", "a_out", ONLY),
            Transition(ONLY, "b_in", "b_out", ONLY),
        ]
        input_output = True
    else:
        raise UnknownKind(f"unknown gadget kind {kind!r}")

    return GadgetSpec(
        name=kind_label(kind, arity),
        states=tuple(states),
        locations=tuple(locations),
        transitions=frozenset(transitions),
        initial_state=initial_state,
        input_output=input_output,
    )


# =============================================================================
# TRAVERSAL
# =============================================================================

def _check_state(spec: GadgetSpec, state: str) -> None:
    if state not in spec.states:
        raise InvalidState(f"{spec.name}: unknown state {state!r}")


def _check_location(spec: GadgetSpec, location: str) -> None:
    if location not in spec.roles:
        raise UnknownLocation(f"{spec.name}: unknown location {location!r}")


def available_traversals(spec: GadgetSpec, state: str, entry: str) -> FrozenSet[Tuple[str, str]]:
    """All (exit, state_after) pairs enabled from ``entry`` in ``state``."""
    _check_state(spec, state)
    _check_location(spec, entry)
    return spec._by_entry.get((state, entry), frozenset())


def step_traversal(spec: GadgetSpec, state: str, entry: str, exit: str):
    """Apply one traversal; returns the new state or ``Blocked``."""
    _check_location(spec, exit)
    results = {after for (x, after) in available_traversals(spec, state, entry) if x == exit}
    if not results:
        return Blocked
    if len(results) > 1:
        raise AmbiguousTransition(
            f"{spec.name}: ({state}, {entry}, {exit}) leads to {sorted(results)}"
        )
    return results.pop()


# =============================================================================
# CLASSIFICATION
# =============================================================================

def _is_unbounded(spec: GadgetSpec) -> bool:
    if not any(t.before != t.after for t in spec.transitions):
        return False
    graph = nx.DiGraph()
    graph.add_nodes_from(spec.states)
    graph.add_edges_from((t.before, t.after) for t in spec.transitions)
    return nx.is_strongly_connected(graph)


def _is_nontrivial(spec: GadgetSpec, entry: str) -> bool:
    outgoing = [t for t in spec.transitions if t.entry == entry]
    if any(t.before != t.after for t in outgoing):
        return True
    exits_by_state = {
        state: frozenset(t.exit for t in outgoing if t.before == state) for state in spec.states
    }
    return len(set(exits_by_state.values())) > 1


def classify(spec: GadgetSpec) -> GadgetProperties:
    entries = {t.entry for t in spec.transitions}
    exits = {t.exit for t in spec.transitions}

    sources_by_exit: Dict[str, set] = {}
    for t in spec.transitions:
        sources_by_exit.setdefault(t.exit, set()).add(t.entry)

    entrances = [loc for loc, role in spec.locations if role.can_enter]
    return GadgetProperties(
        is_input_output=not (entries & exits),
        is_deterministic=all(len(v) <= 1 for v in spec._by_entry.values()),
        is_output_disjoint=all(len(v) <= 1 for v in sources_by_exit.values()),
        is_unbounded=_is_unbounded(spec),
        nontrivial_input_count=sum(1 for e in entrances if _is_nontrivial(spec, e)),
        state_count=len(spec.states),
    )


def door_table(spec: GadgetSpec) -> Dict[str, Dict[str, List[Tuple[str, str]]]]:
    """Enabled traversals per state and entry, as sorted lists."""
    table: Dict[str, Dict[str, List[Tuple[str, str]]]] = {}
    for state in spec.states:
        row: Dict[str, List[Tuple[str, str]]] = {}
        for loc, role in spec.locations:
            if role.can_enter:
                row[loc] = sorted(available_traversals(spec, state, loc))
        table[state] = row
    return table


# =============================================================================
# SPEC TEXT FORMAT
# =============================================================================

def format_gadget_spec(spec: GadgetSpec) -> str:
    lines = [f"gadget {spec.name}"]
    if spec.input_output:
        lines.append("input_output")
    lines.append("state " + " ".join(spec.states))
    for loc, role in spec.locations:
        lines.append(f"location {loc} {role.value}")
    for t in sorted(spec.transitions):
        lines.append(f"transition {t.before} {t.entry} {t.exit} {t.after}")
    lines.append(f"initial {spec.initial_state}")
    return "\n".join(lines) + "\n"


def parse_gadget_spec(text: str) -> GadgetSpec:
    """Parse the ``*.spec`` format written by :func:`format_gadget_spec`."""
    name: Optional[str] = None
    states: List[str] = []
    locations: List[Tuple[str, LocationRole]] = []
    transitions: List[Transition] = []
    initial: Optional[str] = None
    input_output = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        if head == "gadget" and len(rest) == 1:
            name = rest[0]
        elif head == "input_output" and not rest:
            input_output = True
        elif head == "state" and rest:
            states.extend(rest)
        elif head == "location" and len(rest) == 2:
            try:
                locations.append((rest[0], LocationRole(rest[1])))
            except ValueError:
                raise DslSyntaxError(f"bad location role {rest[1]!r}", lineno) from None
        elif head == "transition" and len(rest) == 4:
            transitions.append(Transition(*rest))
        elif head == "initial" and len(rest) == 1:
            initial = rest[0]
        else:
            raise DslSyntaxError(f"cannot parse {line!r}", lineno)

    if name is None or initial is None:
        raise DslSyntaxError("spec needs a 'gadget' and an 'initial' statement")
    return GadgetSpec(
        name=name,
        states=tuple(states),
        locations=tuple(locations),
        transitions=frozenset(transitions),
        initial_state=initial,
        input_output=input_output,
    )


def all_standard_specs() -> Iterable[GadgetSpec]:
    for kind in GadgetKind:
        for state in valid_states(kind):
            yield standard_gadget(kind, state)
