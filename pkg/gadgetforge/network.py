from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Dict, FrozenSet, List, NamedTuple, Optional, Sequence, Tuple

import networkx as nx

from gadgetforge.errors import (
    DslSyntaxError,
    DuplicateIdentifier,
    InvalidState,
    UndeclaredReference,
    UnknownKind,
)
from gadgetforge.gadgets import (
    DEFAULT_BRANCHING_ARITY,
    GadgetKind,
    GadgetSpec,
    classify,
    kind_label,
    parse_kind,
    standard_gadget,
    valid_states,
)

logger = logging.getLogger(__name__)

_IDENT = r"[A-Za-z_][A-Za-z0-9_\-]*"
_IDENT_RE = re.compile(rf"^{_IDENT}$")
_ENDPOINT_RE = re.compile(rf"^({_IDENT})(?:\.({_IDENT}))?$")


class Mode(str, Enum):
    ONE_PLAYER = "one-player"
    ZERO_PLAYER = "zero-player"


class Edge(NamedTuple):
    a: str
    b: str

    def other(self, endpoint: str) -> str:
        return self.b if endpoint == self.a else self.a


def split_endpoint(endpoint: str) -> Tuple[str, Optional[str]]:
    node, _, location = endpoint.partition(".")
    return node, (location or None)


def edge_id(index: int) -> str:
    return f"e{index}"


@dataclass(frozen=True)
class GadgetInstance:
    id: str
    kind: GadgetKind
    spec: GadgetSpec
    initial_state: str

    @property
    def label(self) -> str:
        return self.spec.name

    def endpoint(self, location: str) -> str:
        return f"{self.id}.{location}"


@dataclass(frozen=True)
class Network:
    """Gadget instances, junctions and undirected wires with a rotation system."""
    instances: Tuple[GadgetInstance, ...]
    junctions: Tuple[str, ...]
    edges: Tuple[Edge, ...]
    start: str
    goal: str
    # Only the rotations given explicitly; the rest default to declaration order.
    explicit_rotation: Tuple[Tuple[str, Tuple[int, ...]], ...] = ()

    @cached_property
    def instance_index(self) -> Dict[str, int]:
        return {inst.id: i for i, inst in enumerate(self.instances)}

    def instance(self, instance_id: str) -> GadgetInstance:
        return self.instances[self.instance_index[instance_id]]

    @cached_property
    def endpoints(self) -> Tuple[str, ...]:
        """Every location of every instance, then every junction."""
        result: List[str] = []
        for inst in self.instances:
            result.extend(inst.endpoint(loc) for loc in inst.spec.location_names)
        result.extend(self.junctions)
        return tuple(result)

    @cached_property
    def incident(self) -> Dict[str, Tuple[int, ...]]:
        """Edge indices incident to each endpoint, in declaration order."""
        table: Dict[str, List[int]] = {ep: [] for ep in self.endpoints}
        for i, (a, b) in enumerate(self.edges):
            table[a].append(i)
            table[b].append(i)
        return {ep: tuple(ixs) for ep, ixs in table.items()}

    @cached_property
    def initial_states(self) -> Tuple[str, ...]:
        return tuple(inst.initial_state for inst in self.instances)

    def is_location(self, endpoint: str) -> bool:
        return split_endpoint(endpoint)[1] is not None

    def entry_locations(self) -> FrozenSet[str]:
        """Endpoints usable as the entry of some transition."""
        result = set()
        for inst in self.instances:
            for t in inst.spec.transitions:
                result.add(inst.endpoint(t.entry))
        return frozenset(result)

    def wire_graph(self) -> nx.Graph:
        graph = nx.MultiGraph()
        graph.add_nodes_from(self.endpoints)
        graph.add_edges_from((a, b, i) for i, (a, b) in enumerate(self.edges))
        return graph

    @cached_property
    def wire_components(self) -> Tuple[FrozenSet[str], ...]:
        """Connected components of the wire graph, ordered by first endpoint."""
        order = {ep: i for i, ep in enumerate(self.endpoints)}
        components = [frozenset(c) for c in nx.connected_components(self.wire_graph())]
        return tuple(sorted(components, key=lambda c: min(order[ep] for ep in c)))

    def component_of(self, endpoint: str) -> FrozenSet[str]:
        for component in self.wire_components:
            if endpoint in component:
                return component
        raise UndeclaredReference(endpoint)

    @property
    def rotation(self) -> Dict[str, Tuple[int, ...]]:
        return dict(self.explicit_rotation)


# =============================================================================
# BUILDER
# =============================================================================

class NetworkBuilder:
    """Incremental construction with the same checks the parser applies."""

    def __init__(self) -> None:
        self._instances: List[GadgetInstance] = []
        self._junctions: List[str] = []
        self._ids: set[str] = set()
        self._locations: Dict[str, GadgetInstance] = {}
        self._edges: List[Edge] = []
        self._degree: Dict[str, int] = {}
        self._rotation: List[Tuple[str, Tuple[int, ...]]] = []
        self._start: Optional[str] = None
        self._goal: Optional[str] = None

    def _claim(self, ident: str, line: Optional[int]) -> None:
        if not _IDENT_RE.match(ident):
            raise DslSyntaxError(f"bad identifier {ident!r}", line)
        if ident in self._ids:
            raise DuplicateIdentifier(f"duplicate identifier {ident!r}", line)
        self._ids.add(ident)

    def add_gadget(
        self,
        ident: str,
        kind: GadgetKind | str,
        init: str,
        arity: int = DEFAULT_BRANCHING_ARITY,
        line: Optional[int] = None,
    ) -> GadgetInstance:
        self._claim(ident, line)
        if isinstance(kind, GadgetKind):
            resolved, parsed_arity = kind, arity
        else:
            resolved, parsed_arity = parse_kind(kind)
            parsed_arity = parsed_arity or arity
        if init not in valid_states(resolved):
            raise InvalidState(
                f"line {line}: {resolved.value} has no state {init!r}" if line else
                f"{resolved.value} has no state {init!r}"
            )
        spec = standard_gadget(resolved, init, arity=parsed_arity)
        inst = GadgetInstance(ident, resolved, spec, init)
        self._instances.append(inst)
        return inst

    def add_junction(self, ident: str, line: Optional[int] = None) -> str:
        self._claim(ident, line)
        self._junctions.append(ident)
        return ident

    def resolve(self, endpoint: str, line: Optional[int] = None) -> str:
        match = _ENDPOINT_RE.match(endpoint)
        if not match:
            raise DslSyntaxError(f"bad endpoint {endpoint!r}", line)
        node, location = match.group(1), match.group(2)
        inst = next((i for i in self._instances if i.id == node), None)
        if inst is not None:
            if location is None or location not in inst.spec.roles:
                raise UndeclaredReference(endpoint, line)
            return endpoint
        if node in self._junctions and location is None:
            return endpoint
        raise UndeclaredReference(node if location is None or node not in self._ids else endpoint, line)

    def add_edge(self, a: str, b: str, line: Optional[int] = None) -> int:
        a, b = self.resolve(a, line), self.resolve(b, line)
        if a == b:
            raise DslSyntaxError(f"edge joins {a!r} to itself", line)
        for ep in (a, b):
            if "." in ep and self._degree.get(ep, 0) >= 1:
                raise DslSyntaxError(f"location {ep!r} already has a wire", line)
        for ep in (a, b):
            self._degree[ep] = self._degree.get(ep, 0) + 1
        self._edges.append(Edge(a, b))
        return len(self._edges) - 1

    def set_rotation(self, node: str, order: Sequence[int], line: Optional[int] = None) -> None:
        if node not in self._ids:
            self.resolve(node, line)
        self._rotation.append((node, tuple(order)))

    def set_start(self, endpoint: str, line: Optional[int] = None) -> None:
        if self._start is not None:
            raise DslSyntaxError("more than one start", line)
        self._start = self.resolve(endpoint, line)

    def set_goal(self, endpoint: str, line: Optional[int] = None) -> None:
        if self._goal is not None:
            raise DslSyntaxError("more than one goal", line)
        self._goal = self.resolve(endpoint, line)

    def build(self) -> Network:
        if self._start is None:
            raise DslSyntaxError("network has no start")
        if self._goal is None:
            raise DslSyntaxError("network has no goal")
        network = Network(
            instances=tuple(self._instances),
            junctions=tuple(self._junctions),
            edges=tuple(self._edges),
            start=self._start,
            goal=self._goal,
            explicit_rotation=tuple(self._rotation),
        )
        for node, order in self._rotation:
            expected = sorted(_darts_at(network, node))
            if sorted(order) != expected:
                raise DslSyntaxError(
                    f"rotation at {node!r} lists {sorted(order)}, incident edges are {expected}"
                )
        return network


# =============================================================================
# DSL
# =============================================================================

_STATEMENT_ORDER = ("gadget", "junction", "edge", "rotation", "start", "goal")


def _normalize_statement(line: str, lineno: int) -> Tuple[str, str]:
    head, *rest = line.split()
    if head == "gadget":
        if not rest:
            raise DslSyntaxError("gadget needs an identifier", lineno)
        ident, options = rest[0], {}
        for item in rest[1:]:
            key, sep, value = item.partition("=")
            if not sep or key not in ("kind", "init") or key in options:
                raise DslSyntaxError(f"bad gadget option {item!r}", lineno)
            options[key] = value
        if set(options) != {"kind", "init"}:
            raise DslSyntaxError("gadget needs kind= and init=", lineno)
        kind = options["kind"]
        if kind == GadgetKind.BRANCHING_HALLWAY.value:
            kind = kind_label(GadgetKind.BRANCHING_HALLWAY, DEFAULT_BRANCHING_ARITY)
        return head, f"gadget {ident} kind={kind} init={options['init']}"
    if head == "rotation":
        body = " ".join(rest)
        node, sep, indices = body.partition("=")
        if not sep or not node.strip():
            raise DslSyntaxError("rotation needs '<node> = <indices>'", lineno)
        return head, f"rotation {node.strip()} = {' '.join(indices.split())}"
    if head in ("junction", "start", "goal") and len(rest) == 1:
        return head, f"{head} {rest[0]}"
    if head == "edge" and len(rest) == 2:
        return head, f"edge {rest[0]} {rest[1]}"
    raise DslSyntaxError(f"cannot parse {line!r}", lineno)


def _statements(text: str) -> List[Tuple[int, str, str]]:
    result = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            head, normalized = _normalize_statement(line, lineno)
            result.append((lineno, head, normalized))
    return result


def normalize_text(text: str) -> str:
    """Canonical form: no comments, single spaces, statements grouped by kind."""
    statements = _statements(text)
    ordered = sorted(statements, key=lambda s: _STATEMENT_ORDER.index(s[1]))
    return "".join(f"{normalized}\n" for _, _, normalized in ordered)


def parse_network(text: str) -> Network:
    builder = NetworkBuilder()
    statements = _statements(text)
    # Declarations first so that edges may precede the gadgets they name.
    ordered = sorted(statements, key=lambda s: _STATEMENT_ORDER.index(s[1]))
    for lineno, head, normalized in ordered:
        parts = normalized.split()
        if head == "gadget":
            kind = parts[2].split("=", 1)[1]
            init = parts[3].split("=", 1)[1]
            try:
                builder.add_gadget(parts[1], kind, init, line=lineno)
            except UnknownKind as e:
                raise UnknownKind(f"line {lineno}: {e}") from None
        elif head == "junction":
            builder.add_junction(parts[1], line=lineno)
        elif head == "edge":
            builder.add_edge(parts[1], parts[2], line=lineno)
        elif head == "rotation":
            node = parts[1]
            try:
                order = [int(x) for x in parts[3:]]
            except ValueError:
                raise DslSyntaxError("rotation indices must be integers", lineno) from None
            builder.set_rotation(node, order, line=lineno)
        elif head == "start":
            builder.set_start(parts[1], line=lineno)
        elif head == "goal":
            builder.set_goal(parts[1], line=lineno)
    network = builder.build()
    logger.debug(
        "Parsed network: %d instances, %d junctions, %d edges",
        len(network.instances), len(network.junctions), len(network.edges),
    )
    return network


def serialize_network(network: Network) -> str:
    lines = [
        f"gadget {inst.id} kind={inst.label} init={inst.initial_state}"
        for inst in network.instances
    ]
    lines += [f"junction {j}" for j in network.junctions]
    lines += [f"edge {a} {b}" for a, b in network.edges]
    lines += [
        f"rotation {node} = {' '.join(str(i) for i in order)}"
        for node, order in network.explicit_rotation
    ]
    lines.append(f"start {network.start}")
    lines.append(f"goal {network.goal}")
    return "".join(f"{line}\n" for line in lines)


# =============================================================================
# PLANARITY
# =============================================================================

def _vertex(endpoint: str) -> str:
    return split_endpoint(endpoint)[0]


def _darts_at(network: Network, node: str) -> List[int]:
    """Edge indices at a drawing vertex, loops listed twice."""
    result: List[int] = []
    for i, (a, b) in enumerate(network.edges):
        for ep in (a, b):
            if ep == node or (_vertex(ep) == node and "." not in node):
                result.append(i)
    return result


def _default_order(network: Network, vertex: str) -> List[Tuple[int, int]]:
    """Darts (edge, side) around a vertex in declaration order."""
    if vertex in network.instance_index:
        spec = network.instance(vertex).spec
        position = {loc: i for i, loc in enumerate(spec.location_names)}
        darts = []
        for i, edge in enumerate(network.edges):
            for side, ep in enumerate(edge):
                node, loc = split_endpoint(ep)
                if node == vertex:
                    darts.append((position[loc], i, side))
        return [(i, side) for _, i, side in sorted(darts)]
    return [(i, side) for i, edge in enumerate(network.edges) for side, ep in enumerate(edge) if ep == vertex]


def rotation_system(network: Network) -> Dict[str, List[Tuple[int, int]]]:
    """Cyclic dart order at every drawing vertex (instances and junctions)."""
    vertices = [inst.id for inst in network.instances] + list(network.junctions)
    explicit = network.rotation
    system: Dict[str, List[Tuple[int, int]]] = {}
    for vertex in vertices:
        darts = _default_order(network, vertex)
        if vertex in explicit:
            pending = {i: [d for d in darts if d[0] == i] for i in set(explicit[vertex])}
            darts = [pending[i].pop(0) for i in explicit[vertex]]
        system[vertex] = darts
    return system


def trace_faces(network: Network) -> List[List[Tuple[int, int]]]:
    """Faces of the rotation system as dart cycles."""
    system = rotation_system(network)
    successor: Dict[Tuple[int, int], Tuple[int, int]] = {}
    for darts in system.values():
        for k, dart in enumerate(darts):
            successor[dart] = darts[(k + 1) % len(darts)]

    faces: List[List[Tuple[int, int]]] = []
    seen: set[Tuple[int, int]] = set()
    for start in sorted(successor):
        if start in seen:
            continue
        face = []
        dart = start
        while dart not in seen:
            seen.add(dart)
            face.append(dart)
            edge, side = dart
            dart = successor[(edge, 1 - side)]
        faces.append(face)
    return faces


def drawing_graph(network: Network) -> nx.MultiGraph:
    graph = nx.MultiGraph()
    graph.add_nodes_from(inst.id for inst in network.instances)
    graph.add_nodes_from(network.junctions)
    for i, (a, b) in enumerate(network.edges):
        graph.add_edge(_vertex(a), _vertex(b), key=i)
    return graph


# =============================================================================
# VALIDATION
# =============================================================================

@dataclass
class ValidationReport:
    planar: bool
    euler_characteristic: int
    branchless: bool
    input_output_consistent: bool
    diagnostics: List[str] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return self.planar and self.branchless and self.input_output_consistent

    def to_dict(self) -> dict:
        return {
            "planar": self.planar,
            "euler_characteristic": self.euler_characteristic,
            "branchless": self.branchless,
            "input_output_consistent": self.input_output_consistent,
            "diagnostics": list(self.diagnostics),
        }


def validate_network(network: Network, mode: Mode | str = Mode.ONE_PLAYER) -> ValidationReport:
    mode = Mode(mode)
    diagnostics: List[str] = []

    graph = drawing_graph(network)
    faces = trace_faces(network)
    isolated = sum(1 for v in graph.nodes if graph.degree(v) == 0)
    components = nx.number_connected_components(graph)
    chi = graph.number_of_nodes() - graph.number_of_edges() + len(faces) + isolated
    planar = chi == 2 * components
    if not planar:
        diagnostics.append(
            f"rotation system is not planar: V - E + F = {chi}, expected {2 * components}"
        )

    branchless = True
    io_consistent = True
    if mode is Mode.ZERO_PLAYER:
        for inst in network.instances:
            if not classify(inst.spec).is_input_output:
                io_consistent = False
                diagnostics.append(f"{inst.id} ({inst.label}) is not an input/output gadget")
        entries = network.entry_locations()
        for component in network.wire_components:
            inputs = sorted(ep for ep in component if ep in entries)
            if len(inputs) > 1:
                branchless = False
                diagnostics.append(f"wire component has several inputs: {', '.join(inputs)}")

    for message in diagnostics:
        logger.warning("%s", message)
    return ValidationReport(planar, chi, branchless, io_consistent, diagnostics)
