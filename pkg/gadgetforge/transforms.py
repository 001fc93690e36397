from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

import networkx as nx

from gadgetforge.equivalence import ExternalInterface
from gadgetforge.errors import PlanarityStillViolated, RoutingFailure, UnsupportedGadget
from gadgetforge.gadgets import CLOSED, ONLY, GadgetKind, standard_gadget
from gadgetforge.network import Network, NetworkBuilder, split_endpoint, validate_network

logger = logging.getLogger(__name__)

DOOR = GadgetKind.SELF_CLOSING_OPEN_OPTIONAL.value
DIODE = GadgetKind.DIODE.value
CROSSOVER = GadgetKind.CROSSOVER.value


@dataclass(frozen=True)
class Fragment:
    network: Network
    interface: ExternalInterface


@dataclass(frozen=True)
class TransformResult:
    network: Network
    # Edge index pairs (path edge, crossed edge); each edge runs from its
    # first endpoint to its second once a crossover replaces the crossing.
    crossings: Tuple[Tuple[int, int], ...] = ()


# =============================================================================
# DRAFTS
# =============================================================================

@dataclass
class _Draft:
    """Mutable network under construction."""
    gadgets: List[Tuple[str, str, str]] = field(default_factory=list)
    junctions: List[str] = field(default_factory=list)
    edges: List[Optional[Tuple[str, str]]] = field(default_factory=list)
    start: str = ""
    goal: str = ""

    @classmethod
    def of(cls, network: Network) -> "_Draft":
        return cls(
            gadgets=[(i.id, i.label, i.initial_state) for i in network.instances],
            junctions=list(network.junctions),
            edges=[tuple(e) for e in network.edges],
            start=network.start,
            goal=network.goal,
        )

    def ids(self) -> Set[str]:
        return {g[0] for g in self.gadgets} | set(self.junctions)

    def fresh(self, base: str) -> str:
        taken = self.ids()
        if base not in taken:
            return base
        n = 1
        while f"{base}_{n}" in taken:
            n += 1
        return f"{base}_{n}"

    def gadget(self, base: str, kind: str, init: str) -> str:
        ident = self.fresh(base)
        self.gadgets.append((ident, kind, init))
        return ident

    def junction(self, base: str) -> str:
        ident = self.fresh(base)
        self.junctions.append(ident)
        return ident

    def wire(self, a: str, b: str) -> None:
        self.edges.append((a, b))

    def compact(self) -> None:
        self.edges = [e for e in self.edges if e is not None]

    def edge_at(self, endpoint: str) -> int:
        for i, e in enumerate(self.edges):
            if e is not None and endpoint in e:
                return i
        raise RoutingFailure(f"no wire at {endpoint}")

    def build(self, rotation: Iterable[Tuple[str, Sequence[int]]] = ()) -> Network:
        self.compact()
        builder = NetworkBuilder()
        for ident, kind, init in self.gadgets:
            builder.add_gadget(ident, kind, init)
        for j in self.junctions:
            builder.add_junction(j)
        for a, b in self.edges:
            builder.add_edge(a, b)
        for node, order in rotation:
            builder.set_rotation(node, order)
        builder.set_start(self.start)
        builder.set_goal(self.goal)
        return builder.build()


# =============================================================================
# PLANAR EMBEDDING
# =============================================================================
# Gadgets are modelled as wheels so that the embedding keeps the cyclic
# order of their locations (up to reflection). Wires get a midpoint node so
# parallel wires stay distinct.
# =============================================================================

def _wire_node(i: int) -> str:
    return f"#w{i}"


def _hub(gadget_id: str) -> str:
    return f"{gadget_id}#hub"


def _model_graph(draft: _Draft) -> nx.Graph:
    graph = nx.Graph()
    for ident, kind, init in draft.gadgets:
        nodes = [f"{ident}.{loc}" for loc in standard_gadget(kind, init).location_names]
        graph.add_edges_from((_hub(ident), n) for n in nodes)
        if len(nodes) >= 3:
            graph.add_edges_from((nodes[k], nodes[(k + 1) % len(nodes)]) for k in range(len(nodes)))
    graph.add_nodes_from(draft.junctions)
    for i, e in enumerate(draft.edges):
        if e is not None:
            graph.add_edge(e[0], _wire_node(i))
            graph.add_edge(_wire_node(i), e[1])
    return graph


def _embed(draft: _Draft) -> Tuple[nx.Graph, Optional[nx.PlanarEmbedding]]:
    graph = _model_graph(draft)
    planar, embedding = nx.check_planarity(graph)
    return graph, (embedding if planar else None)


def _rotation_from(draft: _Draft, embedding: nx.PlanarEmbedding) -> List[Tuple[str, List[int]]]:
    rotation: List[Tuple[str, List[int]]] = []
    for ident, kind, init in draft.gadgets:
        order = []
        for loc_node in embedding.neighbors_cw_order(_hub(ident)):
            order.extend(i for i, e in enumerate(draft.edges) if e is not None and loc_node in e)
        if len(order) >= 3:
            rotation.append((ident, order))
    for j in draft.junctions:
        if j in embedding and len(embedding[j]) >= 3:
            rotation.append((j, [int(w[2:]) for w in embedding.neighbors_cw_order(j)]))
    return rotation


def planar_rotation(network: Network) -> Optional[Network]:
    """The network with a planar rotation system, or None if none exists."""
    draft = _Draft.of(network)
    _, embedding = _embed(draft)
    if embedding is None:
        return None
    return draft.build(_rotation_from(draft, embedding))


def _faces(embedding: nx.PlanarEmbedding) -> Tuple[List[Set[str]], Dict[Tuple[str, str], int]]:
    faces: List[Set[str]] = []
    face_of: Dict[Tuple[str, str], int] = {}
    for half in sorted(embedding.edges()):
        if half in face_of:
            continue
        marked: Set[Tuple[str, str]] = set()
        nodes = embedding.traverse_face(*half, mark_half_edges=marked)
        for h in marked:
            face_of[h] = len(faces)
        faces.append(set(nodes))
    return faces, face_of


def _route(graph: nx.Graph, embedding: nx.PlanarEmbedding, source: str, target: str) -> List[int]:
    """Wires crossed by a cheapest route from ``source`` to ``target`` through faces.

    Spokes are never crossed. Rims cross for free: whatever the embedding
    put inside a rim hangs off two neighbouring locations only and can be
    flipped outside.
    """
    if source not in graph or target not in graph or not nx.has_path(graph, source, target):
        return []
    faces, face_of = _faces(embedding)
    adjacent: Dict[int, List[Tuple[int, Optional[int]]]] = {i: [] for i in range(len(faces))}
    for (u, v), face in sorted(face_of.items()):
        if u.endswith("#hub") or v.endswith("#hub"):
            continue
        wire = u if u.startswith("#w") else v if v.startswith("#w") else None
        adjacent[face].append((face_of[(v, u)], None if wire is None else int(wire[2:])))

    starts = [i for i, f in enumerate(faces) if source in f]
    cost = {i: 0 for i in starts}
    parent: Dict[int, Optional[Tuple[int, Optional[int]]]] = {i: None for i in starts}
    queue = deque(starts)
    while queue:
        face = queue.popleft()
        for other, wire in adjacent[face]:
            step = cost[face] + (wire is not None)
            if other in cost and cost[other] <= step:
                continue
            cost[other] = step
            parent[other] = (face, wire)
            if wire is None:
                queue.appendleft(other)
            else:
                queue.append(other)

    goals = [i for i, f in enumerate(faces) if target in f and i in cost]
    if not goals:
        raise RoutingFailure(f"no route from {source} to {target}")
    face = min(goals, key=lambda i: (cost[i], i))
    crossed = []
    while parent[face] is not None:
        face, wire = parent[face]
        if wire is not None:
            crossed.append(wire)
    return crossed[::-1]


# =============================================================================
# CONSTRUCTIONS
# =============================================================================

def derive_diode() -> Fragment:
    """A one-way wire from an open-optional self-closing door.

    The open port and the self-close entrance share one junction.
    """
    draft = _Draft()
    door = draft.gadget("d", DOOR, CLOSED)
    entry = draft.junction("in")
    draft.wire(entry, f"{door}.open")
    draft.wire(entry, f"{door}.selfclose_in")
    draft.start, draft.goal = entry, f"{door}.selfclose_out"
    interface = ExternalInterface.from_mapping({"in": entry, "out": f"{door}.selfclose_out"})
    return Fragment(draft.build(), interface)


def _add_dual_port(draft: _Draft, prefix: str) -> Dict[str, str]:
    """Three closed doors and four diodes behaving as one door with two open ports."""
    a = draft.gadget(f"{prefix}_A", DOOR, CLOSED)
    b = draft.gadget(f"{prefix}_B", DOOR, CLOSED)
    c = draft.gadget(f"{prefix}_C", DOOR, CLOSED)
    hub = draft.junction(f"{prefix}_M")
    ports = {}
    for side, gate in (("1", a), ("2", b)):
        port = draft.junction(f"{prefix}_open{side}")
        lobby = draft.junction(f"{prefix}_K{side}")
        inward = draft.gadget(f"{prefix}_D{side}", DIODE, ONLY)
        onward = draft.gadget(f"{prefix}_E{side}", DIODE, ONLY)
        draft.wire(port, f"{inward}.in")
        draft.wire(f"{inward}.out", lobby)
        draft.wire(lobby, f"{gate}.open")
        draft.wire(lobby, f"{onward}.in")
        draft.wire(f"{onward}.out", hub)
        draft.wire(hub, f"{gate}.selfclose_in")
        draft.wire(f"{gate}.selfclose_out", port)
        ports[f"open{side}"] = port
    draft.wire(hub, f"{c}.open")
    ports["selfclose_in"] = f"{c}.selfclose_in"
    ports["selfclose_out"] = f"{c}.selfclose_out"
    return ports


def duplicate_open_port(door_id: str) -> Fragment:
    draft = _Draft()
    ports = _add_dual_port(draft, door_id)
    draft.start, draft.goal = ports["open1"], ports["selfclose_out"]
    return Fragment(draft.build(), ExternalInterface.from_mapping(ports))


def _attach_point(draft: _Draft, endpoint: str) -> str:
    """A junction-like endpoint that can take one more wire."""
    if split_endpoint(endpoint)[1] is None:
        return endpoint
    try:
        i = draft.edge_at(endpoint)
    except RoutingFailure:
        return endpoint
    other = draft.edges[i][0] if draft.edges[i][1] == endpoint else draft.edges[i][1]
    junction = draft.junction(f"{split_endpoint(endpoint)[0]}_{split_endpoint(endpoint)[1]}_j")
    draft.edges[i] = (endpoint, junction)
    draft.wire(junction, other)
    return junction


def _cross(draft: _Draft, source: str, target: str, wires: List[int]) -> List[str]:
    """Lay a one-way path from ``source`` to ``target`` through temporary crossovers.

    A crossed wire becomes a pair of opposite one-way wires between two new
    junctions, and the path passes both, so the wire still runs both ways.
    """
    crossovers = []
    prev = source
    for w in wires:
        u, v = draft.edges[w]
        draft.edges[w] = None
        near, far = draft.junction("xj"), draft.junction("xj")
        draft.wire(u, near)
        draft.wire(far, v)
        for entry, exit_ in ((near, far), (far, near)):
            x = draft.gadget("x", CROSSOVER, ONLY)
            after = draft.junction("xj")
            draft.wire(entry, f"{x}.b_in")
            draft.wire(f"{x}.b_out", exit_)
            draft.wire(prev, f"{x}.a_in")
            draft.wire(f"{x}.a_out", after)
            prev = after
            crossovers.append(x)
    draft.wire(prev, target)
    draft.compact()
    return crossovers


def _uncross(draft: _Draft, crossovers: List[str]) -> List[Tuple[Tuple[str, str], Tuple[str, str]]]:
    pairs = []
    for x in reversed(crossovers):
        ends = {}
        for loc in ("a_in", "a_out", "b_in", "b_out"):
            i = draft.edge_at(f"{x}.{loc}")
            a, b = draft.edges[i]
            ends[loc] = b if a == f"{x}.{loc}" else a
            draft.edges[i] = None
        draft.gadgets = [g for g in draft.gadgets if g[0] != x]
        path = (ends["a_in"], ends["a_out"])
        crossed = (ends["b_in"], ends["b_out"])
        draft.edges.extend([path, crossed])
        pairs.append((path, crossed))
    draft.compact()
    return pairs


def make_initially_closed(network: Network) -> TransformResult:
    """Replace every initially open door by a closed dual-port door.

    A new start walks past the second open port of each replaced door and
    then through a diode to the original start, so the agent may open them
    all before play begins.
    """
    for inst in network.instances:
        if inst.kind is not GadgetKind.SELF_CLOSING_OPEN_OPTIONAL:
            raise UnsupportedGadget(f"{inst.id} is {inst.label}, not {DOOR}")

    draft = _Draft(junctions=list(network.junctions))
    rename: Dict[str, str] = {}
    second_ports: List[str] = []
    for inst in network.instances:
        draft.gadgets.append((inst.id, inst.label, inst.initial_state))
    for inst in network.instances:
        if inst.initial_state == CLOSED:
            continue
        draft.gadgets.remove((inst.id, inst.label, inst.initial_state))
        ports = _add_dual_port(draft, inst.id)
        rename[inst.endpoint("open")] = ports["open1"]
        rename[inst.endpoint("selfclose_in")] = ports["selfclose_in"]
        rename[inst.endpoint("selfclose_out")] = ports["selfclose_out"]
        second_ports.append(ports["open2"])

    for a, b in network.edges:
        draft.wire(rename.get(a, a), rename.get(b, b))
    draft.goal = rename.get(network.goal, network.goal)

    new_start = draft.junction("start")
    diode = draft.gadget("entry_diode", DIODE, ONLY)
    entry = _attach_point(draft, rename.get(network.start, network.start))
    draft.start = new_start

    stops = [new_start, *second_ports, f"{diode}.in"]
    hops = list(zip(stops, stops[1:])) + [(f"{diode}.out", entry)]
    crossovers: List[str] = []
    for source, target in hops:
        graph, embedding = _embed(draft)
        if embedding is None:
            raise RoutingFailure("intermediate network lost planarity")
        crossovers += _cross(draft, source, target, _route(graph, embedding, source, target))

    pairs = _uncross(draft, crossovers)
    if pairs:
        result = draft.build()
        index = {tuple(e): i for i, e in enumerate(result.edges)}
        crossings = tuple((index[p], index[c]) for p, c in pairs)
        logger.info("Initially-closed rewrite needs %d crossovers", len(crossings))
        return TransformResult(result, crossings)

    _, embedding = _embed(draft)
    rotation = _rotation_from(draft, embedding) if embedding is not None else []
    return TransformResult(draft.build(rotation))


def insert_crossovers(network: Network, crossings: Sequence[Tuple[int, int]]) -> Network:
    """Replace each declared pair of crossing wires by a directed crossover."""
    if not crossings and validate_network(network).planar:
        return network

    used: Set[int] = set()
    for pair in crossings:
        for i in pair:
            if i in used or not 0 <= i < len(network.edges):
                raise ValueError(f"bad crossing list entry {pair}")
            used.add(i)

    draft = _Draft.of(network)
    for first, second in crossings:
        (a, b), (c, d) = draft.edges[first], draft.edges[second]
        draft.edges[first] = draft.edges[second] = None
        x = draft.gadget("x", CROSSOVER, ONLY)
        draft.wire(a, f"{x}.a_in")
        draft.wire(f"{x}.a_out", b)
        draft.wire(c, f"{x}.b_in")
        draft.wire(f"{x}.b_out", d)

    draft.compact()
    _, embedding = _embed(draft)
    if embedding is None:
        raise PlanarityStillViolated(f"still not planar after {len(crossings)} crossovers")
    return draft.build(_rotation_from(draft, embedding))
