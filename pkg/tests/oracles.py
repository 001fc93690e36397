"""Independent reference implementations used to cross-check the solver."""
from __future__ import annotations

import random
from typing import List, Sequence, Tuple

import networkx as nx

from gadgetforge.gadgets import DOOR_STATES, GadgetKind, standard_gadget
from gadgetforge.network import Network, NetworkBuilder

Config = Tuple[str, Tuple[str, ...]]

TWO_STATE_KINDS = (
    GadgetKind.OCT_DOOR,
    GadgetKind.OCT_DOOR_OPEN_OPTIONAL,
    GadgetKind.SELF_CLOSING,
    GadgetKind.SELF_CLOSING_OPEN_OPTIONAL,
    GadgetKind.SYMMETRIC_SELF_CLOSING,
)


def configuration_graph(network: Network) -> Tuple[nx.DiGraph, Config]:
    """Every configuration reachable from the start, built straight from the transition tables."""
    start: Config = (network.start, tuple(i.initial_state for i in network.instances))
    graph = nx.DiGraph()
    graph.add_node(start)
    stack = [start]
    while stack:
        here, states = stack.pop()
        targets = []
        for a, b in network.edges:
            if here == a:
                targets.append((b, states))
            elif here == b:
                targets.append((a, states))
        node, _, location = here.partition(".")
        for index, inst in enumerate(network.instances):
            if inst.id != node or not location:
                continue
            for t in inst.spec.transitions:
                if t.before == states[index] and t.entry == location:
                    after = states[:index] + (t.after,) + states[index + 1:]
                    targets.append((f"{node}.{t.exit}", after))
        for target in targets:
            if target not in graph:
                stack.append(target)
            graph.add_edge((here, states), target)
    return graph, start


def goal_reachable(network: Network) -> bool:
    graph, start = configuration_graph(network)
    return any(at == network.goal for at, _ in graph.nodes)


def shortest_witness_length(network: Network) -> int:
    graph, start = configuration_graph(network)
    lengths = nx.single_source_shortest_path_length(graph, start)
    return min(n for (at, _), n in lengths.items() if at == network.goal)


def random_door_network(
    rng: random.Random,
    max_gadgets: int = 3,
    max_endpoints: int = 12,
    kinds: Sequence[GadgetKind] = TWO_STATE_KINDS,
) -> Network:
    """A random network of two-state doors and junctions within the endpoint budget."""
    builder = NetworkBuilder()
    locations: List[str] = []
    for n in range(rng.randint(1, max_gadgets)):
        kind = rng.choice(kinds)
        if len(locations) + len(standard_gadget(kind, "closed").location_names) > max_endpoints:
            continue
        inst = builder.add_gadget(f"g{n}", kind, rng.choice(DOOR_STATES))
        locations.extend(inst.endpoint(loc) for loc in inst.spec.location_names)

    spare = max(0, min(3, max_endpoints - len(locations)))
    junctions = [builder.add_junction(f"j{n}") for n in range(rng.randint(0, spare))]
    unwired = list(locations)
    rng.shuffle(unwired)
    while unwired:
        a = unwired.pop()
        if rng.random() < 0.2:
            continue
        choices = unwired + junctions
        if not choices:
            break
        b = rng.choice(choices)
        if b in unwired:
            unwired.remove(b)
        builder.add_edge(a, b)

    endpoints = locations + junctions
    builder.set_start(rng.choice(endpoints))
    builder.set_goal(rng.choice(endpoints))
    return builder.build()


def random_switch_network(rng: random.Random, max_switches: int = 4, merges: bool = False) -> Network:
    """A branchless zero-player network of set-up/set-down switches.

    Every output is left unwired, wired to the goal or wired straight to one
    input. With ``merges`` several outputs may also share a junction in
    front of an input. Each wire component holds at most one input.
    """
    builder = NetworkBuilder()
    count = rng.randint(1, max_switches)
    inputs: List[str] = []
    outputs: List[str] = []
    for n in range(count):
        inst = builder.add_gadget(f"s{n}", GadgetKind.SWITCH, rng.choice(("up", "down")))
        inputs += [inst.endpoint("set_up"), inst.endpoint("set_down")]
        outputs += [inst.endpoint(f"out_{i}_{s}") for i in ("up", "down") for s in ("up", "down")]

    entry = builder.add_junction("entry")
    finish = builder.add_junction("finish")
    free_inputs = list(inputs)
    rng.shuffle(free_inputs)
    first = free_inputs.pop()
    builder.add_edge(entry, first)

    merge_points: List[str] = []
    goal_wired = False
    for out in outputs:
        roll = rng.random()
        if roll < 0.15 and not goal_wired:
            builder.add_edge(out, finish)
            goal_wired = True
        elif merges and roll < 0.45 and (merge_points or free_inputs):
            if merge_points and (not free_inputs or rng.random() < 0.7):
                builder.add_edge(out, rng.choice(merge_points))
            else:
                point = builder.add_junction(f"m{len(merge_points)}")
                builder.add_edge(point, free_inputs.pop())
                builder.add_edge(out, point)
                merge_points.append(point)
        elif roll < 0.75 and free_inputs:
            builder.add_edge(out, free_inputs.pop())
    builder.set_start(entry)
    builder.set_goal(finish)
    return builder.build()


def zero_player_fate(network: Network) -> str:
    """``reached``, ``stuck`` or ``cycle``, jumping straight to each wire's sink."""
    inputs = {
        inst.endpoint(t.entry) for inst in network.instances for t in inst.spec.transitions
    }
    position, states = network.start, network.initial_states
    seen = set()
    while position != network.goal:
        if (position, states) in seen:
            return "cycle"
        seen.add((position, states))
        component = network.component_of(position)
        if network.goal in component:
            sink = network.goal
        else:
            sink = next((ep for ep in sorted(component) if ep in inputs), None)
        if sink is None:
            return "stuck"
        if position != sink:
            position = sink
            continue
        node, _, location = position.partition(".")
        index = network.instance_index[node]
        options = [
            t for t in network.instances[index].spec.transitions
            if t.before == states[index] and t.entry == location
        ]
        if not options:
            return "stuck"
        step = options[0]
        states = states[:index] + (step.after,) + states[index + 1:]
        position = f"{node}.{step.exit}"
    return "reached"
