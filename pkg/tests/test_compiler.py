from __future__ import annotations

import random
from itertools import combinations

import networkx as nx
import pytest

from gadgetforge.compiler import compile_one_player, compile_zero_player, format_manifest
from gadgetforge.config import CompilerSettings
from gadgetforge.errors import BranchingWire, FlavorMismatch, InitialStateUnsupported, RoutingFailure
from gadgetforge.gadgets import GadgetKind
from gadgetforge.levels import Tile, count_kinds, format_level, parse_level
from gadgetforge.network import parse_network
from oracles import random_door_network

PUFFERS = """\
gadget p kind=SymmetricSelfClosing init=closed
gadget q kind=SymmetricSelfClosing init=open
edge p.selfclose_out q.selfopen_in
start p.selfclose_in
goal q.selfopen_out
"""

MERGE = """\
gadget s1 kind=SetUpSetDownSwitch init=up
gadget s2 kind=SetUpSetDownSwitch init=up
junction entry
junction hub
junction finish
edge entry s1.set_up
edge s1.out_up_up hub
edge s2.out_up_up hub
edge hub s2.set_down
start entry
goal finish
"""


def test_seeker_door_level(load_corpus):
    level = compile_one_player(load_corpus("door-chain.net"), "seeker-barrier-move")
    counts = count_kinds(level.entities)
    assert counts["seeker"] == 1
    assert counts["barrier"] == 8
    assert counts["moveblock-left"] + counts["moveblock-right"] == 4
    assert counts["madeline"] == counts["goal"] == 1
    assert [s.instance for s in level.manifest.stamps] == ["d"]
    assert level.madeline_start == level.manifest.ports["d.open_in"]


def test_wire_only_network_has_no_entities():
    net = parse_network("junction a\njunction b\nedge a b\nstart a\ngoal b\n")
    level = compile_one_player(net, "jelly")
    assert count_kinds(level.entities) == {"madeline": 1, "goal": 1}
    assert level.manifest.stamps == []
    assert level.madeline_start != level.goal


def test_pufferfish_door_with_other_tunnel_open_is_mirrored():
    level = compile_one_player(parse_network(PUFFERS), "pufferfish")
    first, second = level.manifest.stamps
    assert not first.blueprint.endswith("(mirrored)")
    assert second.blueprint.endswith("(mirrored)")
    assert count_kinds(level.entities)["pufferfish"] == 2


def test_flavor_must_match_the_doors(load_corpus):
    with pytest.raises(FlavorMismatch):
        compile_one_player(load_corpus("door-chain.net"), "jelly")
    with pytest.raises(FlavorMismatch):
        compile_one_player(load_corpus("locked-door.net"), "kevin")
    with pytest.raises(FlavorMismatch):
        compile_zero_player(load_corpus("door-chain.net"))


def test_kevin_doors_start_closed(load_corpus):
    net = load_corpus("open-doors.net")
    with pytest.raises(InitialStateUnsupported):
        compile_one_player(net, "kevin")
    assert compile_one_player(net, "jelly").manifest.stamps


def test_size_bound_holds_across_the_corpus(load_corpus):
    levels = [
        compile_one_player(load_corpus("door-chain.net"), "seeker"),
        compile_one_player(load_corpus("open-doors.net"), "jelly"),
        compile_one_player(parse_network(PUFFERS), "puffer"),
    ]
    for name in ("one-switch.net", "two-switch.net", "toggler.net", "dead-end.net"):
        levels.append(compile_zero_player(load_corpus(name), "autonomous"))
        levels.append(compile_zero_player(load_corpus(name), "player-trap"))
    for level in levels:
        assert level.size <= level.manifest.bound.limit
        assert (level.width, level.height) == (level.manifest.width, level.manifest.height)


def test_tight_layout_constant_is_a_routing_failure(load_corpus):
    with pytest.raises(RoutingFailure):
        compile_one_player(load_corpus("door-chain.net"), "seeker", CompilerSettings(layout_constant=0))


@pytest.mark.parametrize("name", ["three-door-port.net", "fig8.net"])
def test_dual_port_networks_do_not_compile(load_corpus, name):
    net = load_corpus(name)
    with pytest.raises(FlavorMismatch):
        compile_one_player(net, "seeker")
    with pytest.raises(RoutingFailure):
        compile_one_player(net, "jelly")


# =============================================================================
# CORRIDOR CONNECTIVITY
# =============================================================================

def _corridor_groups(level):
    """Component label of every open cell outside the stamps."""
    open_cells = level.tiles != Tile.SOLID
    for s in level.manifest.stamps:
        open_cells[s.y:s.y + s.height, s.x:s.x + s.width] = False
    grid = nx.grid_2d_graph(level.height, level.width)
    grid.remove_nodes_from([cell for cell in list(grid) if not open_cells[cell]])
    return {cell: k for k, group in enumerate(nx.connected_components(grid)) for cell in group}


def _mouth(level, endpoint):
    """The corridor cell a port or junction spine opens onto, as (row, column)."""
    x, y = level.manifest.ports[endpoint]
    node, _, location = endpoint.partition(".")
    if not location:
        return (y, x)
    stamp = next(s for s in level.manifest.stamps if s.instance == node)
    return (y - 1, x) if y == stamp.y else (y + 1, x)


def _assert_wires_kept_apart(network, level):
    groups = _corridor_groups(level)
    wired = [ep for ep in network.endpoints if network.incident[ep]]
    for a, b in combinations(wired, 2):
        joined = groups[_mouth(level, a)] == groups[_mouth(level, b)]
        assert joined == (network.component_of(a) == network.component_of(b)), (a, b)


@pytest.mark.parametrize(
    "name,flavor",
    [("open-doors.net", "jelly"), ("door-chain.net", "seeker")],
)
def test_corridors_join_exactly_the_wired_ports(load_corpus, name, flavor):
    net = load_corpus(name)
    level = compile_one_player(net, flavor)
    assert level.manifest.plan.crossings == []
    _assert_wires_kept_apart(net, level)


def test_corridors_stay_apart_on_random_networks():
    rng = random.Random(5)
    compiled = 0
    for _ in range(60):
        net = random_door_network(rng, max_gadgets=3, max_endpoints=9, kinds=(GadgetKind.SELF_CLOSING_OPEN_OPTIONAL,))
        try:
            level = compile_one_player(net, "jelly")
        except RoutingFailure:
            continue
        _assert_wires_kept_apart(net, level)
        compiled += 1
    assert compiled >= 5


def test_unavoidable_crossing_is_a_routing_failure():
    net = parse_network(
        "gadget a kind=SelfClosingOpenOptional init=closed\n"
        "gadget b kind=SelfClosingOpenOptional init=closed\n"
        "edge a.selfclose_in b.open\n"
        "edge a.selfclose_out b.selfclose_in\n"
        "start a.open\n"
        "goal b.selfclose_out\n"
    )
    with pytest.raises(RoutingFailure, match="wires cross"):
        compile_one_player(net, "jelly")


# =============================================================================
# ZERO PLAYER
# =============================================================================

def test_one_switch_level(load_corpus):
    level = compile_zero_player(load_corpus("one-switch.net"), "autonomous")
    counts = count_kinds(level.entities)
    assert counts["jellyfish"] == 2
    assert counts["madeline"] == 1
    assert [s.instance for s in level.manifest.stamps] == ["s", "goal"]
    assert level.manifest.stamps[0].chamber
    assert level.manifest.stamps[1].blueprint == "autonomous goal"
    assert level.manifest.plan.merges == 0
    assert level.manifest.plan.downward_turns == 2


def test_player_trap_final(load_corpus):
    auto = compile_zero_player(load_corpus("one-switch.net"), "autonomous")
    trap = compile_zero_player(load_corpus("one-switch.net"), "player-trap")
    assert trap.manifest.stamps[-1].blueprint == "player trap goal"
    assert count_kinds(trap.entities)["moveblock-up"] == 1
    assert (trap.width, trap.height) == (auto.width, auto.height)


def test_fan_in_emits_one_merge():
    level = compile_zero_player(parse_network(MERGE))
    assert level.manifest.plan.merges == 1


def test_fan_out_is_rejected():
    net = parse_network(
        "gadget s1 kind=SetUpSetDownSwitch init=up\n"
        "gadget s2 kind=SetUpSetDownSwitch init=up\n"
        "junction fork\n"
        "edge fork s1.set_up\n"
        "edge fork s2.set_up\n"
        "start fork\n"
        "goal s1.out_up_up\n"
    )
    with pytest.raises(BranchingWire):
        compile_zero_player(net)


def test_manifest_text(load_corpus):
    level = compile_zero_player(load_corpus("one-switch.net"))
    text = format_manifest(level.manifest)
    lines = text.splitlines()
    assert lines[0] == "manifest zero-player"
    assert lines[1] == f"size {level.width} {level.height}"
    assert any(line.startswith("stamp s ") for line in lines)
    assert any(line.startswith("port s.set_up ") for line in lines)
    assert lines[-1].startswith(f"bound M={level.size} c=4 ")


def test_compilation_is_deterministic(load_corpus):
    net = load_corpus("two-switch.net")
    first, second = compile_zero_player(net), compile_zero_player(net)
    assert format_level(first) == format_level(second)
    assert format_manifest(first.manifest) == format_manifest(second.manifest)


def test_compiled_level_text_round_trips(load_corpus):
    text = format_level(compile_one_player(load_corpus("open-doors.net"), "jelly"))
    assert format_level(parse_level(text)) == text
