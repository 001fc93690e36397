from __future__ import annotations

import random

import pytest

from gadgetforge.errors import UnsupportedGadget, WitnessInvalid
from gadgetforge.gadgets import GadgetKind
from gadgetforge.network import parse_network
from gadgetforge.solver import Accept, Reject, RejectReason, TraverseMove, WireMove, Witness, solve_one_player
from gadgetforge.windings import replay_timed, schedule_kevin_windings
from oracles import random_door_network

DOOR = "SelfClosingOpenOptional"

# Opened at step 2, used at step 7.
SINGLE = parse_network(f"""\
gadget D kind={DOOR} init=closed
junction s
junction h1
junction h2
junction h3
edge s h1
edge h1 D.open
edge h1 h2
edge h2 h3
edge h3 D.selfclose_in
start s
goal D.selfclose_out
""")

SINGLE_WITNESS = Witness((
    WireMove(0),
    WireMove(1),
    TraverseMove("D", "open", "open"),
    WireMove(1),
    WireMove(2),
    WireMove(3),
    WireMove(4),
    TraverseMove("D", "selfclose_in", "selfclose_out"),
))

# D1 is opened first and used last; D2's winding happens in between.
NESTED = parse_network(f"""\
gadget D1 kind={DOOR} init=closed
gadget D2 kind={DOOR} init=closed
junction s
junction h
edge s h
edge h D1.open
edge h D2.open
edge h D2.selfclose_in
edge D2.selfclose_out D1.selfclose_in
start s
goal D1.selfclose_out
""")

NESTED_WITNESS = Witness((
    WireMove(0),
    WireMove(1),
    TraverseMove("D1", "open", "open"),
    WireMove(1),
    WireMove(2),
    TraverseMove("D2", "open", "open"),
    WireMove(2),
    WireMove(3),
    TraverseMove("D2", "selfclose_in", "selfclose_out"),
    WireMove(4),
    TraverseMove("D1", "selfclose_in", "selfclose_out"),
))


def test_no_doors_no_schedule():
    net = parse_network("junction a\njunction b\nedge a b\nstart a\ngoal b\n")
    assert schedule_kevin_windings(net, Witness((WireMove(0),))) == {}


def test_single_door_gets_gap_plus_one():
    schedule = schedule_kevin_windings(SINGLE, SINGLE_WITNESS)
    assert schedule == {2: 6}
    assert replay_timed(SINGLE, SINGLE_WITNESS, schedule) == Accept()


def test_single_door_one_unit_short_is_rejected():
    assert replay_timed(SINGLE, SINGLE_WITNESS, {2: 5}) == Reject(7, RejectReason.BLOCKED)


def test_nested_doors_account_for_inner_winding():
    schedule = schedule_kevin_windings(NESTED, NESTED_WITNESS)
    assert schedule == {5: 4, 2: 13}
    assert replay_timed(NESTED, NESTED_WITNESS, schedule) == Accept()


@pytest.mark.parametrize("step", [2, 5])
def test_tight_schedule_breaks_when_any_duration_shrinks(step):
    schedule = schedule_kevin_windings(NESTED, NESTED_WITNESS)
    schedule[step] -= 1
    verdict = replay_timed(NESTED, NESTED_WITNESS, schedule)
    assert isinstance(verdict, Reject)
    assert verdict.reason is RejectReason.BLOCKED


def test_slack_widens_every_duration():
    assert schedule_kevin_windings(SINGLE, SINGLE_WITNESS, slack=3) == {2: 8}


def test_invalid_witness_is_refused():
    bad = Witness((WireMove(0), WireMove(2)))
    with pytest.raises(WitnessInvalid):
        schedule_kevin_windings(SINGLE, bad)


def test_schedules_replay_on_random_door_networks():
    rng = random.Random(99)
    checked = 0
    for _ in range(150):
        net = random_door_network(rng, max_gadgets=4, kinds=(GadgetKind.SELF_CLOSING_OPEN_OPTIONAL,))
        witness = solve_one_player(net)
        if not isinstance(witness, Witness):
            continue
        schedule = schedule_kevin_windings(net, witness)
        assert replay_timed(net, witness, schedule) == Accept()
        checked += 1
    assert checked > 0


@pytest.mark.parametrize(
    "kind,location",
    [("OCTDoor", "traverse_in"), ("SelfClosing", "selfclose_in"), ("SymmetricSelfClosing", "selfclose_in")],
)
def test_only_open_optional_self_closing_doors_are_timed(kind, location):
    net = parse_network(f"gadget d kind={kind} init=open\njunction a\nedge a d.{location}\nstart a\ngoal a\n")
    with pytest.raises(UnsupportedGadget):
        schedule_kevin_windings(net, Witness(()))
