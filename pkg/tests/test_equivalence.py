from __future__ import annotations

import random

import pytest

from gadgetforge.equivalence import (
    ExternalInterface,
    check_equivalence,
    check_trace_equivalence,
    derive_gadget,
    dual_open_port_reference,
    quotient_by_bisimilarity,
)
from gadgetforge.errors import LabelMismatch, LeakDetected, ResourceLimit
from gadgetforge.gadgets import (
    GadgetKind,
    GadgetSpec,
    LocationRole,
    Transition,
    parse_gadget_spec,
    standard_gadget,
    valid_states,
)
from gadgetforge.network import NetworkBuilder, parse_network
from gadgetforge.transforms import derive_diode, duplicate_open_port

PORT_LABELS = {label: label for label in ("open1", "open2", "selfclose_in", "selfclose_out")}


def _port_candidate(text: str) -> GadgetSpec:
    return derive_gadget(parse_network(text), ExternalInterface.from_mapping(PORT_LABELS), name="ThreeDoorPort")


def test_reference_spec_file_matches_builtin(corpus):
    text = (corpus / "dual-open-door.spec").read_text(encoding="utf-8")
    assert parse_gadget_spec(text) == dual_open_port_reference()


def test_duplicate_open_port_fragment_is_bisimilar():
    fragment = duplicate_open_port("door")
    derived = derive_gadget(fragment.network, fragment.interface)
    verdict = check_equivalence(derived, dual_open_port_reference())
    assert verdict.equivalent
    assert verdict.counterexample == ()


def test_three_door_corpus_network_is_bisimilar(corpus):
    text = (corpus / "three-door-port.net").read_text(encoding="utf-8")
    assert check_equivalence(_port_candidate(text), dual_open_port_reference()).equivalent


@pytest.mark.parametrize(
    "old,new",
    [
        # A's self-close entrance moves next to its own opener: open1 can no longer reach C.
        ("edge M A.selfclose_in", "edge K1 A.selfclose_in"),
        # C's opener moves into the first lobby: open2 can no longer open C.
        ("edge M C.open", "edge K1 C.open"),
        # The first lobby loses its diode to the hub.
        ("edge K1 E1.in", "edge K2 E1.in"),
        # The self-close tunnel leads out through the second port.
        ("edge C.selfclose_out selfclose_out", "edge C.selfclose_out open2"),
    ],
)
def test_single_edge_mutations_break_equivalence(corpus, old, new):
    text = (corpus / "three-door-port.net").read_text(encoding="utf-8")
    assert old in text
    verdict = check_equivalence(_port_candidate(text.replace(old, new)), dual_open_port_reference())
    assert not verdict.equivalent
    assert 1 <= len(verdict.counterexample) <= 6


PORT_JUNCTIONS = ("open1", "open2", "K1", "K2", "M", "selfclose_in", "selfclose_out")


def test_random_edge_mutations_have_short_counterexamples(corpus):
    lines = (corpus / "three-door-port.net").read_text(encoding="utf-8").splitlines()
    edges = [k for k, line in enumerate(lines) if line.startswith("edge ")]
    rng = random.Random(7)
    broken = 0
    for _ in range(30):
        k = rng.choice(edges)
        ends = lines[k].split()[1:]
        slot = next(n for n, ep in enumerate(ends) if ep in PORT_JUNCTIONS)
        ends[slot] = rng.choice([j for j in PORT_JUNCTIONS if j != ends[slot]])
        mutated = lines[:k] + [f"edge {ends[0]} {ends[1]}"] + lines[k + 1:]
        verdict = check_equivalence(_port_candidate("\n".join(mutated) + "\n"), dual_open_port_reference())
        if not verdict.equivalent:
            assert 1 <= len(verdict.counterexample) <= 6, mutated[k]
            broken += 1
    assert broken >= 10


def test_derived_diode_is_a_diode():
    fragment = derive_diode()
    derived = derive_gadget(fragment.network, fragment.interface, name="DerivedDiode")
    assert check_equivalence(derived, standard_gadget(GadgetKind.DIODE, "only")).equivalent
    assert len(quotient_by_bisimilarity(derived).states) == 1


def test_identity_interface_recovers_the_gadget():
    net = parse_network("gadget d kind=OCTDoor init=closed\nstart d.open_in\ngoal d.traverse_out\n")
    derived = derive_gadget(net, ExternalInterface.identity(net, "d"))
    assert set(derived.states) == {"closed", "open"}
    assert check_equivalence(derived, standard_gadget(GadgetKind.OCT_DOOR, "closed")).equivalent
    assert not check_equivalence(derived, standard_gadget(GadgetKind.OCT_DOOR, "open")).equivalent


@pytest.mark.parametrize("kind", list(GadgetKind))
def test_identity_interface_recovers_every_kind(kind):
    for state in valid_states(kind):
        builder = NetworkBuilder()
        inst = builder.add_gadget("g", kind, state)
        first = inst.endpoint(inst.spec.location_names[0])
        builder.set_start(first)
        builder.set_goal(first)
        net = builder.build()
        derived = derive_gadget(net, ExternalInterface.identity(net, "g"))
        assert check_equivalence(derived, standard_gadget(kind, state)).equivalent, state


def test_exit_found_by_walking_back_over_the_entrance():
    net = parse_network(
        "gadget d kind=OCTDoor init=closed\n"
        "junction in\n"
        "edge in d.open_in\n"
        "edge d.open_out in\n"
        "edge in d.traverse_in\n"
        "start in\n"
        "goal d.traverse_out\n"
    )
    derived = derive_gadget(net, ExternalInterface.from_mapping({"in": "in", "out": "d.traverse_out"}))
    assert Transition("closed", "in", "out", "open") in derived.transitions
    assert check_equivalence(derived, standard_gadget(GadgetKind.DIODE, "only")).equivalent


def _corpus_specs(corpus):
    text = (corpus / "three-door-port.net").read_text(encoding="utf-8")
    fragment = duplicate_open_port("door")
    diode = derive_diode()
    specs = [standard_gadget(kind, state) for kind in GadgetKind for state in valid_states(kind)]
    specs += [
        dual_open_port_reference(),
        derive_gadget(fragment.network, fragment.interface),
        _port_candidate(text),
        _port_candidate(text.replace("edge M C.open", "edge K1 C.open")),
        derive_gadget(diode.network, diode.interface),
    ]
    return specs


def test_equivalence_is_reflexive_symmetric_and_transitive(corpus):
    groups = {}
    for spec in _corpus_specs(corpus):
        groups.setdefault(frozenset(spec.location_names), []).append(spec)
    for group in groups.values():
        n = len(group)
        same = {(i, j): check_equivalence(group[i], group[j]).equivalent for i in range(n) for j in range(n)}
        for i in range(n):
            assert same[i, i]
            for j in range(n):
                assert same[i, j] == same[j, i]
                for k in range(n):
                    if same[i, j] and same[j, k]:
                        assert same[i, k]


def test_counterexample_for_different_initial_states():
    verdict = check_equivalence(
        standard_gadget(GadgetKind.SELF_CLOSING, "closed"),
        standard_gadget(GadgetKind.SELF_CLOSING, "open"),
    )
    assert not verdict.equivalent
    assert verdict.counterexample == (("selfclose_in", "selfclose_out"),)


def test_label_mismatch():
    with pytest.raises(LabelMismatch):
        check_equivalence(standard_gadget(GadgetKind.DIODE, "only"), standard_gadget(GadgetKind.SELF_CLOSING, "open"))


def _branching(name: str, rows) -> GadgetSpec:
    transitions = [Transition(*row) for row in rows]
    states = sorted({t.before for t in transitions} | {t.after for t in transitions})
    return GadgetSpec(
        name=name,
        states=tuple(states),
        locations=(("a", LocationRole.ENTRANCE), ("b", LocationRole.EXIT), ("c", LocationRole.EXIT)),
        transitions=frozenset(transitions),
        initial_state="0",
    )


def test_trace_equivalence_is_weaker_than_bisimulation():
    # Same traversal sequences; the choice happens at different times.
    late = _branching("Late", [("0", "a", "b", "1"), ("1", "a", "b", "2"), ("1", "a", "c", "3")])
    early = _branching("Early", [
        ("0", "a", "b", "1"),
        ("0", "a", "b", "2"),
        ("1", "a", "b", "3"),
        ("2", "a", "c", "4"),
    ])
    assert check_trace_equivalence(late, early).equivalent
    verdict = check_equivalence(late, early)
    assert not verdict.equivalent
    assert verdict.counterexample[0] == ("a", "b")


def test_trace_inequivalence_has_a_counterexample():
    verdict = check_trace_equivalence(
        standard_gadget(GadgetKind.SELF_CLOSING, "closed"),
        standard_gadget(GadgetKind.SELF_CLOSING, "open"),
    )
    assert not verdict.equivalent
    assert verdict.counterexample == (("selfclose_in", "selfclose_out"),)


def test_agent_coming_to_rest_is_a_leak():
    net = parse_network("gadget D kind=Diode init=only\njunction j\nedge j D.in\nstart j\ngoal j\n")
    with pytest.raises(LeakDetected):
        derive_gadget(net, ExternalInterface.from_mapping({"in": "j"}))


def test_budget_is_enforced():
    fragment = duplicate_open_port("door")
    with pytest.raises(ResourceLimit):
        derive_gadget(fragment.network, fragment.interface, budget=2)
