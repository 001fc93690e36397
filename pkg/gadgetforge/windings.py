"""Winding durations for doors built from timed Kevin blocks.

A door opened at step ``o`` stays open for the duration assigned to that
visit. Every later witness step costs one unit and every later winding costs
its own duration, so the door is still open at step ``t`` when

    duration - (t - o) - (windings strictly between o and t) > 0
"""
from __future__ import annotations

import logging
from typing import Dict, List, Optional, Tuple, Union

from gadgetforge.errors import UnsupportedGadget, WitnessInvalid
from gadgetforge.gadgets import DOOR_KINDS, GadgetKind
from gadgetforge.network import Network
from gadgetforge.solver import (
    Accept,
    Reject,
    RejectReason,
    TraverseMove,
    Witness,
    verify_witness,
)

logger = logging.getLogger(__name__)


def _timed_doors(network: Network) -> set[str]:
    return {
        inst.id for inst in network.instances
        if inst.kind is GadgetKind.SELF_CLOSING_OPEN_OPTIONAL
    }


def _is_opening(move: object, doors: set[str]) -> bool:
    return (
        isinstance(move, TraverseMove)
        and move.instance in doors
        and move.entry == "open"
        and move.exit == "open"
    )


def _is_self_close(move: object, doors: set[str]) -> bool:
    return isinstance(move, TraverseMove) and move.instance in doors and move.entry == "selfclose_in"


def _pair_openings(network: Network, witness: Witness) -> Tuple[List[int], Dict[int, int]]:
    """Opening step indices, and the self-close step each of them serves."""
    doors = _timed_doors(network)
    openings: List[int] = []
    serves: Dict[int, int] = {}
    last_open: Dict[str, Optional[int]] = {}

    for step, move in enumerate(witness.steps):
        if _is_opening(move, doors):
            openings.append(step)
            last_open[move.instance] = step
        elif _is_self_close(move, doors):
            opened = last_open.get(move.instance)
            if opened is None:
                # Only possible for a door that starts open.
                if network.instance(move.instance).initial_state != "open":
                    raise WitnessInvalid(f"step {step}: {move.instance} closes without being opened")
                continue
            serves[opened] = step
            last_open[move.instance] = None
    return openings, serves


def schedule_kevin_windings(network: Network, witness: Witness, slack: int = 1) -> Dict[int, int]:
    """Assign a winding duration to every opening visit of ``witness``.

    Visits are processed latest first, so each duration can include the
    windings that happen before its door is used.
    """
    for inst in network.instances:
        if inst.kind in DOOR_KINDS and inst.kind is not GadgetKind.SELF_CLOSING_OPEN_OPTIONAL:
            raise UnsupportedGadget(f"{inst.id} is {inst.label}; Kevin windings time open-optional self-closing doors")
    verdict = verify_witness(network, witness)
    if isinstance(verdict, Reject):
        raise WitnessInvalid(f"step {verdict.step}: {verdict.reason.value}")

    openings, serves = _pair_openings(network, witness)
    schedule: Dict[int, int] = {}
    for opened in reversed(openings):
        used = serves.get(opened)
        if used is None:
            schedule[opened] = 0
            continue
        between = sum(schedule[k] for k in openings if opened < k < used)
        schedule[opened] = (used - opened) + between + slack
    logger.debug("Winding schedule for %d opening visits: %s", len(openings), schedule)
    return schedule


def replay_timed(network: Network, witness: Witness, schedule: Dict[int, int]) -> Union[Accept, Reject]:
    """Replay ``witness`` with doors open only while their winding lasts."""
    verdict = verify_witness(network, witness)
    if isinstance(verdict, Reject):
        return verdict

    doors = _timed_doors(network)
    remaining: Dict[str, Optional[int]] = {
        d: None if network.instance(d).initial_state == "open" else 0 for d in doors
    }

    def elapse(units: int, skip: Optional[str] = None) -> None:
        for door, left in remaining.items():
            if door != skip and left is not None and left > 0:
                remaining[door] = left - units

    for step, move in enumerate(witness.steps):
        if step > 0:
            elapse(1)
        if _is_self_close(move, doors):
            left = remaining[move.instance]
            # None: open from the start, with no timer running.
            if left is not None and left <= 0:
                return Reject(step, RejectReason.BLOCKED)
            remaining[move.instance] = 0
        elif _is_opening(move, doors):
            duration = schedule.get(step, 0)
            elapse(duration, skip=move.instance)
            remaining[move.instance] = duration
    return Accept()
