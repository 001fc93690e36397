from __future__ import annotations

from typing import Iterable, List, Sequence, Tuple, Union

from gadgetforge.errors import DslSyntaxError
from gadgetforge.network import edge_id
from gadgetforge.solver import (
    Move,
    TraverseMove,
    Unreachable,
    WireMove,
    Witness,
    ZeroPlayerOutcome,
    verdict_name,
)


def format_move(move: Move) -> str:
    if isinstance(move, WireMove):
        return f"wire {edge_id(move.edge)}"
    return f"traverse {move.instance} {move.entry} {move.exit}"


def parse_move(line: str, lineno: int | None = None) -> Move:
    parts = line.split()
    if len(parts) == 2 and parts[0] == "wire" and parts[1].startswith("e") and parts[1][1:].isdigit():
        return WireMove(int(parts[1][1:]))
    if len(parts) == 4 and parts[0] == "traverse":
        return TraverseMove(parts[1], parts[2], parts[3])
    raise DslSyntaxError(f"cannot parse move {line!r}", lineno)


def _verdict_line(name: str, numbers: Iterable[int]) -> str:
    return " ".join(["verdict", name, *(str(n) for n in numbers)])


def format_witness(result: Union[Witness, Unreachable]) -> str:
    """One move per line followed by the verdict line."""
    if isinstance(result, Unreachable):
        return _verdict_line("Unreachable", [result.explored]) + "\n"
    lines = [format_move(m) for m in result.steps]
    lines.append(_verdict_line("Reached", [len(result.steps)]))
    return "\n".join(lines) + "\n"


def parse_witness(text: str) -> Witness:
    """Read back the moves of a witness file; the verdict line is ignored."""
    steps: List[Move] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line or line.startswith("verdict") or line.startswith("counterexample"):
            continue
        steps.append(parse_move(line, lineno))
    return Witness(tuple(steps))


def format_outcome(outcome: ZeroPlayerOutcome) -> str:
    lines = [format_move(m) for m in outcome.moves]
    lines.append(_verdict_line(verdict_name(outcome.verdict), outcome.verdict.numbers()))
    return "\n".join(lines) + "\n"


def format_counterexample(labels: Sequence[Tuple[str, str]]) -> str:
    lines = [f"counterexample {entry} {exit}" for entry, exit in labels]
    return "\n".join(lines) + ("\n" if lines else "")
