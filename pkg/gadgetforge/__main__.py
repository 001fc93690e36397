from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from gadgetforge.blueprints import FinalGadget, Flavor, check_blueprint_geometry, shipped_blueprints
from gadgetforge.compiler import compile_one_player, compile_zero_player, format_manifest
from gadgetforge.config import ForgeConfig, create_example_config, load_config
from gadgetforge.equivalence import (
    ExternalInterface,
    check_equivalence,
    check_trace_equivalence,
    derive_gadget,
)
from gadgetforge.errors import (
    BranchingWire,
    DslSyntaxError,
    FlavorMismatch,
    GadgetForgeError,
    InitialStateUnsupported,
    InvalidState,
    LabelMismatch,
    LevelFormatError,
    MalformedGadget,
    UnknownKind,
    UnknownLocation,
    UnsupportedGadget,
)
from gadgetforge.gadgets import parse_gadget_spec
from gadgetforge.levels import format_level, parse_level
from gadgetforge.network import Mode, Network, parse_network, serialize_network, validate_network
from gadgetforge.sim import format_sim_trace, sim_run
from gadgetforge.solver import Cycle, Reached, Stuck, Witness, simulate_zero_player, solve_one_player
from gadgetforge.trace import format_counterexample, format_outcome, format_witness
from gadgetforge.transforms import (
    derive_diode,
    duplicate_open_port,
    insert_crossovers,
    make_initially_closed,
)
from gadgetforge.windings import schedule_kevin_windings

logger = logging.getLogger(__name__)

# Exit statuses are part of the command-line contract.
EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_UNREACHABLE = 10
EXIT_CYCLE = 11
EXIT_STUCK = 12
EXIT_INEQUIVALENT = 13
EXIT_TIMEOUT = 14

# Raised by malformed inputs rather than by the computation itself.
INPUT_ERRORS = (
    DslSyntaxError,
    UnknownKind,
    InvalidState,
    UnknownLocation,
    MalformedGadget,
    LevelFormatError,
    BranchingWire,
    FlavorMismatch,
    InitialStateUnsupported,
    LabelMismatch,
    UnsupportedGadget,
)


class InputFileError(GadgetForgeError):
    """An input path that cannot be read."""


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise InputFileError(f"cannot read {path}: {e.strerror or e}") from None


def _emit(text: str, path: Optional[str]) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(text, encoding="utf-8")
    logger.info("Wrote %s", target)


def _load_network(path: str) -> Network:
    return parse_network(_read(path))


def _pairs(value: str, sep: str) -> List[Tuple[str, str]]:
    pairs = []
    for item in value.split(","):
        item = item.strip()
        if not item:
            continue
        left, found, right = item.partition(sep)
        if not found or not left or not right:
            raise DslSyntaxError(f"expected 'a{sep}b', got {item!r}")
        pairs.append((left, right))
    return pairs


# =============================================================================
# COMMANDS
# =============================================================================

def cmd_solve(args: argparse.Namespace, config: ForgeConfig) -> int:
    network = _load_network(args.network)
    budget = args.budget if args.budget is not None else config.solver.configuration_budget
    result = solve_one_player(network, budget)
    _emit(format_witness(result), args.trace)
    if not isinstance(result, Witness):
        return EXIT_UNREACHABLE
    if args.windings is not None:
        schedule = schedule_kevin_windings(network, result, config.solver.winding_slack)
        lines = "".join(f"winding {step} {duration}\n" for step, duration in sorted(schedule.items()))
        _emit(lines, args.windings)
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace, config: ForgeConfig) -> int:
    max_steps = args.max_steps if args.max_steps is not None else config.solver.max_steps
    if args.input.endswith(".level"):
        outcome = sim_run(parse_level(_read(args.input)), max_steps, config.sim)
        text = format_sim_trace(outcome)
    else:
        outcome = simulate_zero_player(_load_network(args.input), max_steps)
        text = format_outcome(outcome)
    _emit(text, args.trace)

    verdict = outcome.verdict
    if isinstance(verdict, Reached):
        return EXIT_OK
    if isinstance(verdict, Cycle):
        return EXIT_CYCLE
    if isinstance(verdict, Stuck):
        return EXIT_STUCK
    return EXIT_TIMEOUT


def _interface(network: Network, labels: Sequence[str], option: Optional[str]) -> ExternalInterface:
    if option:
        return ExternalInterface.from_mapping(dict(_pairs(option, "=")))
    missing = [label for label in labels if label not in network.junctions]
    if missing:
        raise LabelMismatch(
            f"no junction named {', '.join(missing)}; pass --interface label=endpoint,..."
        )
    return ExternalInterface.from_mapping({label: label for label in labels})


def cmd_verify_gadget(args: argparse.Namespace, config: ForgeConfig) -> int:
    network = _load_network(args.network)
    reference = parse_gadget_spec(_read(args.against))
    interface = _interface(network, reference.location_names, args.interface)
    budget = args.budget if args.budget is not None else config.solver.configuration_budget
    candidate = derive_gadget(network, interface, name=Path(args.network).stem, budget=budget)

    verdict = check_equivalence(candidate, reference)
    traces = check_trace_equivalence(candidate, reference)
    if traces.equivalent != verdict.equivalent:
        logger.warning("Trace equivalence disagrees with bisimulation (traces: %s)", traces.equivalent)

    lines = format_counterexample(verdict.counterexample)
    name = "Equivalent" if verdict.equivalent else "Inequivalent"
    _emit(f"{lines}verdict {name} {len(verdict.counterexample)}\n", args.out)
    return EXIT_OK if verdict.equivalent else EXIT_INEQUIVALENT


def cmd_transform(args: argparse.Namespace, config: ForgeConfig) -> int:
    name = args.transform
    if name == "diode":
        network = derive_diode().network
    elif name == "duplicate-port":
        network = duplicate_open_port(args.door).network
    else:
        if args.network is None:
            raise InputFileError(f"transform {name} needs an input network")
        source = _load_network(args.network)
        if name == "crossovers":
            try:
                crossings = [(int(a), int(b)) for a, b in _pairs(args.crossings or "", ":")]
                network = insert_crossovers(source, crossings)
            except ValueError as e:
                raise DslSyntaxError(f"--crossings: {e}") from None
        else:
            result = make_initially_closed(source)
            network = insert_crossovers(result.network, result.crossings)
    _emit(serialize_network(network), args.out)
    return EXIT_OK


def cmd_compile(args: argparse.Namespace, config: ForgeConfig) -> int:
    network = _load_network(args.network)
    if Mode(args.mode) is Mode.ZERO_PLAYER:
        level = compile_zero_player(network, args.final, config.compiler)
    else:
        level = compile_one_player(network, args.flavor, config.compiler)
    _emit(format_level(level), args.out)

    manifest_path = args.manifest
    if manifest_path is None and args.out is not None:
        manifest_path = str(Path(args.out).with_suffix(".manifest"))
    if level.manifest is not None:
        _emit(format_manifest(level.manifest), manifest_path)
    return EXIT_OK


def cmd_check(args: argparse.Namespace, config: ForgeConfig) -> int:
    if args.network is not None:
        report = validate_network(_load_network(args.network), args.mode)
        payload: Dict[str, object] = {"network": args.network, **report.to_dict(), "clean": report.clean}
        clean = report.clean
    else:
        reports = [check_blueprint_geometry(bp) for bp in shipped_blueprints()]
        clean = all(r.passed for r in reports)
        payload = {"blueprints": [r.to_dict() for r in reports], "clean": clean}
    _emit(json.dumps(payload, indent=2) + "\n", args.out)
    return EXIT_OK if clean else EXIT_FAILURE


# =============================================================================
# ARGUMENTS
# =============================================================================

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gadgetforge")
    p.add_argument("--verbose", "-v", action="store_true", help="Log progress to stderr.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="Search a one-player network for a witness.")
    s.add_argument("network")
    s.add_argument("--budget", type=int, help="Configuration budget.")
    s.add_argument("--trace", "--out", dest="trace", help="Witness file (default: stdout).")
    s.add_argument("--windings", help="Also write Kevin winding durations to this file.")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("simulate", help="Run a zero-player network or a compiled .level file.")
    s.add_argument("input")
    s.add_argument("--max-steps", type=int)
    s.add_argument("--trace", "--out", dest="trace", help="Trace file (default: stdout).")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("verify-gadget", help="Check a network fragment against a reference gadget.")
    s.add_argument("network")
    s.add_argument("--against", required=True, help="Reference *.spec file.")
    s.add_argument("--interface", help="label=endpoint,... (default: junctions named like the labels).")
    s.add_argument("--budget", type=int)
    s.add_argument("--out")
    s.set_defaults(func=cmd_verify_gadget)

    s = sub.add_parser("transform", help="Rewrite a network.")
    s.add_argument("transform", choices=["initially-closed", "crossovers", "diode", "duplicate-port"])
    s.add_argument("network", nargs="?")
    s.add_argument("--door", default="door", help="Identifier prefix for duplicate-port.")
    s.add_argument("--crossings", help="Crossing edge pairs a:b,... for crossovers.")
    s.add_argument("--out")
    s.set_defaults(func=cmd_transform)

    s = sub.add_parser("compile", help="Compile a network into a level.")
    s.add_argument("network")
    s.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.ONE_PLAYER.value)
    s.add_argument("--flavor", choices=[f.value for f in Flavor], default=Flavor.SEEKER.value)
    s.add_argument("--final", choices=[f.value for f in FinalGadget], default=FinalGadget.AUTONOMOUS.value)
    s.add_argument("--out", help="Level file (default: stdout).")
    s.add_argument("--manifest", help="Port manifest (default: next to --out).")
    s.set_defaults(func=cmd_compile)

    s = sub.add_parser("check", help="Validate a network, or the shipped blueprints' geometry.")
    s.add_argument("network", nargs="?")
    s.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.ONE_PLAYER.value)
    s.add_argument("--out")
    s.set_defaults(func=cmd_check)

    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    create_example_config()
    config = load_config()
    command: Callable[[argparse.Namespace, ForgeConfig], int] = args.func

    try:
        return command(args, config)
    except (InputFileError, *INPUT_ERRORS) as e:
        print(f"gadgetforge {args.command}: {e}", file=sys.stderr)
        return EXIT_USAGE
    except GadgetForgeError as e:
        print(f"gadgetforge {args.command}: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
