from __future__ import annotations

import json

import pytest

from gadgetforge.__main__ import (
    EXIT_CYCLE,
    EXIT_OK,
    EXIT_STUCK,
    EXIT_TIMEOUT,
    EXIT_UNREACHABLE,
    EXIT_USAGE,
    main,
)
from gadgetforge.config import ForgeConfig, get_config_file, save_config


def _run(capsys, *argv: str):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_solve_door_chain(capsys, corpus):
    code, out, _ = _run(capsys, "solve", str(corpus / "door-chain.net"))
    assert code == EXIT_OK
    assert out == (
        "traverse d open_in open_out\n"
        "wire e0\n"
        "traverse d traverse_in traverse_out\n"
        "verdict Reached 3\n"
    )


def test_solve_locked_door(capsys, corpus):
    code, out, _ = _run(capsys, "solve", str(corpus / "locked-door.net"))
    assert code == EXIT_UNREACHABLE
    assert out.startswith("verdict Unreachable ")


def test_solve_writes_the_trace_file(capsys, corpus, tmp_path):
    target = tmp_path / "out" / "door.trace"
    code, out, _ = _run(capsys, "solve", str(corpus / "door-chain.net"), "--trace", str(target))
    assert code == EXIT_OK
    assert out == ""
    assert target.read_text(encoding="utf-8").endswith("verdict Reached 3\n")


@pytest.mark.parametrize(
    "name,code,verdict",
    [
        ("toggler.net", EXIT_CYCLE, "verdict Cycle 4 6"),
        ("dead-end.net", EXIT_STUCK, "verdict Stuck 2"),
    ],
)
def test_simulate_verdicts(capsys, corpus, name, code, verdict):
    status, out, _ = _run(capsys, "simulate", str(corpus / name))
    assert status == code
    assert out.splitlines()[-1] == verdict


@pytest.mark.parametrize("name", ["one-switch.net", "two-switch.net"])
def test_simulate_reaches_the_goal(capsys, corpus, name):
    code, out, _ = _run(capsys, "simulate", str(corpus / name))
    assert code == EXIT_OK
    assert out.splitlines()[-1].startswith("verdict Reached ")


def test_simulate_timeout_uses_the_configured_step_limit(capsys, corpus):
    config = ForgeConfig()
    config.solver.max_steps = 1
    save_config(config)
    code, out, _ = _run(capsys, "simulate", str(corpus / "toggler.net"))
    assert code == EXIT_TIMEOUT
    assert out.splitlines()[-1] == "verdict Timeout 1"


def test_compile_then_simulate_the_level(capsys, corpus, tmp_path):
    level = tmp_path / "one.level"
    code, _, _ = _run(capsys, "compile", str(corpus / "one-switch.net"), "--mode", "zero-player", "--out", str(level))
    assert code == EXIT_OK
    assert level.read_text(encoding="utf-8").startswith("level ")
    manifest = tmp_path / "one.manifest"
    assert manifest.read_text(encoding="utf-8").startswith("manifest zero-player\n")

    code, out, _ = _run(capsys, "simulate", str(level))
    assert code == EXIT_OK
    assert out.splitlines()[-1].startswith("verdict Reached ")


def test_compile_is_deterministic(capsys, corpus):
    args = ("compile", str(corpus / "open-doors.net"), "--flavor", "jelly")
    _, first, _ = _run(capsys, *args)
    _, second, _ = _run(capsys, *args)
    assert first == second
    assert first.startswith("level ")


def test_compile_flavor_mismatch(capsys, corpus):
    code, out, err = _run(capsys, "compile", str(corpus / "door-chain.net"), "--flavor", "jelly")
    assert code == EXIT_USAGE
    assert out == ""
    assert err.startswith("gadgetforge compile: ")


def test_verify_three_door_port(capsys, corpus):
    code, out, _ = _run(
        capsys, "verify-gadget", str(corpus / "three-door-port.net"), "--against", str(corpus / "dual-open-door.spec")
    )
    assert code == EXIT_OK
    assert out == "verdict Equivalent 0\n"


def test_verify_needs_matching_junctions(capsys, corpus):
    code, _, err = _run(
        capsys, "verify-gadget", str(corpus / "door-chain.net"), "--against", str(corpus / "dual-open-door.spec")
    )
    assert code == EXIT_USAGE
    assert "--interface" in err


def test_missing_input_is_a_usage_error(capsys, tmp_path):
    code, _, err = _run(capsys, "solve", str(tmp_path / "nope.net"))
    assert code == EXIT_USAGE
    assert "cannot read" in err


def test_malformed_network_is_a_usage_error(capsys, tmp_path):
    path = tmp_path / "bad.net"
    path.write_text("gadget d kind=Nonsense init=closed\n", encoding="utf-8")
    code, _, _ = _run(capsys, "solve", str(path))
    assert code == EXIT_USAGE


def test_transform_diode(capsys):
    code, out, _ = _run(capsys, "transform", "diode")
    assert code == EXIT_OK
    assert out.startswith("gadget d kind=SelfClosingOpenOptional init=closed\n")
    assert out.endswith("goal d.selfclose_out\n")


def test_transform_initially_closed(capsys, corpus):
    code, out, _ = _run(capsys, "transform", "initially-closed", str(corpus / "open-doors.net"))
    assert code == EXIT_OK
    assert "init=open" not in out
    assert "entry_diode" in out


def test_transform_arguments(capsys, corpus):
    code, _, err = _run(capsys, "transform", "initially-closed")
    assert code == EXIT_USAGE
    assert "needs an input network" in err
    code, _, _ = _run(capsys, "transform", "crossovers", str(corpus / "door-chain.net"), "--crossings", "0-1")
    assert code == EXIT_USAGE


def test_check_blueprints(capsys):
    code, out, _ = _run(capsys, "check")
    assert code == EXIT_OK
    payload = json.loads(out)
    assert payload["clean"] is True
    assert payload["blueprints"]


def test_check_network(capsys, corpus):
    _, out, _ = _run(capsys, "check", str(corpus / "toggler.net"), "--mode", "zero-player")
    payload = json.loads(out)
    assert payload["network"].endswith("toggler.net")
    assert "clean" in payload


def test_first_run_writes_the_config_template(capsys, corpus):
    assert not get_config_file().exists()
    _run(capsys, "solve", str(corpus / "door-chain.net"))
    assert get_config_file().exists()
