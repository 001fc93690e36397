from __future__ import annotations

from pathlib import Path

import pytest

from gadgetforge.network import Network, parse_network
from gadgetforge.paths import get_corpus_dir


@pytest.fixture(autouse=True)
def isolated_home(tmp_path: Path, monkeypatch: pytest.MonkeyPatch) -> Path:
    """Keep every test away from the user's config.json."""
    home = tmp_path / "home"
    monkeypatch.setenv("GADGETFORGE_HOME", str(home))
    return home


@pytest.fixture
def corpus() -> Path:
    return get_corpus_dir()


def corpus_network(name: str) -> Network:
    return parse_network((get_corpus_dir() / name).read_text(encoding="utf-8"))


@pytest.fixture
def load_corpus():
    return corpus_network
