from __future__ import annotations

import numpy as np
import pytest

from gadgetforge.errors import LevelFormatError
from gadgetforge.levels import (
    Entity,
    Level,
    MovementEnvelope,
    Tile,
    count_kinds,
    format_level,
    glyph_grid,
    parse_level,
)

SMALL = """\
level 5 3
#####
#.*.#
#####
entity madeline 1 1
entity goal 3 1
entity moveblock-right 2 1 id=m0 track=2
"""


def test_parse_small_level():
    level = parse_level(SMALL)
    assert (level.width, level.height, level.size) == (5, 3, 5)
    assert level.tiles[1, 2] == Tile.SPINNER
    assert level.is_solid(0, 0)
    assert not level.is_solid(1, 1)
    assert level.is_solid(-1, 1) and level.is_solid(5, 1)
    assert level.madeline_start == (1, 1)
    assert level.goal == (3, 1)
    block = level.entities_of("moveblock-right")[0]
    assert block.param("id") == "m0"
    assert block.param("track") == "2"
    assert block.param("missing") is None


def test_format_is_stable():
    assert format_level(parse_level(SMALL)) == SMALL


def test_blank_lines_are_ignored():
    spaced = SMALL.replace("#####\n#.*", "#####\n\n#.*")
    assert format_level(parse_level(spaced)) == SMALL


def test_filled_level_and_entities():
    level = Level.filled(3, 2)
    assert level.tiles.shape == (2, 3)
    assert np.all(level.tiles == Tile.SOLID)
    level.entities.append(Entity("jellyfish", 1, 0))
    level.entities.append(Entity("jellyfish", 2, 1).moved(-1, 0))
    assert count_kinds(level.entities) == {"jellyfish": 2}
    assert level.entities[1].cell == (1, 1)
    assert level.madeline_start is None


def test_header_must_match_grid():
    with pytest.raises(LevelFormatError):
        Level(4, 2, glyph_grid(["###", "###"]))


@pytest.mark.parametrize(
    "text",
    [
        "",
        "map 2 2\n##\n##\n",
        "level two 2\n##\n##\n",
        "level 0 2\n",
        "level 2 2\n##\n",
        "level 2 2\n##\n#\n",
        "level 2 2\n##\n#?\n",
        "level 2 1\n..\nthing 0 0\n",
        "level 2 1\n..\nentity dragon 0 0\n",
        "level 2 1\n..\nentity goal 2 0\n",
        "level 2 1\n..\nentity goal 0\n",
        "level 2 1\n..\nentity goal 0 0 broken\n",
    ],
)
def test_malformed_levels(text):
    with pytest.raises(LevelFormatError):
        parse_level(text)


def test_error_names_the_line():
    with pytest.raises(LevelFormatError, match="line 3"):
        parse_level("level 2 2\n##\n#\n")


def test_default_envelope():
    envelope = MovementEnvelope()
    assert envelope.glide_ratio == pytest.approx(0.563)
    assert envelope.dash_diag_vertical < envelope.dash_diag_horizontal < envelope.dash_horizontal


@pytest.mark.parametrize(
    "overrides",
    [
        {"glide_ratio": 0.0},
        {"dash_horizontal": -1.0},
        {"jelly_glide_ratio": 0.5},
    ],
)
def test_envelope_validation(overrides):
    with pytest.raises(ValueError):
        MovementEnvelope(**overrides)
