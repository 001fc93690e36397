from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

from gadgetforge.paths import get_data_dir

logger = logging.getLogger(__name__)


# =============================================================================
# SIMULATION CONSTANTS
# =============================================================================
# Calibrated so that every shipped zero-player stamp produces its intended
# event sequence. They are tile/tick units of the discrete model and are not
# measurements of the game.
# =============================================================================

@dataclass
class SimConstants:
    gravity: int = 1
    terminal_fall: int = 1
    spring_side_speed: int = 1
    spring_side_lift: int = 1
    spring_up_launch: int = 1
    respawn_delay: int = 3
    kevin_charge_speed: int = 4
    kevin_return_speed: int = 1

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SolverSettings:
    configuration_budget: int = 2_000_000
    max_steps: int = 100_000
    winding_slack: int = 1

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class CompilerSettings:
    # Documented constant c of the bound M <= c * (instances + edges) * stamp_side.
    layout_constant: int = 4
    stamp_gap: int = 3

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ForgeConfig:
    """Top-level configuration."""
    sim: SimConstants = field(default_factory=SimConstants)
    solver: SolverSettings = field(default_factory=SolverSettings)
    compiler: CompilerSettings = field(default_factory=CompilerSettings)

    def to_dict(self) -> dict:
        return {
            "sim": self.sim.to_dict(),
            "solver": self.solver.to_dict(),
            "compiler": self.compiler.to_dict(),
        }


def get_config_file() -> Path:
    """Get path to configuration file."""
    return get_data_dir() / "config.json"


def _merge(section: object, values: dict) -> None:
    for key, value in values.items():
        if not hasattr(section, key):
            logger.warning("Ignoring unknown config key: %s", key)
            continue
        setattr(section, key, int(value))


def load_config() -> ForgeConfig:
    """Load configuration from file, with built-in defaults as fallback.

    Priority: User config file > Defaults
    """
    config = ForgeConfig()
    config_file = get_config_file()

    if config_file.exists():
        try:
            with open(config_file, "r", encoding="utf-8") as f:
                data = json.load(f)

            _merge(config.sim, data.get("sim", {}))
            _merge(config.solver, data.get("solver", {}))
            _merge(config.compiler, data.get("compiler", {}))

        except Exception as e:
            logger.error("Error loading config: %s", e)
            return ForgeConfig()

    return config


def save_config(config: ForgeConfig) -> None:
    """Save configuration to file."""
    config_file = get_config_file()
    config_file.parent.mkdir(parents=True, exist_ok=True)

    try:
        with open(config_file, "w", encoding="utf-8") as f:
            json.dump(config.to_dict(), f, indent=2)
    except Exception as e:
        logger.error("Error saving config: %s", e)


def create_example_config() -> None:
    """Create an example configuration file if none exists."""
    config_file = get_config_file()

    if config_file.exists():
        return

    save_config(ForgeConfig())
    logger.info("Created example config at: %s", config_file)
