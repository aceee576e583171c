"""
Run configuration: the seed, the typed configuration sections and the key-value override file that adjusts them.

An override file holds ``section.field = value`` lines. Sections are ``physics``, ``sim``, ``mpc``, ``odom`` and
``absloc``; values are read as JSON literals when possible and the merged sections are validated again.
"""

from __future__ import annotations

import logging
import os
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, ValidationError

from kinonav.core.exceptions import UsageError
from kinonav.core.utility import parse_literal, read_key_value_file
from kinonav.navigation.simulator import SimConfig
from kinonav.policies.policy import MpcConfig

logger = logging.getLogger(__name__)

LOG_LEVEL = os.environ.get("KINONAV_LOG_LEVEL", "INFO")
SECTIONS = ("physics", "sim", "mpc", "odom", "absloc")


class RunConfig(BaseModel):
    """Everything a subcommand run depends on besides its input files"""

    model_config = ConfigDict(frozen=True)

    seed: int = 0
    sim: SimConfig = SimConfig()
    mpc: MpcConfig = MpcConfig()

    @staticmethod
    def from_overrides(values: dict[str, str], seed: int = 0, source: str = "config") -> RunConfig:
        """
        Apply a parsed override document to the default configuration
        :param values: mapping from ``section.field`` to raw values
        :param seed: the master seed
        :param source: name used in error messages
        :return: the validated configuration
        :raises UsageError: on unknown sections or invalid values
        """
        sections: dict[str, dict[str, Any]] = {section: {} for section in SECTIONS}
        for name, raw in values.items():
            section, _, key = name.partition(".")
            if section not in sections or not key:
                raise UsageError(f"{source}: unknown configuration key {name}")
            sections[section][key] = parse_literal(raw)
        sim = sections["sim"]
        for nested in ("physics", "odom", "absloc"):
            if sections[nested]:
                sim[nested] = sections[nested]
        try:
            return RunConfig.model_validate({"seed": seed, "sim": sim, "mpc": sections["mpc"]})
        except ValidationError as exc:
            error = exc.errors()[0]
            location = ".".join(str(part) for part in error["loc"])
            raise UsageError(f"{source}: invalid value for {location}: {error['msg']}") from exc

    @staticmethod
    def load(path: Path | None, seed: int = 0) -> RunConfig:
        if path is None:
            return RunConfig(seed=seed)
        logger.info("Reading configuration overrides from %s", path)
        return RunConfig.from_overrides(read_key_value_file(path), seed, str(path))
