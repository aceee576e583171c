"""
Service layer for system identification
"""

from __future__ import annotations

import logging
from collections.abc import Sequence
from pathlib import Path

from kinonav.core.exceptions import UsageError
from kinonav.motion.sysid import DEFAULT_WINDOW, IdentifiedModel, TrajectoryLog, adjust_damping, identify

logger = logging.getLogger(__name__)


def identify_from_files(
    log_paths: Sequence[Path],
    output: Path,
    window: int = DEFAULT_WINDOW,
    zeta_target: float | None = None,
) -> IdentifiedModel:
    """
    Identify a model from CSV logs and write the model file
    :param log_paths: the recorded logs
    :param output: the model file to write
    :param window: smoothing window in samples
    :param zeta_target: when given, every damping is set to it with frequencies matched on rise time
    :return: the written model
    """
    if not log_paths:
        raise UsageError("At least one log file is required")
    logs = [TrajectoryLog.read_csv(path) for path in log_paths]
    model = identify(logs, window)
    if zeta_target is not None:
        model = adjust_damping(model, zeta_target)
    for regime in sorted(model.residuals):
        logger.info(
            "%s: residual %.6g over %s samples",
            regime,
            model.residuals[regime],
            model.sample_counts.get(regime, 0),
        )
    model.write(output)
    logger.info("Model written to %s", output)
    return model
