"""
Script to generate synthetic velocity logs for a development environment or an identification fixture
"""

import logging
import os
import sys
from pathlib import Path

from kinonav.core.model import DEFAULT_PARAMS
from kinonav.core.utility import derive_rng
from kinonav.motion.sysid import step_script, synthesize_logs

logging.basicConfig(
    handlers=[logging.StreamHandler(stream=sys.stdout)],
    format="[%(asctime)s]-%(name)s-%(levelname)s: %(message)s",
    level=logging.INFO,
)
logger = logging.getLogger(__name__)

LOG_DIR = Path(os.environ.get("LOG_DIR", "logs"))
LOG_COUNT = int(os.environ.get("LOG_COUNT", "4"))
LOG_SEED = int(os.environ.get("LOG_SEED", "1"))
LOG_NOISE = float(os.environ.get("LOG_NOISE", "0.0"))


def main() -> None:
    rng = derive_rng(LOG_SEED, "log-generator")
    # The first script visits the actions in table order so every regime is covered at least once
    scripts = [step_script(), *(step_script(rng) for _ in range(LOG_COUNT - 1))]
    logs = synthesize_logs(scripts, DEFAULT_PARAMS, noise_std=LOG_NOISE, rng=rng if LOG_NOISE > 0 else None)
    LOG_DIR.mkdir(parents=True, exist_ok=True)
    for index, log in enumerate(logs):
        path = LOG_DIR / f"log-{index:03d}.csv"
        log.write_csv(path)
        logger.info("Wrote %d samples to %s", len(log), path)


if __name__ == "__main__":
    main()
