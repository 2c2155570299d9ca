"""Joint estimation, control, and scheduling for wireless control loops.

The package trains a recurrent state estimator, an actor-critic
controller, and a value-guided transmission scheduler against Markov
fading channels, with age-of-information aware experience replay.
"""

from wncs.channel import (FAST_SWITCHING, MarkovChannel, SLOW_SWITCHING,
                          static_channel, stationary_distribution)
from wncs.config import (ChannelConfig, ConfigError, ExperimentConfig,
                         PlantConfig, apply_preset, load_config, make_channel,
                         make_plant, parse_config, serialize_config)
from wncs.controller import Td3Controller, expected_reward
from wncs.estimator import StateEstimator
from wncs.plants import LinearPlant, PendulumPlant, lq_oracle
from wncs.replay import RankedBuffer, ranking_value
from wncs.scheduler import DqnScheduler
from wncs.seeding import stream
from wncs.trainer import (CodesignRunner, METRICS_COLUMNS, format_metrics_row,
                          run_high_mobility, run_low_mobility)

__version__ = "0.1.0"

__all__ = [
    "ChannelConfig",
    "CodesignRunner",
    "ConfigError",
    "DqnScheduler",
    "ExperimentConfig",
    "FAST_SWITCHING",
    "LinearPlant",
    "MarkovChannel",
    "METRICS_COLUMNS",
    "PendulumPlant",
    "PlantConfig",
    "RankedBuffer",
    "SLOW_SWITCHING",
    "StateEstimator",
    "Td3Controller",
    "apply_preset",
    "expected_reward",
    "format_metrics_row",
    "load_config",
    "lq_oracle",
    "make_channel",
    "make_plant",
    "parse_config",
    "ranking_value",
    "run_high_mobility",
    "run_low_mobility",
    "serialize_config",
    "static_channel",
    "stationary_distribution",
    "stream",
    "__version__",
]
