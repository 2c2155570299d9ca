"""Experiment configuration: defaults, TOML parsing, presets, validation.

An empty config file is valid and yields the default hyperparameters with a
scalar linear plant over static 10%/10% channels. Transition matrices are
row-stochastic (row = from-state); sources quoting the column-stochastic
layout must be transposed when writing a config.
"""

from __future__ import annotations

import dataclasses
import re
from dataclasses import dataclass, field

import tomli

from .channel import SLOW_SWITCHING, FAST_SWITCHING, MarkovChannel
from .plants import LinearPlant, PendulumPlant

REPLAY_MODES = ("hybrid-aoi", "hybrid-uniform", "mf-uniform")
SCHEDULER_MODES = ("q-value", "reward", "none")
WEIGHT_MODES = ("max", "raw")
PLANT_KINDS = ("linear", "pendulum")


class ConfigError(ValueError):
    pass


@dataclass
class ChannelConfig:
    transition: list = field(default_factory=lambda: [[1.0]])
    drop: list = field(default_factory=lambda: [0.1])


@dataclass
class PlantConfig:
    kind: str = "linear"
    params: dict = field(default_factory=dict)


@dataclass
class ExperimentConfig:
    mode: str = "low"
    scenario: str = "custom"
    plant: PlantConfig = field(default_factory=PlantConfig)
    uplink: ChannelConfig = field(default_factory=ChannelConfig)
    downlink: ChannelConfig = field(default_factory=ChannelConfig)

    gamma: float = 0.99
    tau: float = 0.005
    n_target: int = 2
    n_hard_target: int = 100
    history_len: int = 3
    alpha: float = 1.0

    controller_buffer: int = 100_000
    estimator_buffer: int = 100_000
    scheduler_buffer: int = 100_000
    batch_controller: int = 100
    batch_estimator: int = 100
    batch_scheduler: int = 100
    n_sort: int = 0  # 0 -> controller buffer capacity

    lr_estimator: float = 1e-3
    lr_actor: float = 3e-4
    lr_critic: float = 3e-4
    lr_scheduler: float = 3e-4
    expl_std: float = 0.1
    epsilon: float = 0.1
    hidden_dim: int = 128

    total_steps: int = 100_000
    episode_len: int = 500
    eval_every: int = 5000
    eval_episodes: int = 10
    pretrain_frac: float = 0.2
    tx_cost: float = 5.0
    aoi_cap: int = 20

    replay_mode: str = "hybrid-aoi"
    scheduler_mode: str = "q-value"
    weight_mode: str = "max"
    strict_estimator_pairs: bool = False
    literal_targets: bool = False
    policy_noise: float = 0.0
    noise_clip: float = 0.0
    trace: bool = False


_SCALAR_FIELDS = {
    f.name: f.type for f in dataclasses.fields(ExperimentConfig)
    if f.name not in ("plant", "uplink", "downlink")
}

_PLANT_PARAM_FIELDS = {
    "linear": {f.name for f in dataclasses.fields(LinearPlant) if f.init},
    "pendulum": {f.name for f in dataclasses.fields(PendulumPlant) if f.init},
}


def _find_line(text: str, key: str) -> int | None:
    pattern = re.compile(rf"^\s*{re.escape(key)}\s*=")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if pattern.match(line):
            return lineno
    return None


def _key_error(text: str, key: str, why: str) -> ConfigError:
    line = _find_line(text, key.split(".")[-1])
    where = f" (line {line})" if line is not None else ""
    return ConfigError(f"config key {key!r}{where}: {why}")


def parse_config(text: str,
                 base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Parse TOML text onto `base` (or the defaults) and validate."""
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML: {exc}") from exc
    cfg = dataclasses.replace(base) if base is not None \
        else ExperimentConfig()
    cfg.plant = dataclasses.replace(cfg.plant,
                                    params=dict(cfg.plant.params))
    cfg.uplink = dataclasses.replace(cfg.uplink)
    cfg.downlink = dataclasses.replace(cfg.downlink)

    for key, value in data.items():
        if key == "plant":
            if not isinstance(value, dict):
                raise _key_error(text, key, "must be a table")
            params = dict(cfg.plant.params)
            kind = cfg.plant.kind
            for pkey, pval in value.items():
                if pkey == "kind":
                    kind = pval
                else:
                    params[pkey] = pval
            cfg.plant = PlantConfig(kind=kind, params=params)
        elif key in ("uplink", "downlink"):
            if not isinstance(value, dict):
                raise _key_error(text, key, "must be a table")
            ch = ChannelConfig()
            for ckey, cval in value.items():
                if ckey == "transition":
                    ch.transition = cval
                elif ckey == "drop":
                    ch.drop = cval
                else:
                    raise _key_error(text, f"{key}.{ckey}", "unknown key")
            setattr(cfg, key, ch)
        elif key in _SCALAR_FIELDS:
            default = getattr(ExperimentConfig(), key)
            if isinstance(default, bool):
                ok = isinstance(value, bool)
            elif isinstance(default, int):
                ok = isinstance(value, int) and not isinstance(value, bool)
            elif isinstance(default, float):
                ok = isinstance(value, (int, float)) \
                    and not isinstance(value, bool)
                if ok:
                    value = float(value)
            else:
                ok = isinstance(value, str)
            if not ok:
                raise _key_error(text, key,
                                 f"expected {type(default).__name__}, got "
                                 f"{type(value).__name__}")
            setattr(cfg, key, value)
        else:
            raise _key_error(text, key, "unknown key")
    validate_config(cfg, text=text)
    return cfg


def load_config(path, base: ExperimentConfig | None = None):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), base=base)


def _check_range(text, key, value, lo=None, hi=None, lo_open=False,
                 hi_open=False):
    bad = False
    if lo is not None:
        bad |= value <= lo if lo_open else value < lo
    if hi is not None:
        bad |= value >= hi if hi_open else value > hi
    if bad:
        lo_b = "(" if lo_open else "["
        hi_b = ")" if hi_open else "]"
        raise _key_error(text, key,
                         f"value {value} outside {lo_b}{lo}, {hi}{hi_b}")


def validate_config(cfg: ExperimentConfig, text: str = ""):
    if cfg.mode not in ("low", "high"):
        raise _key_error(text, "mode", f"must be 'low' or 'high', got "
                         f"{cfg.mode!r}")
    _check_range(text, "gamma", cfg.gamma, 0.0, 1.0, hi_open=True)
    _check_range(text, "tau", cfg.tau, 0.0, 1.0, lo_open=True)
    _check_range(text, "alpha", cfg.alpha, 0.0, 1.0, lo_open=True)
    _check_range(text, "epsilon", cfg.epsilon, 0.0, 1.0)
    _check_range(text, "pretrain_frac", cfg.pretrain_frac, 0.0, 1.0,
                 hi_open=True)
    _check_range(text, "expl_std", cfg.expl_std, 0.0, None)
    _check_range(text, "tx_cost", cfg.tx_cost, 0.0, None)
    _check_range(text, "policy_noise", cfg.policy_noise, 0.0, None)
    _check_range(text, "noise_clip", cfg.noise_clip, 0.0, None)
    _check_range(text, "n_sort", cfg.n_sort, 0, None)
    for key in ("n_target", "n_hard_target", "history_len",
                "controller_buffer", "estimator_buffer", "scheduler_buffer",
                "batch_controller", "batch_estimator", "batch_scheduler",
                "hidden_dim", "total_steps", "episode_len", "eval_every",
                "eval_episodes", "aoi_cap"):
        value = getattr(cfg, key)
        if not isinstance(value, int) or value <= 0:
            raise _key_error(text, key, f"must be a positive integer, got "
                             f"{value!r}")
    for key in ("lr_estimator", "lr_actor", "lr_critic", "lr_scheduler"):
        if getattr(cfg, key) <= 0:
            raise _key_error(text, key, "learning rate must be positive")
    if cfg.replay_mode not in REPLAY_MODES:
        raise _key_error(text, "replay_mode",
                         f"must be one of {REPLAY_MODES}")
    if cfg.scheduler_mode not in SCHEDULER_MODES:
        raise _key_error(text, "scheduler_mode",
                         f"must be one of {SCHEDULER_MODES}")
    if cfg.weight_mode not in WEIGHT_MODES:
        raise _key_error(text, "weight_mode", f"must be one of "
                         f"{WEIGHT_MODES}")
    if cfg.mode == "high" and cfg.replay_mode == "mf-uniform" \
            and cfg.scheduler_mode != "none":
        raise ConfigError("a learned scheduler needs the estimator: "
                          "mf-uniform replay requires scheduler_mode 'none'")
    if cfg.plant.kind not in PLANT_KINDS:
        raise _key_error(text, "kind",
                         f"unknown plant kind {cfg.plant.kind!r}; expected "
                         f"one of {PLANT_KINDS}")
    allowed = _PLANT_PARAM_FIELDS[cfg.plant.kind]
    for pkey, pval in cfg.plant.params.items():
        if pkey not in allowed:
            raise _key_error(text, f"plant.{pkey}",
                             f"unknown parameter for {cfg.plant.kind} plant")
        if not isinstance(pval, (int, float)) or isinstance(pval, bool):
            raise _key_error(text, f"plant.{pkey}", "must be a number")
    for name in ("uplink", "downlink"):
        ch = getattr(cfg, name)
        try:
            MarkovChannel(ch.transition, ch.drop)
        except ValueError as exc:
            raise _key_error(text, name, str(exc)) from exc


def make_plant(plant_cfg: PlantConfig):
    cls = {"linear": LinearPlant, "pendulum": PendulumPlant}[plant_cfg.kind]
    return cls(**plant_cfg.params)


def make_channel(ch_cfg: ChannelConfig) -> MarkovChannel:
    return MarkovChannel(ch_cfg.transition, ch_cfg.drop)


def _fmt_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return f'"{value}"'
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_fmt_value(v) for v in value) + "]"
    raise TypeError(f"cannot serialize {value!r}")


def serialize_config(cfg: ExperimentConfig) -> str:
    """Emit TOML that parses back to an equal config."""
    lines = []
    for name in _SCALAR_FIELDS:
        lines.append(f"{name} = {_fmt_value(getattr(cfg, name))}")
    lines.append("")
    lines.append("[plant]")
    lines.append(f'kind = "{cfg.plant.kind}"')
    for pkey in sorted(cfg.plant.params):
        lines.append(f"{pkey} = {_fmt_value(cfg.plant.params[pkey])}")
    for name in ("uplink", "downlink"):
        ch = getattr(cfg, name)
        lines.append("")
        lines.append(f"[{name}]")
        lines.append(f"transition = {_fmt_value(ch.transition)}")
        lines.append(f"drop = {_fmt_value(ch.drop)}")
    return "\n".join(lines) + "\n"


def _static(drop_up, drop_dn, sigma, extra=None):
    preset = {
        "mode": "low",
        "uplink": ChannelConfig([[1.0]], [drop_up]),
        "downlink": ChannelConfig([[1.0]], [drop_dn]),
        "plant_noise": sigma,
    }
    if extra:
        preset.update(extra)
    return preset


def _fading(matrix, tx_cost):
    chans = ChannelConfig([list(map(float, row)) for row in matrix],
                          [0.05, 0.10])
    return {
        "mode": "high",
        "uplink": chans,
        "downlink": dataclasses.replace(chans),
        "plant_noise": 0.01,
        "tx_cost": tx_cost,
    }


PRESETS = {
    "scenario-1": _static(0.10, 0.10, 0.01),
    "scenario-2": _static(0.10, 0.05, 0.01),
    "scenario-3": _static(0.05, 0.10, 0.01),
    "scenario-4": _static(0.10, 0.00, 0.01),
    "scenario-5": _static(0.00, 0.10, 0.01),
    "scenario-6": _static(0.10, 0.05, 0.05),
    "scenario-7": _fading(SLOW_SWITCHING, 5.0),
    "scenario-8": _fading(FAST_SWITCHING, 5.0),
    "scenario-9": _fading(SLOW_SWITCHING, 10.0),
    "scenario-10": _fading(FAST_SWITCHING, 10.0),
}


def _copy_channel(ch: ChannelConfig) -> ChannelConfig:
    return ChannelConfig([list(row) for row in ch.transition],
                         list(ch.drop))


def apply_preset(cfg: ExperimentConfig, name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; expected one of "
                          f"{sorted(PRESETS)}")
    preset = PRESETS[name]
    cfg = dataclasses.replace(cfg)
    cfg.scenario = name
    cfg.mode = preset["mode"]
    cfg.uplink = _copy_channel(preset["uplink"])
    cfg.downlink = _copy_channel(preset["downlink"])
    params = dict(cfg.plant.params)
    params["noise_std"] = preset["plant_noise"]
    cfg.plant = PlantConfig(kind=cfg.plant.kind, params=params)
    if "tx_cost" in preset:
        cfg.tx_cost = preset["tx_cost"]
    return cfg
