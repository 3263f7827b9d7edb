"""Plain-text `key = value` run configuration.

Covers every architectural, optimizer, and loss-weight field plus the
training-loop knobs.  Unknown keys are rejected outright so typos fail
fast instead of silently training the wrong model.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

from .losses import LossWeights
from .networks import ModelConfig
from .optim import OptimizerConfig
from .tensor import ConfigurationError

_MODEL_KEYS = {f.name: f.type for f in fields(ModelConfig)}

_OPTIM_KEYS = ("lr", "beta1", "beta2", "eps")

_TRAIN_KEYS = ("batch_size", "epochs", "checkpoint_every", "seed")

_INT_KEYS = {"input_size", "base_channels", "stage1_channels", "stage2_channels",
             "n_fcm_stage1", "n_fcm_stage2", "batch_size", "epochs",
             "checkpoint_every", "seed"}
_STR_KEYS = {"dtype"}


@dataclass
class RunConfig:
    model: ModelConfig
    optim: OptimizerConfig
    batch_size: int = 8
    epochs: int = 10
    checkpoint_every: int = 500
    seed: int = 0

    @property
    def loss_weights(self) -> LossWeights:
        return LossWeights(self.model.loss_lambda, self.model.loss_alpha)


def _parse_lines(lines) -> dict:
    values: dict = {}
    known = set(_MODEL_KEYS) | set(_OPTIM_KEYS) | set(_TRAIN_KEYS)
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"config line {lineno}: expected key = value, got {raw!r}")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key not in known:
            raise ConfigurationError(f"config line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigurationError(f"config line {lineno}: duplicate key {key!r}")
        try:
            if key in _STR_KEYS:
                values[key] = val
            elif key in _INT_KEYS:
                values[key] = int(val)
            else:
                values[key] = float(val)
        except ValueError as exc:
            raise ConfigurationError(
                f"config line {lineno}: bad value for {key!r}: {val!r}") from exc
    return values


def parse_run_config_lines(lines) -> RunConfig:
    values = _parse_lines(lines)
    model_kwargs = {k: v for k, v in values.items() if k in _MODEL_KEYS}
    optim_kwargs = {k: v for k, v in values.items() if k in _OPTIM_KEYS}
    train_kwargs = {k: v for k, v in values.items() if k in _TRAIN_KEYS}
    return RunConfig(model=ModelConfig(**model_kwargs),
                     optim=OptimizerConfig(**optim_kwargs),
                     **train_kwargs)


def parse_model_config_lines(lines) -> ModelConfig:
    values = _parse_lines(lines)
    model_kwargs = {k: v for k, v in values.items() if k in _MODEL_KEYS}
    return ModelConfig(**model_kwargs)


def load_run_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_run_config_lines(fh.readlines())
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc


def run_config_text(cfg: RunConfig) -> str:
    lines = [f"{f.name} = {getattr(cfg.model, f.name)}" for f in fields(ModelConfig)]
    lines += [f"{k} = {getattr(cfg.optim, k)}" for k in _OPTIM_KEYS]
    lines += [f"{k} = {getattr(cfg, k)}" for k in _TRAIN_KEYS]
    return "\n".join(lines) + "\n"
