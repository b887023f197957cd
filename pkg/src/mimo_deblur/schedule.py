"""Step learning-rate schedule and named schedule presets."""

import math

from mimo_deblur.core.entities import TrainConfig
from mimo_deblur.core.errors import ConfigurationError

# name -> (epochs, lr_decay_every)
SCHEDULE_PRESETS: dict[str, tuple[int, int]] = {
    "gopro": (3000, 500),
    "realblur": (1000, 200),
}


def lr_at_epoch(epoch: int, config: TrainConfig) -> float:
    """``lr0 * factor ** floor(epoch / decay_every)``."""
    if epoch < 0:
        raise ConfigurationError(f"epoch must be >= 0, got {epoch}")
    return config.lr0 * config.lr_decay_factor ** (epoch // config.lr_decay_every)


def steps_per_epoch(corpus_size: int, config: TrainConfig) -> int:
    """One epoch is ceil(corpus / batch) steps unless the config pins it."""
    if config.steps_per_epoch is not None:
        return config.steps_per_epoch
    if corpus_size < 1:
        raise ConfigurationError("Cannot derive an epoch length from an empty corpus")
    return math.ceil(corpus_size / config.batch_size)


def total_steps(corpus_size: int, config: TrainConfig) -> int:
    planned = config.epochs * steps_per_epoch(corpus_size, config)
    if config.max_steps is not None:
        return min(planned, config.max_steps)
    return planned


def schedule_preset(name: str) -> dict:
    """TrainConfig overrides for a named schedule."""
    if name not in SCHEDULE_PRESETS:
        raise ConfigurationError(
            f"Unknown schedule {name!r}; expected one of {sorted(SCHEDULE_PRESETS)}"
        )
    epochs, decay_every = SCHEDULE_PRESETS[name]
    return {"epochs": epochs, "lr_decay_every": decay_every}
