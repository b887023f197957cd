"""Core domain entities."""

import math
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Optional

import numpy as np

from mimo_deblur.core.errors import ConfigurationError, InputError
from mimo_deblur.core.tensor import Tensor

LEVELS = 3


class FusionMode(str, Enum):
    """How strided encoder features are merged with shallow image features."""

    FAM = "fam"
    CONCAT = "concat"
    SUM = "sum"


class Split(str, Enum):
    TRAIN = "train"
    TEST = "test"


@dataclass(frozen=True)
class ModelConfig:
    """Architecture hyperparameters.

    Level widths are ``base_channels``, 2x and 4x that. The three-level
    topology is fixed.
    """

    base_channels: int = 32
    num_resblocks: int = 8
    enable_mise: bool = True
    enable_mosd: bool = True
    enable_aff: bool = True
    fusion: FusionMode = FusionMode.FAM
    levels: int = LEVELS

    def __post_init__(self) -> None:
        if self.levels != LEVELS:
            raise ConfigurationError(f"Only {LEVELS} levels are supported, got {self.levels}")
        if self.base_channels < 1:
            raise ConfigurationError(f"base_channels must be >= 1, got {self.base_channels}")
        if self.num_resblocks < 1:
            raise ConfigurationError(f"num_resblocks must be >= 1, got {self.num_resblocks}")
        try:
            object.__setattr__(self, "fusion", FusionMode(self.fusion))
        except ValueError:
            raise ConfigurationError(
                f"Unknown fusion mode {self.fusion!r}; expected one of "
                f"{[m.value for m in FusionMode]}"
            ) from None

    def channels(self, level: int) -> int:
        """Feature width at 1-based ``level``."""
        return self.base_channels * 2 ** (level - 1)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["fusion"] = self.fusion.value
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "ModelConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigurationError(f"Unknown model config keys: {sorted(unknown)}")
        return cls(**data)


@dataclass(frozen=True)
class TrainConfig:
    """Optimization protocol settings.

    ``max_steps`` caps the run below ``epochs * steps_per_epoch`` for desk-scale
    experiments; ``steps_per_epoch`` of ``None`` derives it from the corpus size.
    """

    epochs: int = 3000
    batch_size: int = 4
    lr0: float = 1e-4
    lr_decay_every: int = 500
    lr_decay_factor: float = 0.5
    lam: float = 0.1
    seed: int = 0
    checkpoint_every: int = 100
    patch_size: int = 256
    flip_prob: float = 0.5
    log_every: int = 10
    max_steps: Optional[int] = None
    steps_per_epoch: Optional[int] = None

    def __post_init__(self) -> None:
        if self.lr0 <= 0:
            raise ConfigurationError(f"lr0 must be positive, got {self.lr0}")
        if not 0 < self.lr_decay_factor <= 1:
            raise ConfigurationError(
                f"lr_decay_factor must lie in (0, 1], got {self.lr_decay_factor}"
            )
        if self.lr_decay_every < 1:
            raise ConfigurationError(f"lr_decay_every must be >= 1, got {self.lr_decay_every}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.epochs < 1:
            raise ConfigurationError(f"epochs must be >= 1, got {self.epochs}")
        if self.lam < 0:
            raise ConfigurationError(f"lambda must be non-negative, got {self.lam}")
        if self.checkpoint_every < 1:
            raise ConfigurationError(
                f"checkpoint_every must be >= 1, got {self.checkpoint_every}"
            )
        if self.patch_size < 4 or self.patch_size % 4:
            raise ConfigurationError(
                f"patch_size must be a positive multiple of 4, got {self.patch_size}"
            )
        if not 0 <= self.flip_prob <= 1:
            raise ConfigurationError(f"flip_prob must lie in [0, 1], got {self.flip_prob}")
        if self.max_steps is not None and self.max_steps < 1:
            raise ConfigurationError(f"max_steps must be >= 1, got {self.max_steps}")
        if self.steps_per_epoch is not None and self.steps_per_epoch < 1:
            raise ConfigurationError(
                f"steps_per_epoch must be >= 1, got {self.steps_per_epoch}"
            )

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class LossReport:
    """Loss terms of one evaluation of the training objective.

    ``objective`` is the differentiable total; the float fields satisfy
    ``l_total == l_cont + lam * l_msfr`` exactly.
    """

    l_cont: float
    l_msfr: float
    l_total: float
    lam: float
    objective: Optional[Tensor] = field(default=None, repr=False, compare=False)

    @classmethod
    def combine(
        cls, l_cont: float, l_msfr: float, lam: float, objective: Optional[Tensor] = None
    ) -> "LossReport":
        if lam < 0:
            raise ConfigurationError(f"lambda must be non-negative, got {lam}")
        return cls(
            l_cont=l_cont,
            l_msfr=l_msfr,
            l_total=l_cont + lam * l_msfr,
            lam=lam,
            objective=objective,
        )

    @property
    def is_finite(self) -> bool:
        return all(math.isfinite(v) for v in (self.l_cont, self.l_msfr, self.l_total))


@dataclass
class FrameSequence:
    """Consecutive sharp frames, each a (1, 3, H, W) array in [0, 1]."""

    frames: list[np.ndarray]

    def __post_init__(self) -> None:
        if not self.frames:
            raise InputError("Frame sequence is empty")
        shape = self.frames[0].shape
        for index, frame in enumerate(self.frames):
            if frame.shape != shape:
                raise InputError(
                    f"Frame {index} has shape {frame.shape}, expected {shape}"
                )

    def __len__(self) -> int:
        return len(self.frames)


@dataclass
class ScalePyramid:
    """Images at full, half and quarter resolution, finest first."""

    levels: list[Tensor]
    mode: str = "input"

    def __post_init__(self) -> None:
        for finer, coarser in zip(self.levels, self.levels[1:]):
            fh, fw = finer.shape[2:]
            ch, cw = coarser.shape[2:]
            if (fh, fw) != (2 * ch, 2 * cw):
                raise InputError(
                    f"Pyramid level {coarser.shape} is not half of {finer.shape}"
                )

    def __len__(self) -> int:
        return len(self.levels)

    def __getitem__(self, index: int) -> Tensor:
        return self.levels[index]


@dataclass
class TrainingSample:
    """Aligned blurry/sharp pyramids cut from one image pair."""

    blurry: ScalePyramid
    sharp: ScalePyramid
    offset: tuple[int, int] = (0, 0)
    flipped: bool = False


@dataclass(frozen=True)
class PairRecord:
    """A blurry/sharp image pair from a manifest."""

    blurry_path: Path
    sharp_path: Path
    line: int = 0

    @property
    def record_id(self) -> str:
        return self.blurry_path.stem


@dataclass(frozen=True)
class SequenceRecord:
    """A directory of consecutive sharp frames to average ``frames_per_blur`` at a time."""

    sequence_dir: Path
    frames_per_blur: int
    line: int = 0

    @property
    def record_id(self) -> str:
        return self.sequence_dir.name


@dataclass
class DatasetManifest:
    """Records parsed from a manifest file; relative paths already resolved."""

    path: Path
    pairs: list[PairRecord] = field(default_factory=list)
    sequences: list[SequenceRecord] = field(default_factory=list)
    split: Split = Split.TRAIN

    def __len__(self) -> int:
        return len(self.pairs) + len(self.sequences)


@dataclass
class TrainLogRecord:
    """One optimizer step. ``wall_time`` is excluded from equality."""

    step: int
    epoch: int
    lr: float
    l_cont: float
    l_msfr: float
    l_total: float
    wall_time: float = field(default=0.0, compare=False)

    COLUMNS = ("step", "epoch", "lr", "l_cont", "l_msfr", "l_total", "wall_time")


@dataclass
class EvalRow:
    """Scores for one test image; ``error`` is set when the image failed."""

    record_id: str
    psnr: float = float("nan")
    ssim: float = float("nan")
    inference_ms: float = float("nan")
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class EvalReport:
    """Per-image rows plus aggregates over the successful ones."""

    rows: list[EvalRow]
    variant: str
    config_hash: str = ""
    ensemble: bool = False

    @property
    def scored(self) -> list[EvalRow]:
        return [row for row in self.rows if row.ok]

    @property
    def failed(self) -> list[EvalRow]:
        return [row for row in self.rows if not row.ok]

    def _mean(self, name: str) -> float:
        values = [getattr(row, name) for row in self.scored]
        if not values:
            return float("nan")
        return float(sum(values) / len(values))

    @property
    def mean_psnr(self) -> float:
        return self._mean("psnr")

    @property
    def mean_ssim(self) -> float:
        return self._mean("ssim")

    @property
    def mean_ms(self) -> float:
        return self._mean("inference_ms")

    @property
    def infinite_psnr_count(self) -> int:
        return sum(1 for row in self.scored if math.isinf(row.psnr))
