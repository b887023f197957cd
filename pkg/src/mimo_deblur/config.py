"""Configuration management."""

import hashlib
import os
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Iterable, Optional

import yaml

from mimo_deblur.core.entities import FusionMode, ModelConfig, TrainConfig
from mimo_deblur.core.errors import ConfigurationError
from mimo_deblur.schedule import schedule_preset

THREADS_ENV = "MIMO_DEBLUR_THREADS"

# name -> (base_channels, num_resblocks)
VARIANT_PRESETS: dict[str, tuple[int, int]] = {
    "mimo-unet": (32, 8),
    "mimo-unet-plus": (32, 20),
    "tiny": (8, 2),
}
# desk-scale preset, not one of the published variants
UNPUBLISHED_VARIANTS = frozenset({"tiny"})

ABLATIONS = ("mise", "mosd", "aff", "msfr")


@dataclass
class ModelSection:
    """Architecture settings; explicit widths override the variant preset."""
    variant: str = "mimo-unet"
    base_channels: Optional[int] = None
    num_resblocks: Optional[int] = None
    enable_mise: bool = True
    enable_mosd: bool = True
    enable_aff: bool = True
    fusion: str = FusionMode.FAM.value


@dataclass
class TrainSection:
    """Optimization protocol."""
    schedule: Optional[str] = None  # gopro | realblur
    epochs: int = 3000
    batch_size: int = 4
    lr0: float = 1e-4
    lr_decay_every: int = 500
    lr_decay_factor: float = 0.5
    lam: float = 0.1
    seed: int = 0
    checkpoint_every: int = 100  # epochs
    patch_size: int = 256
    flip_prob: float = 0.5
    log_every: int = 10  # steps
    max_steps: Optional[int] = None
    steps_per_epoch: Optional[int] = None


@dataclass
class DataSection:
    """Manifests."""
    train_manifest: Optional[Path] = None
    test_manifest: Optional[Path] = None


@dataclass
class EvalSection:
    """Evaluation options."""
    ensemble: bool = False
    quantize: bool = False


@dataclass
class PathsSection:
    """Output locations."""
    output_dir: Path = Path("runs")
    checkpoint_name: str = "model.ckpt"
    log_name: str = "train_log.tsv"
    report_name: str = "eval_report.tsv"


@dataclass
class RuntimeSection:
    """Process-level settings."""
    threads: int = 1
    quiet: bool = False


@dataclass
class Settings:
    """Application settings."""

    model: ModelSection = field(default_factory=ModelSection)
    train: TrainSection = field(default_factory=TrainSection)
    data: DataSection = field(default_factory=DataSection)
    eval: EvalSection = field(default_factory=EvalSection)
    paths: PathsSection = field(default_factory=PathsSection)
    runtime: RuntimeSection = field(default_factory=RuntimeSection)

    @property
    def variant_label(self) -> str:
        return describe_model(self.model_config())

    @property
    def checkpoint_path(self) -> Path:
        return self.paths.output_dir / self.paths.checkpoint_name

    @property
    def log_path(self) -> Path:
        return self.paths.output_dir / self.paths.log_name

    @property
    def report_path(self) -> Path:
        return self.paths.output_dir / self.paths.report_name

    def model_config(self) -> ModelConfig:
        if self.model.variant not in VARIANT_PRESETS:
            raise ConfigurationError(
                f"Unknown variant {self.model.variant!r}; expected one of {sorted(VARIANT_PRESETS)}"
            )
        base, blocks = VARIANT_PRESETS[self.model.variant]
        return ModelConfig(
            base_channels=base if self.model.base_channels is None else self.model.base_channels,
            num_resblocks=blocks if self.model.num_resblocks is None else self.model.num_resblocks,
            enable_mise=self.model.enable_mise,
            enable_mosd=self.model.enable_mosd,
            enable_aff=self.model.enable_aff,
            fusion=self.model.fusion,
        )

    def train_config(self) -> TrainConfig:
        values = {f.name: getattr(self.train, f.name) for f in fields(self.train)}
        schedule = values.pop("schedule")
        if schedule is not None:
            values.update(schedule_preset(schedule))
        return TrainConfig(**values)

    def apply_ablations(self, names: Iterable[str]) -> None:
        """Switch off components by name; ``msfr`` drops the frequency loss."""
        for name in names:
            if name not in ABLATIONS:
                raise ConfigurationError(f"Unknown ablation {name!r}; expected one of {ABLATIONS}")
            if name == "msfr":
                self.train.lam = 0.0
            else:
                setattr(self.model, f"enable_{name}", False)

    def to_dict(self) -> dict:
        """Plain-data dump suitable for YAML."""
        data = asdict(self)
        for section in data.values():
            for key, value in section.items():
                if isinstance(value, Path):
                    section[key] = str(value)
        return data


def describe_model(config: ModelConfig) -> str:
    """Variant tag for reports: the preset matching the widths, plus any disabled component."""
    dims = (config.base_channels, config.num_resblocks)
    name = next((n for n, preset in VARIANT_PRESETS.items() if preset == dims), None)
    label = name or f"custom (base {config.base_channels}, {config.num_resblocks} blocks)"
    if name is None or name in UNPUBLISHED_VARIANTS:
        label += " (not a paper variant)"
    disabled = [a for a in ABLATIONS if a != "msfr" and not getattr(config, f"enable_{a}")]
    if disabled:
        label += " without " + ", ".join(disabled)
    if config.fusion is not FusionMode.FAM:
        label += f", {config.fusion.value} fusion"
    return label


def config_hash(config: ModelConfig) -> str:
    """SHA-256 of the canonical YAML dump of ``config``."""
    canonical = yaml.safe_dump(config.to_dict(), sort_keys=True)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def load_config(config_path: Path = Path("config.yaml")) -> dict:
    """Load configuration from YAML file."""
    if not config_path.exists():
        return {}

    with open(config_path, "r", encoding="utf-8") as f:
        return yaml.safe_load(f) or {}


_PATH_KEYS = {"train_manifest", "test_manifest", "output_dir"}


def _apply_section(section: object, name: str, values: dict) -> None:
    if not isinstance(values, dict):
        raise ConfigurationError(f"Config section {name!r} must be a mapping")
    known = {f.name for f in fields(section)}
    for key, value in values.items():
        if key not in known:
            raise ConfigurationError(f"Unknown key {name}.{key} in config file")
        if key in _PATH_KEYS and value is not None:
            value = Path(value)
        setattr(section, key, value)


def get_settings(config_path: Path = Path("config.yaml")) -> Settings:
    """Get application settings from YAML config and environment."""
    config = load_config(config_path)
    settings = Settings()

    for name, values in config.items():
        if name not in {f.name for f in fields(settings)}:
            raise ConfigurationError(f"Unknown config section {name!r}")
        _apply_section(getattr(settings, name), name, values)

    # Relative manifest paths are relative to the config file
    base = config_path.parent
    for key in ("train_manifest", "test_manifest"):
        value = getattr(settings.data, key)
        if value is not None and not value.is_absolute():
            setattr(settings.data, key, base / value)

    threads = os.getenv(THREADS_ENV)
    if threads:
        try:
            settings.runtime.threads = int(threads)
        except ValueError:
            raise ConfigurationError(f"{THREADS_ENV} must be an integer, got {threads!r}") from None
    if settings.runtime.threads < 1:
        raise ConfigurationError(f"threads must be >= 1, got {settings.runtime.threads}")

    return settings
