"""Single-file binary checkpoints.

Layout, all integers little-endian::

    magic "MIMODBLR" | u32 version
    u32 length | model config as YAML
    u32 tensor count
    per tensor: u32 name length | name | 4 x i32 dims | float32 payload
    u8 has_optimizer
      [u64 adam step | per tensor: first moment payload | second moment payload]
    u32 length | training state as YAML

Shapes are padded with leading ones to four dimensions. Every stored shape is
checked against the shape the stored config implies before its payload is
read.
"""

import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Optional

import numpy as np
import yaml

from mimo_deblur.core.entities import ModelConfig
from mimo_deblur.core.errors import CheckpointError, ConfigurationError
from mimo_deblur.core.optim import AdamState
from mimo_deblur.model.mimo_unet import MimoUNet

MAGIC = b"MIMODBLR"
VERSION = 1
PAYLOAD_DTYPE = np.dtype("<f4")


@dataclass
class Checkpoint:
    """Everything needed to restore a model and continue its training."""

    config: ModelConfig
    parameters: dict[str, np.ndarray]
    adam: Optional[AdamState] = None
    train_state: dict = field(default_factory=dict)

    @classmethod
    def capture(
        cls,
        model: MimoUNet,
        adam: Optional[AdamState] = None,
        train_state: Optional[dict] = None,
    ) -> "Checkpoint":
        return cls(
            config=model.config,
            parameters={name: p.data for name, p in model.named_parameters()},
            adam=adam,
            train_state=dict(train_state or {}),
        )

    def build_model(self) -> MimoUNet:
        model = MimoUNet.zeros(self.config)
        self.apply_to(model)
        return model

    def apply_to(self, model: MimoUNet) -> None:
        """Copy stored parameters into ``model``, keeping each parameter's dtype."""
        if model.config != self.config:
            raise CheckpointError(
                f"Checkpoint config {self.config.to_dict()} does not match model config "
                f"{model.config.to_dict()}"
            )
        for name, param in model.named_parameters():
            param.data = self.parameters[name].astype(param.data.dtype).reshape(param.shape)
            param.grad = None

    def restore_adam(self, params: list) -> AdamState:
        """Optimizer state cast to the parameters' dtype; zeros when none was stored."""
        if self.adam is None:
            return AdamState.zeros_like(params)
        return AdamState(
            step=self.adam.step,
            first_moments=[
                m.astype(p.data.dtype).reshape(p.shape)
                for m, p in zip(self.adam.first_moments, params)
            ],
            second_moments=[
                v.astype(p.data.dtype).reshape(p.shape)
                for v, p in zip(self.adam.second_moments, params)
            ],
        )


def _padded_dims(shape: tuple[int, ...]) -> tuple[int, int, int, int]:
    return (1,) * (4 - len(shape)) + tuple(shape)


def _write_payload(stream: BinaryIO, array: np.ndarray) -> None:
    stream.write(np.ascontiguousarray(array, dtype=PAYLOAD_DTYPE).tobytes())


def _read_exact(stream: BinaryIO, size: int, what: str) -> bytes:
    data = stream.read(size)
    if len(data) != size:
        raise CheckpointError(f"Checkpoint truncated while reading {what}")
    return data


def _read_payload(stream: BinaryIO, shape: tuple[int, ...], what: str) -> np.ndarray:
    count = int(np.prod(shape))
    raw = _read_exact(stream, count * PAYLOAD_DTYPE.itemsize, what)
    return np.frombuffer(raw, dtype=PAYLOAD_DTYPE).astype(np.float32).reshape(shape)


def _read_u32(stream: BinaryIO, what: str) -> int:
    return struct.unpack("<I", _read_exact(stream, 4, what))[0]


def _config_blob(config: ModelConfig) -> bytes:
    return yaml.safe_dump(config.to_dict(), sort_keys=True).encode("utf-8")


def write_checkpoint(path: Path, checkpoint: Checkpoint) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(checkpoint.parameters)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", VERSION))
        blob = _config_blob(checkpoint.config)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)

        f.write(struct.pack("<I", len(names)))
        for name in names:
            array = checkpoint.parameters[name]
            encoded = name.encode("utf-8")
            f.write(struct.pack("<I", len(encoded)))
            f.write(encoded)
            f.write(struct.pack("<4i", *_padded_dims(array.shape)))
            _write_payload(f, array)

        adam = checkpoint.adam
        f.write(struct.pack("<B", 1 if adam is not None else 0))
        if adam is not None:
            if len(adam.first_moments) != len(names):
                raise CheckpointError(
                    f"Optimizer holds {len(adam.first_moments)} moments for {len(names)} tensors"
                )
            f.write(struct.pack("<Q", adam.step))
            for m, v in zip(adam.first_moments, adam.second_moments):
                _write_payload(f, m)
                _write_payload(f, v)

        state = yaml.safe_dump(checkpoint.train_state, sort_keys=True).encode("utf-8")
        f.write(struct.pack("<I", len(state)))
        f.write(state)
    tmp.replace(path)


def save_checkpoint(
    path: Path,
    model: MimoUNet,
    adam: Optional[AdamState] = None,
    train_state: Optional[dict] = None,
) -> None:
    """Write ``model`` (and optionally optimizer and loop state) to ``path``."""
    write_checkpoint(path, Checkpoint.capture(model, adam, train_state))


def load_checkpoint(path: Path, expected: Optional[ModelConfig] = None) -> Checkpoint:
    """Read and validate a checkpoint.

    With ``expected`` given, a checkpoint written for another configuration is
    rejected before any tensor is read.
    """
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"Checkpoint not found: {path}")
    with open(path, "rb") as f:
        if _read_exact(f, len(MAGIC), "magic") != MAGIC:
            raise CheckpointError(f"{path} is not a checkpoint file")
        version = _read_u32(f, "version")
        if version != VERSION:
            raise CheckpointError(f"Unsupported checkpoint version {version} (expected {VERSION})")

        blob = _read_exact(f, _read_u32(f, "config length"), "config")
        try:
            config = ModelConfig.from_dict(yaml.safe_load(blob.decode("utf-8")) or {})
        except (ConfigurationError, TypeError, yaml.YAMLError) as e:
            raise CheckpointError(f"Stored model config is invalid: {e}") from e
        if expected is not None and expected != config:
            raise CheckpointError(
                f"Checkpoint was written for {config.to_dict()}, "
                f"not for the requested {expected.to_dict()}"
            )

        reference = {name: p.shape for name, p in MimoUNet.zeros(config).named_parameters()}
        count = _read_u32(f, "tensor count")
        if count != len(reference):
            raise CheckpointError(
                f"Checkpoint holds {count} tensors, config implies {len(reference)}"
            )

        parameters: dict[str, np.ndarray] = {}
        for index in range(count):
            raw_name = _read_exact(f, _read_u32(f, f"name length of tensor {index}"), "name")
            name = raw_name.decode("utf-8", errors="replace")
            dims = struct.unpack("<4i", _read_exact(f, 16, f"dims of {name}"))
            if name not in reference:
                raise CheckpointError(f"Unexpected tensor {name!r} in checkpoint")
            shape = reference[name]
            if dims != _padded_dims(shape):
                raise CheckpointError(
                    f"Tensor {name!r} has stored shape {dims}, config implies {_padded_dims(shape)}"
                )
            parameters[name] = _read_payload(f, shape, name)
        missing = set(reference) - set(parameters)
        if missing:
            raise CheckpointError(f"Checkpoint lacks tensors: {sorted(missing)}")

        adam = None
        if struct.unpack("<B", _read_exact(f, 1, "optimizer flag"))[0]:
            step = struct.unpack("<Q", _read_exact(f, 8, "optimizer step"))[0]
            first, second = [], []
            for name, array in parameters.items():
                first.append(_read_payload(f, array.shape, f"first moment of {name}"))
                second.append(_read_payload(f, array.shape, f"second moment of {name}"))
            adam = AdamState(step=step, first_moments=first, second_moments=second)

        state_blob = _read_exact(f, _read_u32(f, "state length"), "training state")
        try:
            train_state = yaml.safe_load(state_blob.decode("utf-8")) if state_blob else {}
        except yaml.YAMLError as e:
            raise CheckpointError(f"Unreadable training state in {path}: {e}") from e
        if not isinstance(train_state, dict):
            raise CheckpointError(f"Training state in {path} must be a mapping")
        if f.read(1):
            raise CheckpointError(f"Trailing bytes after the end of {path}")

    return Checkpoint(config=config, parameters=parameters, adam=adam, train_state=train_state)
