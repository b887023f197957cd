"""Core domain layer: tensor engine, entities, interfaces, errors."""

from mimo_deblur.core.entities import (
    DatasetManifest,
    EvalReport,
    EvalRow,
    FrameSequence,
    FusionMode,
    LossReport,
    ModelConfig,
    PairRecord,
    ScalePyramid,
    SequenceRecord,
    Split,
    TrainConfig,
    TrainingSample,
    TrainLogRecord,
)
from mimo_deblur.core.errors import (
    CheckpointError,
    ConfigurationError,
    DeblurError,
    InputError,
    NonFiniteLossError,
    UsageError,
    ValidationError,
)
from mimo_deblur.core.interfaces import ImageCodec, Restorer
from mimo_deblur.core.tensor import (
    ComplexSpectrum,
    Graph,
    Parameter,
    Tensor,
    backward,
    no_grad,
    precision,
)

__all__ = [
    "CheckpointError",
    "ComplexSpectrum",
    "ConfigurationError",
    "DatasetManifest",
    "DeblurError",
    "EvalReport",
    "EvalRow",
    "FrameSequence",
    "FusionMode",
    "Graph",
    "ImageCodec",
    "InputError",
    "LossReport",
    "ModelConfig",
    "NonFiniteLossError",
    "PairRecord",
    "Parameter",
    "Restorer",
    "ScalePyramid",
    "SequenceRecord",
    "Split",
    "Tensor",
    "TrainConfig",
    "TrainingSample",
    "TrainLogRecord",
    "UsageError",
    "ValidationError",
    "backward",
    "no_grad",
    "precision",
]
