"""Style transfer core: feature statistics, generator, losses, training."""

from thermoscope.style.features import (
    CONTENT_SCALE,
    MIN_SIDE,
    TAP_CHANNELS,
    LossNetwork,
    default_loss_network,
    extract_features,
    load_loss_network,
    save_loss_network,
    set_style_targets,
)
from thermoscope.style.generator import (
    MSGNet,
    GeneratorParams,
    generator_forward,
)
from thermoscope.style.losses import (
    ObjectiveBreakdown,
    content_loss,
    style_loss,
    total_objective,
    tv_loss,
)
from thermoscope.style.ops import comatch, gram, phi, phi_inv
from thermoscope.style.training import (
    Checkpoint,
    StyleTrainConfig,
    TrainLog,
    TrainLogEntry,
    load_checkpoint,
    save_checkpoint,
    stylize_dataset,
    stylize_image,
    train_msgnet,
)
from thermoscope.style.types import (
    PAPER_LOSS_WEIGHTS,
    CoMatchWeights,
    FeatureMap,
    FeaturePyramid,
    GramMatrix,
    LossWeights,
    StyleTargets,
)

__all__ = [
    "CONTENT_SCALE",
    "MIN_SIDE",
    "TAP_CHANNELS",
    "LossNetwork",
    "default_loss_network",
    "extract_features",
    "load_loss_network",
    "save_loss_network",
    "set_style_targets",
    "MSGNet",
    "GeneratorParams",
    "generator_forward",
    "ObjectiveBreakdown",
    "content_loss",
    "style_loss",
    "total_objective",
    "tv_loss",
    "comatch",
    "gram",
    "phi",
    "phi_inv",
    "Checkpoint",
    "StyleTrainConfig",
    "TrainLog",
    "TrainLogEntry",
    "load_checkpoint",
    "save_checkpoint",
    "stylize_dataset",
    "stylize_image",
    "train_msgnet",
    "PAPER_LOSS_WEIGHTS",
    "CoMatchWeights",
    "FeatureMap",
    "FeaturePyramid",
    "GramMatrix",
    "LossWeights",
    "StyleTargets",
]
