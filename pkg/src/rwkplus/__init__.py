"""Random walk kernels with color matching, and hidden-graph pattern learning."""

from .errors import DomainError, ResourceError, RwkError, TrainingError, ValidationError
from .graph import AttributedGraph, GraphDatabase, ProductGraph, direct_product, kronecker_adjacency
from .kernels import (
    KernelConfig,
    Normalization,
    ObjectiveMode,
    StepNormState,
    StepScores,
    rwk_labeled,
    rwk_plus_fast,
    rwk_plus_naive,
    rwk_rwnn,
    rwk_rwnn_efficient,
    step_norm_apply,
)
from .learn import GradientSet, HiddenGraph, TrainConfig, TrainResult, backward, objective, sgd_step, train
from .structural import StructuralColorConfig, structural_colors

__version__ = "0.1.0"
