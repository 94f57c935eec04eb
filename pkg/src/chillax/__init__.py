"""Learning leaf classifiers from labels of any precision over a class hierarchy."""

from .data import LabeledExample
from .encoding import MaskedTarget, encode, mask_chillax, mask_original, masked_target
from .evaluation import EvalReport, emit_report, evaluate
from .hierarchy import Hierarchy, load_hierarchy, read_hierarchy
from .noise import (
    DepthModel,
    degrade_dataset,
    depth_pmf,
    imprecisify_label,
    inject_inaccuracy,
    relabel_parents,
)
from .probmodel import predict_leaf, top_k_leaves, unconditional_probs
from .training import (
    HeadModel,
    HyperParams,
    SgdrSchedule,
    masked_bce_grad,
    masked_bce_loss,
    score,
    sgdr_lr,
    train,
)

__version__ = "0.1.0"
