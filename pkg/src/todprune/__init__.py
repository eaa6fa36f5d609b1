"""Structured neural-network pruning driven by class-distribution
utilization scores, first-order reconstruction errors, and automatic
prune-count selection bounded by a tolerance-of-difference level.
"""

from .diagnostics import (
    LayerDiagnostics,
    ScoreReport,
    diagnose_layer,
    reconstruction_errors,
    utilization_scores,
)
from .dumpio import (
    ActivationDump,
    GradientDump,
    ParamDump,
    read_dump,
    write_dump,
)
from .errors import (
    BadMagicError,
    ContractError,
    DumpFormatError,
    TodpruneError,
    TrainingDivergedError,
    TruncatedDumpError,
    UnsupportedVersionError,
)
from .mininet import (
    Dataset,
    MiniNet,
    SplitDataset,
    capture,
    evaluate,
    finetune,
    forward,
    init,
    load_checkpoint,
    save_checkpoint,
    synthetic_blobs,
    train,
)
from .planner import PruningPlan, build_plan, select_m, sweep, tod
from .stats import quantile, sliced_wasserstein, wasserstein_1d
from .surgery import apply, count_flops, count_params

__version__ = "0.1.0"
