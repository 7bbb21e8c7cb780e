"""Two-model classification cascades: pair selection, threshold calibration,
perceptual-hash memoization, and linear energy/latency metering over replayed
prediction records."""

from .calibration import (
    CalibrationResult,
    CascadeConfig,
    accuracy_at,
    auto_select,
    candidate_lambdas,
    cascade_decide_offline,
    find_lambda_star,
    load_config,
    save_config,
)
from .complementarity import (
    ComplementarityMatrix,
    complementarity,
    complementarity_matrix,
    correctness_vectors,
    predicted_label,
)
from .confidence import ScoreFunction, better_score, passes_threshold, score, softmax
from .engine import (
    CascadeEngine,
    Classifier,
    MacroMetrics,
    ReplayClassifier,
    SampleRef,
    StageTrace,
    macro_metrics,
    run_batch,
)
from .errors import DataError
from .images import ImageBuffer, load_image_pnm, to_grayscale, write_image_pnm
from .metering import (
    DuplicationCurve,
    Reduction,
    RunReport,
    aggregate,
    compare,
    cost_of,
    duplication_experiment,
    memory_overhead,
    nearest_rank,
)
from .phash import (
    Fingerprint,
    MemoStore,
    MomentInvariants,
    complex_moment,
    dhash,
    dhash_fingerprint,
    moment_invariants,
    moments_fingerprint,
)
from .records import (
    CostProfile,
    PairedDataset,
    PredictionRecord,
    align_records,
    load_cost_profile,
    load_prediction_records,
    parse_prediction_records,
)

__version__ = "0.1.0"

__all__ = [
    "CalibrationResult",
    "CascadeConfig",
    "CascadeEngine",
    "Classifier",
    "ComplementarityMatrix",
    "CostProfile",
    "DataError",
    "DuplicationCurve",
    "Fingerprint",
    "ImageBuffer",
    "MacroMetrics",
    "MemoStore",
    "MomentInvariants",
    "PairedDataset",
    "PredictionRecord",
    "Reduction",
    "ReplayClassifier",
    "RunReport",
    "SampleRef",
    "ScoreFunction",
    "StageTrace",
    "accuracy_at",
    "aggregate",
    "align_records",
    "auto_select",
    "better_score",
    "candidate_lambdas",
    "cascade_decide_offline",
    "compare",
    "complementarity",
    "complementarity_matrix",
    "complex_moment",
    "correctness_vectors",
    "cost_of",
    "dhash",
    "dhash_fingerprint",
    "duplication_experiment",
    "find_lambda_star",
    "load_config",
    "load_cost_profile",
    "load_image_pnm",
    "load_prediction_records",
    "macro_metrics",
    "memory_overhead",
    "moment_invariants",
    "moments_fingerprint",
    "nearest_rank",
    "parse_prediction_records",
    "passes_threshold",
    "predicted_label",
    "run_batch",
    "save_config",
    "score",
    "softmax",
    "to_grayscale",
    "write_image_pnm",
]
