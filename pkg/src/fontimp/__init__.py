"""Exemplar-based font impression tagging, evaluation, and corpus analytics."""

from .estimator import (
    EnsembleParams,
    Estimate,
    MultiLabelParams,
    class_weight,
    estimate_ensemble,
    estimate_multilabel,
)
from .exemplar import (
    ExemplarSet,
    ScoreVector,
    load_exemplars,
    nearest_exemplar_scores,
    score_from_matrix,
    top_n_indices,
)
from .metrics import EvalReport, SweepResult, evaluate, sweep
from .vocab import (
    MergeRules,
    RawTagRecord,
    TagVocabulary,
    build_vocabulary,
    canonicalize,
    normalize_tag,
)

__version__ = "0.1.0"

__all__ = [
    "EnsembleParams",
    "Estimate",
    "EvalReport",
    "ExemplarSet",
    "MergeRules",
    "MultiLabelParams",
    "RawTagRecord",
    "ScoreVector",
    "SweepResult",
    "TagVocabulary",
    "build_vocabulary",
    "canonicalize",
    "class_weight",
    "estimate_ensemble",
    "estimate_multilabel",
    "evaluate",
    "load_exemplars",
    "nearest_exemplar_scores",
    "normalize_tag",
    "score_from_matrix",
    "sweep",
    "top_n_indices",
]
