"""Tag prediction: exemplar-ensemble selection and direct threshold baseline."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Mapping

from .exemplar import ExemplarSet, ScoreVector, top_n_indices
from .vocab import TagVocabulary


class EstimatorError(ValueError):
    pass


@dataclass(frozen=True)
class EnsembleParams:
    """ñ = how many top exemplars to aggregate; p = minimum tag occurrence."""

    n_tilde: int = 11
    p: int = 3

    def __post_init__(self):
        if not 1 <= self.p <= self.n_tilde:
            raise EstimatorError(f"need 1 <= p <= n_tilde, got p={self.p}, n_tilde={self.n_tilde}")


@dataclass(frozen=True)
class MultiLabelParams:
    """Per-tag score threshold for the direct baseline, plus optional class weights.

    Class weights are a training-time rebalancing factor; they never alter
    thresholding here.
    """

    theta: float = 0.1
    class_weights: Mapping[str, float] | None = None

    def __post_init__(self):
        if self.theta < 0:
            raise EstimatorError(f"theta must be >= 0, got {self.theta}")
        if self.class_weights is not None:
            for tag, w in self.class_weights.items():
                if w <= 0:
                    raise EstimatorError(f"class weight for {tag!r} must be positive")


@dataclass(frozen=True)
class Estimate:
    """Selected tags plus the occurrence counts behind the selection."""

    selected: frozenset[str]
    tag_counts: Mapping[str, int]
    contributing: tuple[str, ...]


def estimate_ensemble(
    scores: ScoreVector,
    exemplars: ExemplarSet,
    params: EnsembleParams,
) -> Estimate:
    """Aggregate the tag sets of the top-ñ exemplars, keep tags seen >= p times."""
    if len(scores) != exemplars.size:
        raise EstimatorError(
            f"score vector length {len(scores)} != exemplar count {exemplars.size}"
        )
    top = top_n_indices(scores, params.n_tilde)
    counts: Counter[str] = Counter()
    for i in top:
        counts.update(exemplars.tag_set(i))
    selected = frozenset(t for t, c in counts.items() if c >= params.p)
    return Estimate(
        selected=selected,
        tag_counts=dict(counts),
        contributing=tuple(exemplars.font_ids[i] for i in top),
    )


def estimate_multilabel(
    tag_scores: Mapping[str, float],
    params: MultiLabelParams,
    vocab: TagVocabulary,
) -> frozenset[str]:
    """Threshold per-tag scores at theta; scores must cover the whole vocabulary."""
    missing = [t for t in vocab.tags if t not in tag_scores]
    if missing:
        raise EstimatorError(f"tag scores missing vocabulary tags: {missing[:5]}")
    return frozenset(t for t in vocab.tags if tag_scores[t] >= params.theta)


def class_weight(m_total: int, m_tag: int) -> float:
    """Training-set rebalancing weight (total - with_tag) / with_tag for one tag."""
    if m_tag == 0:
        raise EstimatorError("class weight undefined: tag absent from training set")
    if not 0 < m_tag <= m_total:
        raise EstimatorError(f"need 0 < m_tag <= m_total, got {m_tag} / {m_total}")
    return (m_total - m_tag) / m_tag
