"""Synthetic latent-font corpora with missing/noisy labels, for robustness studies.

Fonts are points in a feature space; each font's true tags are the tags whose
anchor points lie nearest, so similar fonts share tags by construction. All
randomness flows through numpy's PCG64 generator seeded from the params.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.spatial.distance import cdist

from .estimator import EnsembleParams, MultiLabelParams
from .exemplar import ExemplarSet, ScoreVector, write_feature_store
from .metrics import EvalReport, evaluate
from .vocab import TagVocabulary


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class CorruptionParams:
    miss_rate: float = 0.3
    noise_rate: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.miss_rate <= 1:
            raise SimulationError(f"miss_rate must be in [0,1], got {self.miss_rate}")
        if not 0 <= self.noise_rate <= 1:
            raise SimulationError(f"noise_rate must be in [0,1], got {self.noise_rate}")


@dataclass(frozen=True)
class QuerySample:
    font_index: int
    feature: np.ndarray
    true_tags: frozenset[str]


@dataclass(frozen=True)
class LatentFontModel:
    font_centers: np.ndarray
    true_tags: tuple[frozenset[str], ...]
    observed_tags: tuple[frozenset[str], ...]
    tag_names: tuple[str, ...]
    params: CorruptionParams

    @property
    def n_fonts(self) -> int:
        return len(self.true_tags)

    @property
    def feature_dim(self) -> int:
        return self.font_centers.shape[1]

    def font_ids(self) -> list[str]:
        return [f"font{i:05d}" for i in range(self.n_fonts)]

    def vocabulary(self) -> TagVocabulary:
        counts = {t: 0 for t in self.tag_names}
        for tags in self.true_tags:
            for t in tags:
                counts[t] += 1
        return TagVocabulary(tags=self.tag_names, counts=counts)

    def exemplar_set(self, use_true_tags: bool = False) -> ExemplarSet:
        source = self.true_tags if use_true_tags else self.observed_tags
        return ExemplarSet(exemplars=tuple(zip(self.font_ids(), source)))


def generate_corpus(
    n_fonts: int,
    feature_dim: int,
    tag_vocab_size: int,
    tags_per_font: int,
    params: CorruptionParams,
) -> LatentFontModel:
    """Sample font centers and tag anchors; tags attach by anchor proximity.

    Each true tag is dropped with probability miss_rate; with probability
    noise_rate the font gains one uniformly random wrong tag. Fully
    reproducible from params.seed.
    """
    if n_fonts < 1:
        raise SimulationError("n_fonts must be >= 1")
    if tags_per_font > tag_vocab_size:
        raise SimulationError("tags_per_font cannot exceed tag_vocab_size")
    rng = np.random.default_rng(params.seed)
    tag_names = tuple(f"tag{k:03d}" for k in range(tag_vocab_size))
    anchors = rng.standard_normal((tag_vocab_size, feature_dim))
    centers = rng.standard_normal((n_fonts, feature_dim))
    dists = cdist(centers, anchors)
    true_tags = []
    for i in range(n_fonts):
        nearest = np.argsort(dists[i], kind="stable")[:tags_per_font]
        true_tags.append(frozenset(tag_names[k] for k in nearest))

    observed = []
    for tags in true_tags:
        kept = {t for t in sorted(tags) if rng.random() >= params.miss_rate}
        if rng.random() < params.noise_rate:
            wrong = [t for t in tag_names if t not in tags]
            if wrong:
                kept.add(wrong[rng.integers(len(wrong))])
        observed.append(frozenset(kept))
    return LatentFontModel(
        font_centers=centers,
        true_tags=tuple(true_tags),
        observed_tags=tuple(observed),
        tag_names=tag_names,
        params=params,
    )


def make_queries(
    model: LatentFontModel,
    sigma: float,
    seed: int,
    font_indices: Sequence[int] | None = None,
) -> list[QuerySample]:
    """One perturbed rendering per requested font (default: every font once)."""
    if sigma < 0:
        raise SimulationError("sigma must be >= 0")
    rng = np.random.default_rng(seed)
    indices = list(font_indices) if font_indices is not None else list(range(model.n_fonts))
    noise = rng.standard_normal((len(indices), model.feature_dim)) * sigma
    return [
        QuerySample(
            font_index=i,
            feature=model.font_centers[i] + noise[j],
            true_tags=model.true_tags[i],
        )
        for j, i in enumerate(indices)
    ]


def top1_accuracy(model: LatentFontModel, sigma: float, seed: int, n_probe: int = 300) -> float:
    """Fraction of perturbed renderings whose nearest center is their own font."""
    rng = np.random.default_rng(seed)
    indices = rng.integers(model.n_fonts, size=n_probe)
    feats = model.font_centers[indices] + rng.standard_normal(
        (n_probe, model.feature_dim)) * sigma
    nearest = np.argmin(cdist(feats, model.font_centers), axis=1)
    return float(np.mean(nearest == indices))


def calibrate_sigma(
    model: LatentFontModel,
    target_accuracy: float = 0.8,
    seed: int = 0,
    n_probe: int = 300,
    iterations: int = 25,
) -> float:
    """Binary-search the rendering noise so top-1 accuracy lands near the target."""
    lo, hi = 0.0, 0.1
    while top1_accuracy(model, hi, seed, n_probe) > target_accuracy and hi < 1e3:
        hi *= 2
    for _ in range(iterations):
        mid = (lo + hi) / 2
        if top1_accuracy(model, mid, seed, n_probe) > target_accuracy:
            lo = mid
        else:
            hi = mid
    return (lo + hi) / 2


@dataclass(frozen=True)
class ComparisonResult:
    ensemble_report: EvalReport
    baseline_report: EvalReport
    ensemble_predictions: list[frozenset[str]]
    baseline_predictions: list[frozenset[str]]


def _query_scores(
    model: LatentFontModel, queries: Sequence[QuerySample], temperature: float
) -> np.ndarray:
    feats = np.stack([q.feature for q in queries])
    logits = -cdist(feats, model.font_centers) / temperature
    logits -= logits.max(axis=1, keepdims=True)
    weights = np.exp(logits)
    return weights / weights.sum(axis=1, keepdims=True)


def run_comparison(
    model: LatentFontModel,
    queries: Sequence[QuerySample],
    ensemble_params: EnsembleParams,
    multilabel_params: MultiLabelParams,
    temperature: float = 0.1,
) -> ComparisonResult:
    """Ensemble vs direct-threshold baseline, both scored against TRUE tags.

    Both paths share the nearest-exemplar score vectors over the observed
    (corrupted) exemplar tag sets. The baseline's per-tag score is the
    score-weighted fraction of exemplars carrying the tag, thresholded at theta.
    """
    from .estimator import estimate_ensemble

    vocab = model.vocabulary()
    exemplars = model.exemplar_set()
    score_matrix = _query_scores(model, queries, temperature)

    tag_index = {t: k for k, t in enumerate(model.tag_names)}
    membership = np.zeros((model.n_fonts, len(model.tag_names)))
    for i, tags in enumerate(model.observed_tags):
        for t in tags:
            membership[i, tag_index[t]] = 1.0
    baseline_scores = score_matrix @ membership

    ensemble_preds, baseline_preds = [], []
    for row, brow in zip(score_matrix, baseline_scores):
        est = estimate_ensemble(ScoreVector(row, normalized=True), exemplars, ensemble_params)
        ensemble_preds.append(est.selected)
        baseline_preds.append(
            frozenset(t for t, k in tag_index.items() if brow[k] >= multilabel_params.theta)
        )
    truth = [q.true_tags for q in queries]
    return ComparisonResult(
        ensemble_report=evaluate(ensemble_preds, truth, vocab),
        baseline_report=evaluate(baseline_preds, truth, vocab),
        ensemble_predictions=ensemble_preds,
        baseline_predictions=baseline_preds,
    )


def mean_pairwise_jaccard(tag_sets: Sequence[frozenset[str]]) -> float:
    """Average Jaccard similarity over all unordered pairs; empty∩empty counts 1."""
    n = len(tag_sets)
    if n < 2:
        return 1.0
    total = 0.0
    pairs = 0
    for i in range(n):
        for j in range(i + 1, n):
            a, b = tag_sets[i], tag_sets[j]
            union = len(a | b)
            total += len(a & b) / union if union else 1.0
            pairs += 1
    return total / pairs


def export_corpus(model: LatentFontModel, out_dir: str | Path) -> None:
    """Write features + observed/true tag records in the shared pipeline formats."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ids = model.font_ids()
    write_feature_store(ids, model.font_centers, out / "features.csv")
    for name, source in (("observed_tags.csv", model.observed_tags),
                         ("true_tags.csv", model.true_tags)):
        lines = [
            ",".join([fid] + sorted(tags)) for fid, tags in zip(ids, source)
        ]
        (out / name).write_text("\n".join(lines) + "\n", encoding="utf-8")
