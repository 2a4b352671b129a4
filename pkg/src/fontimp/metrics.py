"""Macro-averaged multi-label evaluation and (ñ, p) hyperparameter sweeps."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .estimator import EnsembleParams, estimate_ensemble
from .exemplar import ExemplarSet, ScoreVector
from .vocab import TagVocabulary


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class TagMetrics:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class EvalReport:
    per_tag: dict[str, TagMetrics]
    macro_recall: float
    macro_precision: float
    macro_f1: float
    n_samples: int


@dataclass(frozen=True)
class SweepResult:
    grid: list[tuple[int, int, float]]
    best: tuple[int, int]

    @property
    def best_f1(self) -> float:
        lookup = {(n, p): f1 for n, p, f1 in self.grid}
        return lookup[self.best]


def _safe_div(num: float, den: float) -> float:
    return num / den if den else 0.0


def evaluate(
    predictions: Sequence[Iterable[str]],
    ground_truth: Sequence[Iterable[str]],
    vocab: TagVocabulary,
) -> EvalReport:
    """Per-tag confusion counts over samples, macro-averaged over all vocabulary tags.

    A tag with no positive predictions gets precision 0; a tag with no true
    occurrences gets recall 0; F1 is 0 when precision + recall is 0.
    """
    if len(predictions) != len(ground_truth):
        raise MetricsError(
            f"{len(predictions)} predictions vs {len(ground_truth)} ground-truth sets"
        )
    pred_sets = [frozenset(p) for p in predictions]
    true_sets = [frozenset(t) for t in ground_truth]
    for sets in (pred_sets, true_sets):
        for s in sets:
            oov = [t for t in s if t not in vocab]
            if oov:
                raise MetricsError(f"out-of-vocabulary tags: {sorted(oov)[:5]}")
    per_tag: dict[str, TagMetrics] = {}
    for tag in vocab.tags:
        tp = fp = fn = 0
        for pred, true in zip(pred_sets, true_sets):
            hit, want = tag in pred, tag in true
            tp += hit and want
            fp += hit and not want
            fn += want and not hit
        precision = _safe_div(tp, tp + fp)
        recall = _safe_div(tp, tp + fn)
        f1 = _safe_div(2 * precision * recall, precision + recall)
        per_tag[tag] = TagMetrics(tp, fp, fn, precision, recall, f1)
    k = vocab.size
    return EvalReport(
        per_tag=per_tag,
        macro_recall=sum(m.recall for m in per_tag.values()) / k,
        macro_precision=sum(m.precision for m in per_tag.values()) / k,
        macro_f1=sum(m.f1 for m in per_tag.values()) / k,
        n_samples=len(pred_sets),
    )


def sweep(
    score_rows: Sequence[ScoreVector],
    ground_truth: Sequence[Iterable[str]],
    exemplars: ExemplarSet,
    vocab: TagVocabulary,
    n_tilde_range: Iterable[int],
    p_range: Iterable[int],
) -> SweepResult:
    """Grid-evaluate the ensemble over (ñ, p) pairs with p <= ñ; best by macro F1.

    Ties prefer the smaller ñ, then the smaller p.
    """
    n_values = sorted(set(n_tilde_range))
    p_values = sorted(set(p_range))
    grid: list[tuple[int, int, float]] = []
    for n_tilde in n_values:
        # top-n selection is shared across all p at this n_tilde
        estimates = [
            estimate_ensemble(s, exemplars, EnsembleParams(n_tilde=n_tilde, p=1))
            for s in score_rows
        ]
        for p in p_values:
            if p > n_tilde:
                continue
            preds = [
                frozenset(t for t, c in e.tag_counts.items() if c >= p) for e in estimates
            ]
            report = evaluate(preds, ground_truth, vocab)
            grid.append((n_tilde, p, report.macro_f1))
    if not grid:
        raise MetricsError("empty sweep grid: no (n_tilde, p) pair with p <= n_tilde")
    best_n, best_p, _ = max(grid, key=lambda item: (item[2], -item[0], -item[1]))
    return SweepResult(grid=grid, best=(best_n, best_p))


def format_report(report: EvalReport, vocab: TagVocabulary) -> str:
    """Human-readable per-tag table plus macro summary."""
    lines = [f"{'tag':24s} {'tp':>5s} {'fp':>5s} {'fn':>5s} "
             f"{'precision':>9s} {'recall':>9s} {'f1':>9s}"]
    for tag in vocab.tags:
        m = report.per_tag[tag]
        lines.append(f"{tag:24s} {m.tp:5d} {m.fp:5d} {m.fn:5d} "
                     f"{m.precision:9.4f} {m.recall:9.4f} {m.f1:9.4f}")
    lines.append("")
    lines.append(f"samples:         {report.n_samples}")
    lines.append(f"macro precision: {report.macro_precision:.6f}")
    lines.append(f"macro recall:    {report.macro_recall:.6f}")
    lines.append(f"macro f1:        {report.macro_f1:.6f}")
    return "\n".join(lines) + "\n"


def write_report_rows(report: EvalReport, vocab: TagVocabulary, path: str | Path) -> None:
    """Machine-readable rows `tag,tp,fp,fn,precision,recall,f1` + macro footer."""
    lines = ["tag,tp,fp,fn,precision,recall,f1"]
    for tag in vocab.tags:
        m = report.per_tag[tag]
        lines.append(f"{tag},{m.tp},{m.fp},{m.fn},"
                     f"{m.precision!r},{m.recall!r},{m.f1!r}")
    lines.append(f"__macro__,,,,{report.macro_precision!r},"
                 f"{report.macro_recall!r},{report.macro_f1!r}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
