"""Exemplar font store and pluggable query-scoring backends."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .vocab import MergeRules, RawTagRecord, TagVocabulary, canonicalize


class ScoreError(ValueError):
    pass


class ExemplarLoadError(ValueError):
    pass


@dataclass(frozen=True)
class ScoreVector:
    """Per-exemplar nonnegative scores for one query."""

    scores: np.ndarray
    normalized: bool

    def __post_init__(self):
        arr = np.asarray(self.scores, dtype=float)
        arr.setflags(write=False)
        object.__setattr__(self, "scores", arr)

    def __len__(self) -> int:
        return len(self.scores)


@dataclass(frozen=True)
class ExemplarSet:
    """Ordered exemplar fonts with canonical tag sets, unique font_ids."""

    exemplars: tuple[tuple[str, frozenset[str]], ...]

    @property
    def size(self) -> int:
        return len(self.exemplars)

    @property
    def font_ids(self) -> tuple[str, ...]:
        return tuple(fid for fid, _ in self.exemplars)

    def tag_set(self, index: int) -> frozenset[str]:
        return self.exemplars[index][1]


def load_exemplars(
    records: Sequence[RawTagRecord],
    vocab: TagVocabulary,
    rules: MergeRules | None = None,
) -> ExemplarSet:
    """Build an ExemplarSet ordered by font_id, tag sets canonicalized against vocab."""
    rules = rules or MergeRules.empty()
    seen: set[str] = set()
    for rec in records:
        if rec.font_id in seen:
            raise ExemplarLoadError(f"duplicate exemplar font_id {rec.font_id!r}")
        seen.add(rec.font_id)
    ordered = sorted(records, key=lambda r: r.font_id)
    return ExemplarSet(
        exemplars=tuple((r.font_id, canonicalize(r.tags, rules, vocab)) for r in ordered)
    )


def score_from_matrix(row: Sequence[float], expected_n: int) -> ScoreVector:
    """Validate one externally-computed score row and wrap it."""
    arr = np.asarray(row, dtype=float)
    if arr.ndim != 1 or len(arr) != expected_n:
        raise ScoreError(f"score row has length {arr.size}, expected {expected_n}")
    if not np.all(np.isfinite(arr)):
        raise ScoreError("score row contains non-finite values")
    if np.any(arr < 0):
        raise ScoreError("score row contains negative values")
    return ScoreVector(scores=arr, normalized=bool(abs(arr.sum() - 1.0) <= 1e-6))


def nearest_exemplar_scores(
    query: Sequence[float],
    exemplar_features: np.ndarray,
    temperature: float = 1.0,
) -> ScoreVector:
    """Softmax over negative Euclidean distances to each exemplar feature."""
    if temperature <= 0:
        raise ScoreError("temperature must be positive")
    feats = np.asarray(exemplar_features, dtype=float)
    if feats.ndim != 2 or feats.shape[0] == 0:
        raise ScoreError("exemplar feature store must be a non-empty 2-D array")
    q = np.asarray(query, dtype=float)
    if q.shape != (feats.shape[1],):
        raise ScoreError(
            f"query dimension {q.shape} does not match exemplar dimension {feats.shape[1]}"
        )
    dists = np.linalg.norm(feats - q, axis=1)
    logits = -dists / temperature
    logits -= logits.max()
    weights = np.exp(logits)
    return ScoreVector(scores=weights / weights.sum(), normalized=True)


def top_n_indices(scores: ScoreVector, n_tilde: int) -> list[int]:
    """Indices of the n_tilde largest scores, descending; ties by ascending index."""
    n = len(scores)
    if not 1 <= n_tilde <= n:
        raise ScoreError(f"n_tilde={n_tilde} out of range for {n} exemplars")
    order = np.lexsort((np.arange(n), -scores.scores))
    return [int(i) for i in order[:n_tilde]]


# ---------------------------------------------------------------------------
# File formats


def read_score_matrix(path: str | Path) -> tuple[list[str], list[str], np.ndarray]:
    """Score matrix: header `sample_id,<exemplar ids...>`, one row per query."""
    text = Path(path).read_text(encoding="utf-8")
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if not header or header[0] != "sample_id":
        raise ScoreError("score matrix must start with a 'sample_id' header row")
    exemplar_ids = header[1:]
    sample_ids, rows = [], []
    for row in reader:
        if not row:
            continue
        if len(row) - 1 != len(exemplar_ids):
            raise ScoreError(f"row for {row[0]!r} has {len(row) - 1} scores, "
                             f"expected {len(exemplar_ids)}")
        sample_ids.append(row[0])
        rows.append([float(v) for v in row[1:]])
    return sample_ids, exemplar_ids, np.asarray(rows, dtype=float)


def write_score_matrix(
    sample_ids: Sequence[str],
    exemplar_ids: Sequence[str],
    matrix: np.ndarray,
    path: str | Path,
) -> None:
    lines = ["sample_id," + ",".join(exemplar_ids)]
    for sid, row in zip(sample_ids, matrix):
        lines.append(sid + "," + ",".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_feature_store(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Feature store: one row per item, `font_id,<D values>`; all rows same width."""
    ids, rows = [], []
    width = None
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        parts = next(csv.reader(io.StringIO(line)))
        if width is None:
            width = len(parts)
        elif len(parts) != width:
            raise ScoreError(f"feature row for {parts[0]!r} has inconsistent width")
        ids.append(parts[0])
        rows.append([float(v) for v in parts[1:]])
    if not ids:
        raise ScoreError("feature store is empty")
    feats = np.asarray(rows, dtype=float)
    if not np.all(np.isfinite(feats)):
        raise ScoreError("feature store contains non-finite values")
    return ids, feats


def write_feature_store(ids: Sequence[str], features: np.ndarray, path: str | Path) -> None:
    lines = [
        fid + "," + ",".join(repr(float(v)) for v in row)
        for fid, row in zip(ids, features)
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
