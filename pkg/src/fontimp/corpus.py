"""Genre-vs-impression correlation: OR accumulation, normalization, biclustering."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.cluster.hierarchy import leaves_list, linkage
from scipy.spatial.distance import pdist

from .vocab import TagVocabulary


class CorpusError(ValueError):
    pass


@dataclass(frozen=True)
class CorpusItem:
    """One item (e.g. a book cover) with per-word estimated tag sets."""

    item_id: str
    genre: str
    word_estimates: tuple[frozenset[str], ...]

    def tag_union(self) -> frozenset[str]:
        out: set[str] = set()
        for words in self.word_estimates:
            out |= words
        return frozenset(out)


@dataclass(frozen=True)
class GenreImpressionMatrix:
    tags: tuple[str, ...]
    genres: tuple[str, ...]
    raw: np.ndarray
    per_genre: np.ndarray
    zscored: np.ndarray
    row_order: tuple[int, ...]
    col_order: tuple[int, ...]


def accumulate(
    items: Sequence[CorpusItem],
    vocab: TagVocabulary,
    genres: Sequence[str],
) -> np.ndarray:
    """K×G counts: each item's word-level tag union contributes 1 per (tag, genre)."""
    if not genres:
        raise CorpusError("genre list must be non-empty")
    genre_index = {g: j for j, g in enumerate(genres)}
    tag_index = vocab.index()
    raw = np.zeros((vocab.size, len(genres)))
    for item in items:
        if item.genre not in genre_index:
            raise CorpusError(f"item {item.item_id!r} has unknown genre {item.genre!r}")
        j = genre_index[item.genre]
        for tag in item.tag_union():
            if tag in tag_index:
                raw[tag_index[tag], j] += 1
    return raw


def normalize(raw: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Column-normalize counts, then standardize each row to mean 0, variance 1.

    All-zero columns stay zero; constant rows z-score to all zeros. Variance is
    the population variance.
    """
    raw = np.asarray(raw, dtype=float)
    if np.any(raw < 0):
        raise CorpusError("counts must be nonnegative")
    col_sums = raw.sum(axis=0, keepdims=True)
    per_genre = np.divide(raw, col_sums, out=np.zeros_like(raw), where=col_sums > 0)
    means = per_genre.mean(axis=1, keepdims=True)
    stds = per_genre.std(axis=1, keepdims=True)
    zscored = np.divide(per_genre - means, stds, out=np.zeros_like(per_genre), where=stds > 0)
    return per_genre, zscored


def _leaf_order(matrix: np.ndarray) -> tuple[int, ...]:
    n = matrix.shape[0]
    if n < 2:
        return tuple(range(n))
    link = linkage(pdist(matrix, metric="euclidean"), method="average")
    return tuple(int(i) for i in leaves_list(link))


def bicluster_order(zscored: np.ndarray) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Dendrogram leaf orders from average-linkage clustering of rows and columns."""
    z = np.asarray(zscored, dtype=float)
    if not np.all(np.isfinite(z)):
        raise CorpusError("matrix must be finite")
    return _leaf_order(z), _leaf_order(z.T)


def build_matrix(
    items: Sequence[CorpusItem],
    vocab: TagVocabulary,
    genres: Sequence[str],
) -> GenreImpressionMatrix:
    raw = accumulate(items, vocab, genres)
    per_genre, zscored = normalize(raw)
    row_order, col_order = bicluster_order(zscored)
    return GenreImpressionMatrix(
        tags=tuple(vocab.tags),
        genres=tuple(genres),
        raw=raw,
        per_genre=per_genre,
        zscored=zscored,
        row_order=row_order,
        col_order=col_order,
    )


def ordered_values(matrix: GenreImpressionMatrix) -> np.ndarray:
    z = matrix.zscored[list(matrix.row_order), :]
    return z[:, list(matrix.col_order)]


def write_matrix_csv(matrix: GenreImpressionMatrix, path: str | Path) -> None:
    """Ordered z-scored matrix as delimiter-separated text (round-trippable floats)."""
    cols = [matrix.genres[j] for j in matrix.col_order]
    values = ordered_values(matrix)
    lines = ["tag," + ",".join(cols)]
    for i, row in zip(matrix.row_order, values):
        lines.append(matrix.tags[i] + "," + ",".join(repr(float(v)) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_matrix_csv(path: str | Path) -> tuple[list[str], list[str], np.ndarray]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    genres = lines[0].split(",")[1:]
    tags, rows = [], []
    for line in lines[1:]:
        if not line.strip():
            continue
        parts = line.split(",")
        tags.append(parts[0])
        rows.append([float(v) for v in parts[1:]])
    return tags, genres, np.asarray(rows, dtype=float)


def emit_heatmap(matrix: GenreImpressionMatrix, svg_path: str | Path,
                 matrix_path: str | Path | None = None) -> None:
    """Write an SVG heatmap (red positive, blue negative, white zero) + ordered CSV.

    Output is byte-deterministic: no timestamps, fixed SVG id salt.
    """
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    svg_path = Path(svg_path)
    if matrix_path is None:
        matrix_path = svg_path.with_suffix(".csv")
    write_matrix_csv(matrix, matrix_path)

    values = ordered_values(matrix)
    limit = float(np.max(np.abs(values))) or 1.0
    n_rows, n_cols = values.shape
    with plt.rc_context({"svg.hashsalt": "fontimp"}):
        fig, ax = plt.subplots(
            figsize=(max(4.0, 0.3 * n_cols + 2), max(3.0, 0.16 * n_rows + 1.5)))
        im = ax.imshow(values, cmap="bwr", vmin=-limit, vmax=limit, aspect="auto")
        ax.set_xticks(range(n_cols))
        ax.set_xticklabels([matrix.genres[j] for j in matrix.col_order],
                           rotation=90, fontsize=6)
        ax.set_yticks(range(n_rows))
        ax.set_yticklabels([matrix.tags[i] for i in matrix.row_order], fontsize=6)
        fig.colorbar(im, ax=ax, shrink=0.6)
        fig.tight_layout()
        fig.savefig(svg_path, format="svg", metadata={"Date": None})
        plt.close(fig)


# ---------------------------------------------------------------------------
# File formats


def read_corpus(path: str | Path) -> list[CorpusItem]:
    """Line-delimited objects {item_id, genre, words: [[tag, ...], ...]}."""
    items = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"line {lineno}: invalid record: {exc}") from exc
        items.append(CorpusItem(
            item_id=str(obj["item_id"]),
            genre=str(obj["genre"]),
            word_estimates=tuple(frozenset(w) for w in obj.get("words", [])),
        ))
    return items


def write_orders(matrix: GenreImpressionMatrix, tag_path: str | Path,
                 genre_path: str | Path) -> None:
    """Sidecar files recording the row/column permutations as ordered name lists."""
    Path(tag_path).write_text(
        "\n".join(matrix.tags[i] for i in matrix.row_order) + "\n", encoding="utf-8")
    Path(genre_path).write_text(
        "\n".join(matrix.genres[j] for j in matrix.col_order) + "\n", encoding="utf-8")
