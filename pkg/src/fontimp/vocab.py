"""Impression-tag vocabulary: normalization, merge rules, frequency filtering."""

from __future__ import annotations

import csv
import io
import json
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

_WHITESPACE = re.compile(r"\s+")


class RuleValidationError(ValueError):
    """A merge-rule file is structurally invalid (overlap or cycle)."""


class VocabError(ValueError):
    pass


def normalize_tag(tag: str) -> str:
    """Lowercase, trim, and collapse internal whitespace."""
    return _WHITESPACE.sub(" ", tag.strip().lower())


@dataclass(frozen=True)
class RawTagRecord:
    """One font and its raw (free-form) tag list, duplicates collapsed."""

    font_id: str
    tags: tuple[str, ...]

    @classmethod
    def make(cls, font_id: str, tags: Iterable[str]) -> "RawTagRecord":
        if not font_id:
            raise VocabError("font_id must be non-empty")
        seen: list[str] = []
        for raw in tags:
            t = normalize_tag(raw)
            if t and t not in seen:
                seen.append(t)
        return cls(font_id=font_id, tags=tuple(seen))


@dataclass(frozen=True)
class MergeRules:
    """Spelling-variant merges (many-to-one) and compound-tag expansions.

    variant_map rewrites a raw tag to its canonical form; compound_map
    rewrites a raw tag to two or more canonical components.
    """

    variant_map: Mapping[str, str] = field(default_factory=dict)
    compound_map: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        variants = {normalize_tag(k): normalize_tag(v) for k, v in self.variant_map.items()}
        compounds = {
            normalize_tag(k): tuple(normalize_tag(c) for c in v)
            for k, v in self.compound_map.items()
        }
        for key in variants:
            if key in compounds:
                raise RuleValidationError(f"tag {key!r} appears in both variants and compounds")
        for key, target in variants.items():
            if target in variants:
                raise RuleValidationError(
                    f"variant target {target!r} (from {key!r}) is itself a variant key"
                )
        for key, components in compounds.items():
            if len(components) < 2:
                raise RuleValidationError(f"compound {key!r} must expand to at least 2 tags")
        object.__setattr__(self, "variant_map", variants)
        object.__setattr__(self, "compound_map", compounds)

    @classmethod
    def empty(cls) -> "MergeRules":
        return cls({}, {})

    def expand(self, raw_tag: str) -> tuple[str, ...]:
        """Canonical tags induced by one raw tag (before vocabulary filtering)."""
        t = normalize_tag(raw_tag)
        if not t:
            return ()
        t = self.variant_map.get(t, t)
        if t in self.compound_map:
            return tuple(self.variant_map.get(c, c) for c in self.compound_map[t])
        return (t,)


@dataclass(frozen=True)
class TagVocabulary:
    """Canonical tag set, ordered by descending count then tag name."""

    tags: tuple[str, ...]
    counts: Mapping[str, int]

    def __post_init__(self):
        if len(set(self.tags)) != len(self.tags):
            raise VocabError("vocabulary tags must be unique")

    @property
    def size(self) -> int:
        return len(self.tags)

    def __contains__(self, tag: str) -> bool:
        return tag in self.counts

    def __iter__(self):
        return iter(self.tags)

    def index(self) -> dict[str, int]:
        return {t: i for i, t in enumerate(self.tags)}

    @classmethod
    def from_counts(cls, counts: Mapping[str, int]) -> "TagVocabulary":
        order = sorted(counts, key=lambda t: (-counts[t], t))
        return cls(tags=tuple(order), counts=dict(counts))


def expand_tags(tags: Iterable[str], rules: MergeRules) -> list[str]:
    """All canonical tags induced by a raw tag list, order-preserving, deduplicated."""
    out: list[str] = []
    for raw in tags:
        for t in rules.expand(raw):
            if t not in out:
                out.append(t)
    return out


def build_vocabulary(
    records: Sequence[RawTagRecord],
    rules: MergeRules,
    top_n: int,
    min_count: int = 24,
) -> TagVocabulary:
    """Count fonts per canonical tag, keep the top_n most frequent, drop rare tags.

    Ordering is deterministic: descending count, ties broken by tag name.
    """
    if not records:
        raise VocabError("cannot build a vocabulary from zero records")
    if top_n < 1:
        raise VocabError("top_n must be positive")
    counter: Counter[str] = Counter()
    for rec in records:
        counter.update(set(expand_tags(rec.tags, rules)))
    ranked = sorted(counter, key=lambda t: (-counter[t], t))
    kept = [t for t in ranked[:top_n] if counter[t] >= min_count]
    return TagVocabulary(tags=tuple(kept), counts={t: counter[t] for t in kept})


def canonicalize(tags: Iterable[str], rules: MergeRules, vocab: TagVocabulary) -> frozenset[str]:
    """In-vocabulary canonical tag set for a raw tag list; out-of-vocabulary tags drop."""
    return frozenset(t for t in expand_tags(tags, rules) if t in vocab)


def count_out_of_vocab(tags: Iterable[str], rules: MergeRules, vocab: TagVocabulary) -> int:
    """Number of induced canonical tags that fell outside the vocabulary."""
    expanded = expand_tags(tags, rules)
    return sum(1 for t in expanded if t not in vocab)


# ---------------------------------------------------------------------------
# File formats


def read_tag_records(path: str | Path) -> list[RawTagRecord]:
    """Read `font_id, tag, tag, ...` delimiter-separated lines or JSONL objects."""
    records = []
    text = Path(path).read_text(encoding="utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("{"):
            obj = json.loads(line)
            records.append(RawTagRecord.make(obj["font_id"], obj.get("tags", [])))
        else:
            row = next(csv.reader(io.StringIO(line), skipinitialspace=True))
            if not row or not row[0].strip():
                raise VocabError(f"line {lineno}: missing font_id")
            records.append(RawTagRecord.make(row[0].strip(), row[1:]))
    return records


def read_merge_rules(path: str | Path) -> MergeRules:
    """Read a rules document with `variants` and `compounds` sections."""
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    unknown = set(doc) - {"variants", "compounds"}
    if unknown:
        raise RuleValidationError(f"unknown rule sections: {sorted(unknown)}")
    return MergeRules(
        variant_map=doc.get("variants", {}),
        compound_map={k: tuple(v) for k, v in doc.get("compounds", {}).items()},
    )


def write_vocabulary(vocab: TagVocabulary, path: str | Path) -> None:
    lines = [f"{t},{vocab.counts[t]}" for t in vocab.tags]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_vocabulary(path: str | Path) -> TagVocabulary:
    counts: dict[str, int] = {}
    tags: list[str] = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        tag, _, count = line.rpartition(",")
        tags.append(tag)
        counts[tag] = int(count)
    return TagVocabulary(tags=tuple(tags), counts=counts)
