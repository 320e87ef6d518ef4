"""Name canonicalization, assay-method qualifier splitting, and PMI synonym ranking.

Synonym files are tab-separated: the most frequent (canonical) name in the
first column, other observed names in the remaining columns. Unknown names
pass through unchanged and are routed to a curation report, never dropped or
fuzzily merged.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from pathlib import Path
from typing import Iterable, Optional

_DATA_DIR = Path(__file__).parent / "data"

METHOD_QUALIFIERS = ("Sequential", "Competitive", "Quantitative")

#: Score for token pairs that never co-occur in the corpus. Kept as an
#: explicit sentinel constant (orderable, never NaN).
NEVER_CO_OCCURS = float("-inf")

_TOKEN_RE = re.compile(r"\W+")
_NORM_RE = re.compile(r"[\s-]+")


@dataclass
class SynonymGroup:
    canonical: str
    variants: list[str]
    kind: str  # drug | test | matrix

    def __post_init__(self) -> None:
        lowered = [v.lower() for v in self.variants]
        if self.canonical.lower() not in lowered:
            self.variants.insert(0, self.canonical)
        if len(set(v.lower() for v in self.variants)) != len(self.variants):
            raise ValueError(f"duplicate variants in group {self.canonical!r}")


_DEFAULT_FILES = {"drug": "drugs.tsv", "test": "tests.tsv", "matrix": "matrices.tsv"}


def load_groups(kind: str, path: Path | str | None = None) -> list[SynonymGroup]:
    path = Path(path) if path else _DATA_DIR / _DEFAULT_FILES[kind]
    groups = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        canonical, *variants = [c for c in line.split("\t") if c.strip()]
        groups.append(SynonymGroup(canonical, variants, kind))
    return groups


def save_groups(groups: Iterable[SynonymGroup], path: Path | str) -> None:
    lines = ["\t".join([g.canonical, *[v for v in g.variants if v != g.canonical]]) for g in groups]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _norm(name: str) -> str:
    return _NORM_RE.sub(" ", name).strip().lower()


def canonicalize(name: str, groups: list[SynonymGroup]) -> tuple[str, bool]:
    """Replace a name by its group's most frequent variant.

    Case-insensitive, whitespace/hyphen-normalized lookup. A miss returns the
    input unchanged with matched=False; the caller keeps the record and flags
    it for curation.
    """
    key = _norm(name)
    for group in groups:
        for variant in group.variants:
            if _norm(variant) == key:
                return group.canonical, True
    return name, False


def split_method_qualifier(raw_name: str) -> tuple[str, Optional[str]]:
    """Split an assay-method qualifier out of a combined name field.

    Handles the qualifier as a comma-separated prefix or suffix, or as the
    leading token ("Quantitative Charm II Tetracycline").
    """
    name = raw_name.strip()
    for qual in METHOD_QUALIFIERS:
        m = re.match(rf"^{qual}\s*,\s*(.+)$", name, re.IGNORECASE)
        if m:
            return m.group(1).strip(), qual
        m = re.match(rf"^(.+?)\s*,\s*{qual}$", name, re.IGNORECASE)
        if m:
            return m.group(1).strip(), qual
        m = re.match(rf"^{qual}\s+(.+)$", name, re.IGNORECASE)
        if m:
            return m.group(1).strip(), qual
    return name, None


def tokenize(text: str) -> list[str]:
    """Lowercase, split on non-word characters, drop pure numbers."""
    return [t for t in _TOKEN_RE.split(text.lower()) if t and not t.isdigit()]


@dataclass
class CooccurrenceStats:
    """Unigram and unordered-pair context counts over N contexts."""

    unigram_counts: Counter = field(default_factory=Counter)
    pair_counts: Counter = field(default_factory=Counter)
    total_contexts: int = 0

    def add_context(self, tokens: Iterable[str]) -> None:
        uniq = sorted(set(tokens))
        self.total_contexts += 1
        self.unigram_counts.update(uniq)
        for x, y in combinations(uniq, 2):
            self.pair_counts[(x, y)] += 1

    def pair(self, x: str, y: str) -> int:
        if x == y:
            return self.unigram_counts[x]
        key = (x, y) if x <= y else (y, x)
        return self.pair_counts[key]

    def merge(self, other: "CooccurrenceStats") -> "CooccurrenceStats":
        merged = CooccurrenceStats(
            self.unigram_counts + other.unigram_counts,
            self.pair_counts + other.pair_counts,
            self.total_contexts + other.total_contexts,
        )
        return merged


def build_stats(contexts: Iterable[Iterable[str]]) -> CooccurrenceStats:
    """One context per extracted table: the set of its cell tokens."""
    stats = CooccurrenceStats()
    for ctx in contexts:
        stats.add_context(ctx)
    return stats


def pmi(x: str, y: str, stats: CooccurrenceStats) -> float:
    """log2 of observed-vs-independent co-occurrence probability.

    Returns NEVER_CO_OCCURS when the pair count is zero. Zero unigram counts
    are a domain error.
    """
    cx = stats.unigram_counts[x]
    cy = stats.unigram_counts[y]
    if cx == 0 or cy == 0:
        raise ValueError(f"token with zero unigram count: {x if cx == 0 else y!r}")
    cxy = stats.pair(x, y)
    if cxy == 0:
        return NEVER_CO_OCCURS
    n = stats.total_contexts
    return math.log2((cxy / n) / ((cx / n) * (cy / n)))


def rank_synonym_candidates(
    unknown: str, groups: list[SynonymGroup], stats: CooccurrenceStats
) -> list[tuple[str, float]]:
    """Score each canonical by the best token-level PMI against the unknown name.

    Advisory output for the curation report; never auto-applied. Descending by
    score, ties broken by canonical name ascending.
    """
    unknown_tokens = [t for t in tokenize(unknown) if stats.unigram_counts[t] > 0]
    scored = []
    for group in groups:
        best = NEVER_CO_OCCURS
        group_tokens = {
            t
            for v in group.variants
            for t in tokenize(v)
            if stats.unigram_counts[t] > 0
        }
        for ut in unknown_tokens:
            for gt in group_tokens:
                score = pmi(ut, gt, stats)
                if score > best:
                    best = score
        scored.append((group.canonical, best))
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored


def find_test_name(text: str, groups: list[SynonymGroup]) -> Optional[str]:
    """Longest synonym-table test name occurring in free text, canonicalized."""
    norm_text = " " + _norm(text) + " "
    best: tuple[int, str] | None = None
    for group in groups:
        for variant in group.variants:
            needle = _norm(variant)
            idx = norm_text.find(" " + needle + " ")
            # word-boundary approximation: normalized needle flanked by spaces
            if idx >= 0 and (best is None or len(needle) > best[0]):
                best = (len(needle), group.canonical)
    return best[1] if best else None


def strip_trailing_test_word(title: str) -> str:
    """Page titles like "SNAP NBL Test" name the assay; drop the trailing noun."""
    return re.sub(r"\s+tests?\s*$", "", title.strip(), flags=re.IGNORECASE)
