"""Per-token covariates: N-gram recurrence, subword position, frequency prior.

For a token at index i under tier K, the "original" window is the K tokens
immediately before it and the "new" window is the K tokens before those.
The recurrence covariate counts occurrences of the token's trailing N-gram
(the N tokens ending at i) inside each window — overlapping occurrences
count, occurrences straddling the window boundary do not — and summarizes
them as the add-one-smoothed ratio (new + 1) / (original + 1). A ratio of
exactly 1 means the counts are equal.

Counting goes through a per-(document, N) index of gram start positions, so
bulk annotation is O(log) per query instead of rescanning the window; the
naive window scan remains the reference behavior and the two are held
together by tests.
"""

from bisect import bisect_left, bisect_right
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .corpus import Document, split_words, greedy_token_split
from .errors import CtxlensError, UsageError
from .sweep import PairedComparison
from .vocab import Vocabulary


@dataclass(frozen=True, slots=True)
class NGramStats:
    """Occurrence counts of one token's trailing N-gram in the two windows."""

    token_index: int
    n: int
    count_original: int
    count_new: int

    @property
    def ratio(self) -> float:
        return (self.count_new + 1) / (self.count_original + 1)


class NGramIndex:
    """Start positions of every N-gram in a document, grouped by gram."""

    def __init__(self, tokens: np.ndarray, n: int):
        if n < 1:
            raise UsageError(f"N must be >= 1, got {n}")
        self.n = n
        toks = tokens.tolist()
        positions: dict[tuple[int, ...], list[int]] = {}
        for s in range(len(toks) - n + 1):
            gram = tuple(toks[s:s + n])
            positions.setdefault(gram, []).append(s)
        self._positions = positions
        self._toks = toks

    def count_in_span(self, gram_start: int, lo: int, hi: int) -> int:
        """Occurrences of the gram starting at ``gram_start`` with start in [lo, hi]."""
        if hi < lo:
            return 0
        gram = tuple(self._toks[gram_start:gram_start + self.n])
        pos = self._positions.get(gram)
        if not pos:
            return 0
        return bisect_right(pos, hi) - bisect_left(pos, lo)


def ngram_stats(doc: Document, i: int, n: int, k: int,
                index: NGramIndex | None = None) -> NGramStats:
    """Count the trailing N-gram of token i in its original and new windows.

    Requires i >= 2K-1 and 1 <= N <= min(K, i+1). Window spans are
    [i-K, i-1] (original) and [i-2K, i-K-1] (new), clipped at the document
    start — clipping only matters at the boundary index i = 2K-1, where the
    new window is one token short.
    """
    if i < 2 * k - 1:
        raise UsageError(f"token index {i} < 2K-1 = {2 * k - 1}: windows not materialized")
    if n < 1 or n > k:
        raise UsageError(f"N must be in [1, K={k}], got {n}")
    if n > i + 1:
        raise UsageError(f"N={n} exceeds the {i + 1} tokens available up to index {i}")
    if i >= len(doc):
        raise UsageError(f"token index {i} out of range for doc of {len(doc)} tokens")
    if index is None:
        index = NGramIndex(doc.tokens, n)
    elif index.n != n:
        raise UsageError(f"index built for N={index.n}, queried with N={n}")
    gram_start = i - n + 1
    count_original = index.count_in_span(gram_start, max(0, i - k), i - n)
    count_new = index.count_in_span(gram_start, max(0, i - 2 * k), i - k - n)
    return NGramStats(token_index=i, n=n, count_original=count_original, count_new=count_new)


def subword_partition(doc: Document) -> tuple[np.ndarray, np.ndarray]:
    """Token indices that start a word vs. continuation-subword indices."""
    first = doc.within_word_pos == 0
    idx = np.arange(len(doc))
    return idx[first], idx[~first]


@dataclass(frozen=True)
class FrequencyTable:
    """Token-id counts over a reference corpus; absent ids count 0."""

    counts: dict[int, int]
    total: int

    def get(self, token_id: int) -> int:
        return self.counts.get(token_id, 0)

    def save(self, path: str | Path) -> None:
        """Two-column ``token_id<TAB>count`` file with a total-count header line."""
        with open(path, "w", encoding="utf-8") as f:
            f.write(f"#total\t{self.total}\n")
            for token_id in sorted(self.counts):
                f.write(f"{token_id}\t{self.counts[token_id]}\n")

    @classmethod
    def load(cls, path: str | Path) -> "FrequencyTable":
        with open(path, encoding="utf-8") as f:
            header = f.readline().strip()
            if not header.startswith("#total\t"):
                raise UsageError(f"{path}: missing '#total<TAB>count' header line")
            total = int(header.split("\t", 1)[1])
            counts = {}
            for line in f:
                if not line.strip():
                    continue
                tid, cnt = line.rstrip("\n").split("\t")
                counts[int(tid)] = int(cnt)
        return cls(counts=counts, total=total)


def build_frequency_table(corpus_paths: Iterable[str | Path],
                          vocab: Vocabulary) -> FrequencyTable:
    """Exact token counts over reference corpora, streamed line by line.

    Files are tokenized with the same vocabulary as the analysis documents;
    memory use is independent of corpus size.
    """
    counts: dict[int, int] = {}
    total = 0
    paths = list(corpus_paths)
    if not paths:
        raise UsageError("no frequency corpus paths given")
    for path in paths:
        try:
            f = open(path, encoding="utf-8")
        except OSError as e:
            raise UsageError(f"cannot read frequency corpus {path}: {e}") from None
        with f:
            for line in f:
                words, _ = split_words(line)
                for word in words:
                    for piece in greedy_token_split(word, vocab):
                        tid = vocab.id_of(piece)
                        counts[tid] = counts.get(tid, 0) + 1
                        total += 1
    return FrequencyTable(counts=counts, total=total)


def annotate_pairs(doc: Document, pairs: Sequence[PairedComparison], *,
                   n: int, k: int, freq_table: FrequencyTable | None = None,
                   index: NGramIndex | None = None) -> list[PairedComparison]:
    """Fill N-gram recurrence (at order ``n``, tier ``k``) and frequency fields."""
    if index is None:
        index = NGramIndex(doc.tokens, n)
    out = []
    for pair in pairs:
        if pair.doc_id != doc.doc_id:
            raise CtxlensError(f"pair for doc {pair.doc_id!r} annotated against {doc.doc_id!r}")
        stats = ngram_stats(doc, pair.token_index, n, k, index=index)
        out.append(replace(
            pair,
            ngram_n=n,
            ngram_count_original=stats.count_original,
            ngram_count_new=stats.count_new,
            delta_n=stats.ratio,
            freq=freq_table.get(int(doc.tokens[pair.token_index])) if freq_table else pair.freq,
        ))
    return out
