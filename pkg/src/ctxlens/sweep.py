"""Stride-chunked sliding-window evaluation over a document.

For a context length K and stride S, the document is cut into chunks of K
tokens starting at 0, S, 2S, ...; every token is predicted from its
predecessors *within its chunk*. The first chunk scores all K tokens (token
i from i context tokens); each later chunk scores only its last S tokens,
so their context lengths stay within [K-S, K). If the document length is
not aligned to the stride grid, one final chunk is anchored to end at the
last token and scores whatever suffix is still unscored. Scored positions
therefore partition the document, and the provider is called exactly once
per token regardless of S.

Comparisons between a tier K and its double 2K are aligned only for tokens
with at least 2K-1 predecessors, the range over which both the K-token
window and the K tokens preceding it ("original" and "new" context) are
available.
"""

import math
from collections.abc import Callable, Iterable, Sequence
from dataclasses import dataclass, field, replace

from .corpus import Document, PosClass
from .errors import CtxlensError, UsageError
from .records import PredictionRecord


@dataclass(frozen=True)
class SweepConfig:
    """Context tiers, per-tier strides, and the (K, 2K) pairs to compare."""

    context_lens: tuple[int, ...]
    stride: dict[int, int]
    comparison_pairs: tuple[tuple[int, int], ...]

    def __post_init__(self):
        ks = self.context_lens
        if not ks:
            raise UsageError("context_lens is empty")
        if list(ks) != sorted(set(ks)):
            raise UsageError(f"context_lens must be strictly ascending, got {ks}")
        for k in ks:
            if k < 2 or k % 2:
                raise UsageError(f"every context length must be even and >= 2, got {k}")
            s = self.stride.get(k)
            if s is None:
                raise UsageError(f"no stride configured for K={k}")
            if not 1 <= s <= k:
                raise UsageError(f"stride for K={k} must be in [1, {k}], got {s}")
        for k, k2 in self.comparison_pairs:
            if k2 != 2 * k:
                raise UsageError(f"comparison pair ({k}, {k2}) is not (K, 2K)")
            if k not in ks or k2 not in ks:
                raise UsageError(f"comparison pair ({k}, {k2}) not covered by context_lens")

    @classmethod
    def from_tiers(cls, context_lens: Sequence[int], *,
                   strides: dict[int, int] | None = None,
                   stride_ratio: int = 200) -> "SweepConfig":
        """Build a config with stride S = max(1, K // stride_ratio) per tier
        (overridable per K) and every (K, 2K) pair present in the tiers."""
        ks = tuple(int(k) for k in context_lens)
        stride = {k: max(1, k // stride_ratio) for k in ks}
        if strides:
            stride.update({int(k): int(s) for k, s in strides.items()})
        pairs = tuple((k, 2 * k) for k in ks if 2 * k in ks)
        return cls(context_lens=ks, stride=stride, comparison_pairs=pairs)


@dataclass(frozen=True)
class ChunkSpan:
    """One chunk: its start plus the half-open range of positions it scores."""

    chunk_start: int
    score_start: int
    score_end: int


def chunk_spans(doc_len: int, k: int, s: int) -> list[ChunkSpan]:
    """Chunk layout for one (document length, K, S); scored ranges tile [0, doc_len)."""
    if doc_len < k:
        raise UsageError(f"document of {doc_len} tokens is shorter than K={k}")
    spans = [ChunkSpan(0, 0, k)]
    start = s
    while start + k <= doc_len:
        spans.append(ChunkSpan(start, start + k - s, start + k))
        start += s
    covered = spans[-1].score_end
    if covered < doc_len:
        # Tail not aligned to the stride grid: anchor a final chunk at the end.
        spans.append(ChunkSpan(doc_len - k, covered, doc_len))
    return spans


@dataclass(frozen=True)
class SweepResult:
    """All per-token records for one document at one context tier."""

    doc_id: str
    k: int
    records: tuple[PredictionRecord, ...]  # records[i].token_index == i
    ppl: float = field(default=float("nan"))

    @staticmethod
    def build(doc_id: str, k: int, records: Sequence[PredictionRecord]) -> "SweepResult":
        recs = tuple(sorted(records, key=lambda r: r.token_index))
        if [r.token_index for r in recs] != list(range(len(recs))):
            raise CtxlensError(f"records for doc {doc_id!r} K={k} do not cover every token once")
        ppl = math.fsum(-r.log_prob for r in recs) / len(recs)
        return SweepResult(doc_id=doc_id, k=k, records=recs, ppl=ppl)


def run_sweep(provider, doc: Document, config: SweepConfig,
              warn: Callable[[str], None] | None = None) -> list[SweepResult]:
    """Evaluate the document at every configured tier it is long enough for.

    ``provider`` needs a ``score_token(doc_id, tier, token_index, context,
    target) -> PredictionRecord`` method; the built-in LM and the file-backed
    record store both qualify. Tiers longer than the document are skipped
    (reported through ``warn``).
    """
    results = []
    tokens = doc.tokens
    n = len(tokens)
    for k in config.context_lens:
        if n < k:
            if warn is not None:
                warn(f"doc {doc.doc_id!r}: {n} tokens < K={k}; tier skipped")
            continue
        records: list[PredictionRecord] = []
        for span in chunk_spans(n, k, config.stride[k]):
            for i in range(span.score_start, span.score_end):
                context = tokens[span.chunk_start:i]
                rec = provider.score_token(doc.doc_id, k, i, context, int(tokens[i]))
                if rec.context_len != len(context):
                    rec = replace(rec, context_len=len(context))
                records.append(rec)
        results.append(SweepResult.build(doc.doc_id, k, records))
    return results


def ppl_table(results: Iterable[SweepResult]) -> dict[int, dict]:
    """Per-document and corpus-mean token-perplexity by tier.

    The corpus value is the unweighted mean of per-document means (documents
    count equally regardless of length).
    """
    by_k: dict[int, dict[str, float]] = {}
    for res in results:
        docs = by_k.setdefault(res.k, {})
        if res.doc_id in docs:
            raise UsageError(f"duplicate sweep result for doc {res.doc_id!r} K={res.k}")
        docs[res.doc_id] = res.ppl
    if not by_k:
        raise UsageError("no sweep results to tabulate")
    return {
        k: {"docs": dict(sorted(docs.items())),
            "corpus": math.fsum(docs.values()) / len(docs)}
        for k, docs in sorted(by_k.items())
    }


@dataclass(frozen=True, slots=True)
class PairedComparison:
    """One token's predictions aligned across a (K, 2K) tier pair.

    ``delta_nll`` is the drop in token-perplexity when the context doubles:
    (-log p_K) - (-log p_2K); positive means the longer context helped.
    ``abs_delta_nll`` is its magnitude. N-gram recurrence counts and the
    token-frequency prior are filled in by the annotator.
    """

    doc_id: str
    token_index: int
    pos_class: PosClass
    is_first_subword: bool
    delta_nll: float
    abs_delta_nll: float
    log_prob_k: float
    log_prob_2k: float
    entropy_k: float
    entropy_2k: float
    max_prob_k: float
    max_prob_2k: float
    correct_k: bool
    correct_2k: bool
    ngram_n: int | None = None
    ngram_count_original: int | None = None
    ngram_count_new: int | None = None
    delta_n: float | None = None
    freq: int | None = None


def align_comparisons(result_k: SweepResult, result_2k: SweepResult,
                      doc: Document) -> list[PairedComparison]:
    """Pair the two tiers' records for every token with 2K-1 predecessors."""
    if result_k.doc_id != result_2k.doc_id or result_k.doc_id != doc.doc_id:
        raise UsageError(
            f"document mismatch: {result_k.doc_id!r} / {result_2k.doc_id!r} / {doc.doc_id!r}"
        )
    if result_2k.k != 2 * result_k.k:
        raise UsageError(f"tier mismatch: {result_2k.k} is not twice {result_k.k}")
    k = result_k.k
    pairs = []
    for i in range(2 * k - 1, len(doc)):
        a = result_k.records[i]
        b = result_2k.records[i]
        delta = (-a.log_prob) - (-b.log_prob)
        pairs.append(PairedComparison(
            doc_id=doc.doc_id,
            token_index=i,
            pos_class=doc.pos_class(i),
            is_first_subword=bool(doc.within_word_pos[i] == 0),
            delta_nll=delta,
            abs_delta_nll=abs(delta),
            log_prob_k=a.log_prob,
            log_prob_2k=b.log_prob,
            entropy_k=a.entropy,
            entropy_2k=b.entropy,
            max_prob_k=a.max_prob,
            max_prob_2k=b.max_prob,
            correct_k=a.correct,
            correct_2k=b.correct,
        ))
    return pairs
