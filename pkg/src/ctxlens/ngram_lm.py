"""Cache-augmented backoff n-gram language model.

The predictive distribution for a target given an explicit context window is

    P(w | window) = lam * p_backoff(w | last n_lm-1 tokens)
                  + (1 - lam) * p_cache(w | window)

``p_backoff`` is a Witten-Bell backoff model estimated once from a training
corpus: at each order the observed successor counts are blended with the
next-shorter order using weight T/(c+T), where c is the context's total
count and T its number of distinct successors; the chain bottoms out at a
count-smoothed unigram whose own floor is the uniform distribution over the
vocabulary. ``p_cache`` is re-estimated from the current window alone: the
additively smoothed relative frequency of successors of the window's last
n_cache-1 tokens among the window's n_cache-grams, falling back to the
smoothed unigram frequency of the window when that context never occurs in
it. The cache term is what makes predictions genuinely depend on the whole
window, so probabilities keep improving as the window grows over text with
recurring patterns.

Both mixture components sum to one and are strictly positive, so the model
never assigns zero probability. All logs are natural; entropies are nats.
"""

import json
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import Document
from .errors import ArtifactMismatchError, CtxlensError, UsageError
from .records import PredictionRecord
from .vocab import Vocabulary

TOKENIZER_NAME = "greedy_longest_prefix"


@dataclass(frozen=True)
class _ContextEntry:
    succ_ids: np.ndarray     # int64, sorted
    succ_counts: np.ndarray  # float64
    total: float             # c(h): total continuations observed
    distinct: int            # T(h): number of distinct successors


def distribution_summaries(dist: np.ndarray) -> tuple[float, float, int]:
    """(entropy in nats, max probability, argmax id) of a distribution.

    Ties on the maximum resolve to the lowest id, so summaries are
    deterministic.
    """
    entropy = float(-np.sum(dist * np.log(dist)))
    argmax = int(np.argmax(dist))
    return entropy, float(dist[argmax]), argmax


class CacheNGramLM:
    """Witten-Bell backoff LM interpolated with an in-window cache."""

    def __init__(self, vocab: Vocabulary, n_lm: int, lam: float, alpha: float,
                 n_cache: int, unigram_counts: np.ndarray,
                 tables: dict[int, dict[tuple[int, ...], _ContextEntry]]):
        if n_lm < 1:
            raise UsageError(f"n_lm must be >= 1, got {n_lm}")
        if not 0.0 < lam < 1.0:
            raise UsageError(f"interpolation weight must be in (0, 1), got {lam}")
        if alpha <= 0.0:
            raise UsageError(f"cache smoothing alpha must be > 0, got {alpha}")
        if not 1 <= n_cache <= n_lm:
            raise UsageError(f"n_cache must be in [1, n_lm={n_lm}], got {n_cache}")
        self.vocab = vocab
        self.n_lm = n_lm
        self.lam = lam
        self.alpha = alpha
        self.n_cache = n_cache
        self._unigram_counts = np.asarray(unigram_counts, dtype=np.float64)
        self._tables = tables
        V = len(vocab)
        total = float(self._unigram_counts.sum())
        distinct = int(np.count_nonzero(self._unigram_counts))
        if total <= 0:
            raise UsageError("model has no unigram counts")
        # Witten-Bell unigram with a uniform floor: strictly positive.
        self._p1 = (self._unigram_counts + distinct / V) / (total + distinct)

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    def backoff_dist(self, context: np.ndarray) -> np.ndarray:
        """Backoff distribution given (at most) the last n_lm-1 context tokens."""
        p = self._p1
        copied = False
        max_order = min(self.n_lm, len(context) + 1)
        for order in range(2, max_order + 1):
            ctx = tuple(int(t) for t in context[len(context) - (order - 1):])
            entry = self._tables.get(order, {}).get(ctx)
            if entry is None:
                continue  # unseen context: pure backoff to the shorter order
            denom = entry.total + entry.distinct
            q = p * (entry.distinct / denom)
            q[entry.succ_ids] += entry.succ_counts / denom
            p = q
            copied = True
        return p if copied else p.copy()

    def cache_dist(self, window: np.ndarray) -> np.ndarray:
        """Additively smoothed successor frequencies estimated from the window."""
        V = self.vocab_size
        a = self.alpha
        L = len(window)
        n = self.n_cache
        if n >= 2 and L >= n:
            ctx = window[L - (n - 1):]
            m = L - n + 1  # candidate gram start positions
            mask = np.ones(m, dtype=bool)
            for off in range(n - 1):
                mask &= window[off:off + m] == ctx[off]
            succ = window[n - 1:][mask]
            if succ.size:
                counts = np.bincount(succ, minlength=V).astype(np.float64)
                return (counts + a) / (succ.size + a * V)
        # No matching continuation context (or n_cache == 1): smoothed
        # unigram frequency over the window. Empty window gives uniform.
        counts = np.bincount(window, minlength=V).astype(np.float64) if L else np.zeros(V)
        return (counts + a) / (L + a * V)

    def distribution(self, context: np.ndarray) -> np.ndarray:
        context = np.asarray(context, dtype=np.int64)
        if context.size and int(context.max()) >= self.vocab_size:
            raise CtxlensError(f"context contains id >= vocab size {self.vocab_size}")
        return (self.lam * self.backoff_dist(context)
                + (1.0 - self.lam) * self.cache_dist(context))

    def predict(self, context: np.ndarray, target: int, *,
                doc_id: str = "", token_index: int = 0) -> PredictionRecord:
        """Score one target token given an explicit context window."""
        if not 0 <= target < self.vocab_size:
            raise CtxlensError(f"target id {target} outside vocabulary of size {self.vocab_size}")
        dist = self.distribution(context)
        entropy, max_prob, argmax = distribution_summaries(dist)
        return PredictionRecord(
            doc_id=doc_id,
            token_index=token_index,
            context_len=int(len(context)),
            log_prob=float(np.log(dist[target])),
            entropy=entropy,
            max_prob=max_prob,
            argmax_id=argmax,
            correct=argmax == target,
        )

    # Provider interface used by the sweep engine.
    def score_token(self, doc_id: str, tier: int, token_index: int,
                    context: np.ndarray, target: int) -> PredictionRecord:
        return self.predict(context, target, doc_id=doc_id, token_index=token_index)

    def save(self, path: str | Path, *, config_hash: str = "") -> None:
        """Serialize counts and hyperparameters; deterministic byte-for-byte."""
        orders = {}
        for order in sorted(self._tables):
            rows = []
            for ctx in sorted(self._tables[order]):
                e = self._tables[order][ctx]
                rows.append([list(ctx), [[int(s), float(c)] for s, c in
                                         zip(e.succ_ids.tolist(), e.succ_counts.tolist())]])
            orders[str(order)] = rows
        payload = {
            "format": "ctxlens-cache-ngram-lm",
            "version": 1,
            "n_lm": self.n_lm,
            "lambda": self.lam,
            "alpha": self.alpha,
            "n_cache": self.n_cache,
            "vocab_sha": self.vocab.sha256,
            "vocab_size": self.vocab_size,
            "config_hash": config_hash,
            "unigram_counts": self._unigram_counts.tolist(),
            "orders": orders,
        }
        path = Path(path)
        tmp = path.with_name(path.name + ".tmp")
        with open(tmp, "w", encoding="utf-8") as f:
            json.dump(payload, f, sort_keys=True, separators=(",", ":"))
            f.write("\n")
        os.replace(tmp, path)

    @classmethod
    def load(cls, path: str | Path, vocab: Vocabulary,
             *, expected_config_hash: str | None = None) -> "CacheNGramLM":
        with open(path, encoding="utf-8") as f:
            payload = json.load(f)
        if payload.get("format") != "ctxlens-cache-ngram-lm":
            raise ArtifactMismatchError(f"{path} is not a model artifact")
        if payload["vocab_sha"] != vocab.sha256:
            raise ArtifactMismatchError(
                f"{path}: model was trained with a different vocabulary "
                f"(stored sha {payload['vocab_sha'][:12]}..., given {vocab.sha256[:12]}...)"
            )
        if expected_config_hash is not None and payload.get("config_hash") != expected_config_hash:
            raise ArtifactMismatchError(
                f"{path}: model artifact belongs to config {payload.get('config_hash')!r}, "
                f"current config is {expected_config_hash!r}"
            )
        tables: dict[int, dict[tuple[int, ...], _ContextEntry]] = {}
        for order_str, rows in payload["orders"].items():
            table = {}
            for ctx, succ in rows:
                ids = np.asarray([s for s, _ in succ], dtype=np.int64)
                counts = np.asarray([c for _, c in succ], dtype=np.float64)
                table[tuple(ctx)] = _ContextEntry(
                    succ_ids=ids, succ_counts=counts,
                    total=float(counts.sum()), distinct=len(ids),
                )
            tables[int(order_str)] = table
        return cls(
            vocab=vocab,
            n_lm=int(payload["n_lm"]),
            lam=float(payload["lambda"]),
            alpha=float(payload["alpha"]),
            n_cache=int(payload["n_cache"]),
            unigram_counts=np.asarray(payload["unigram_counts"], dtype=np.float64),
            tables=tables,
        )


def train_ngram(corpus: list[Document], vocab: Vocabulary, *, n_lm: int = 3,
                lam: float = 0.7, alpha: float = 0.5, n_cache: int = 2) -> CacheNGramLM:
    """Tabulate backoff counts for orders 1..n_lm over the corpus.

    Counts never cross document boundaries. Hyperparameter domains:
    n_lm >= 1, 0 < lam < 1, alpha > 0, 1 <= n_cache <= n_lm.
    """
    if not corpus:
        raise UsageError("training corpus is empty")
    if n_cache > n_lm:
        raise UsageError(f"n_cache {n_cache} exceeds n_lm {n_lm}")
    V = len(vocab)
    unigram = np.zeros(V, dtype=np.float64)
    raw: dict[int, dict[tuple[int, ...], dict[int, float]]] = {
        order: {} for order in range(2, n_lm + 1)
    }
    for doc in corpus:
        ids = doc.tokens
        counts = np.bincount(ids, minlength=V)
        if len(counts) > V:
            raise CtxlensError(f"document {doc.doc_id!r} has token ids outside the vocabulary")
        unigram += counts
        toks = ids.tolist()
        for order in range(2, n_lm + 1):
            table = raw[order]
            for i in range(order - 1, len(toks)):
                ctx = tuple(toks[i - order + 1:i])
                succ = toks[i]
                bucket = table.get(ctx)
                if bucket is None:
                    bucket = table[ctx] = {}
                bucket[succ] = bucket.get(succ, 0.0) + 1.0
    if unigram.sum() == 0:
        raise UsageError("training corpus contains no tokens")
    tables: dict[int, dict[tuple[int, ...], _ContextEntry]] = {}
    for order, table in raw.items():
        frozen = {}
        for ctx, bucket in table.items():
            ids_sorted = sorted(bucket)
            counts_arr = np.asarray([bucket[s] for s in ids_sorted], dtype=np.float64)
            frozen[ctx] = _ContextEntry(
                succ_ids=np.asarray(ids_sorted, dtype=np.int64),
                succ_counts=counts_arr,
                total=float(counts_arr.sum()),
                distinct=len(ids_sorted),
            )
        tables[order] = frozen
    return CacheNGramLM(vocab, n_lm, lam, alpha, n_cache, unigram, tables)


def predict(lm: CacheNGramLM, context, target: int, *,
            doc_id: str = "", token_index: int = 0) -> PredictionRecord:
    """Module-level convenience wrapper around :meth:`CacheNGramLM.predict`."""
    return lm.predict(np.asarray(context, dtype=np.int64), int(target),
                      doc_id=doc_id, token_index=token_index)


def nll(record: PredictionRecord) -> float:
    """Token-level negative log probability (the per-token 'perplexity')."""
    return -record.log_prob


def mean_nll(log_probs) -> float:
    """Mean negative log probability; exact summation for reproducibility."""
    vals = list(log_probs)
    if not vals:
        raise CtxlensError("mean over zero records")
    return math.fsum(-lp for lp in vals) / len(vals)
