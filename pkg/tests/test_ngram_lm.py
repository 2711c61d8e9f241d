import math

import numpy as np
import pytest

from ctxlens.corpus import tokenize
from ctxlens.errors import ArtifactMismatchError, CtxlensError, UsageError
from ctxlens.ngram_lm import CacheNGramLM, distribution_summaries, predict, train_ngram
from ctxlens.vocab import Vocabulary


def doc_from(text, vocab, doc_id="d"):
    return tokenize(text, vocab, doc_id=doc_id)


def unigram_cache_reference(train_tokens, window, target, V, lam, alpha):
    """Direct count formulas for n_lm=1: the ~20-line independent oracle."""
    counts = [0] * V
    for t in train_tokens:
        counts[t] += 1
    C = sum(counts)
    T = sum(1 for c in counts if c)
    p_uni = (counts[target] + T / V) / (C + T)
    w_count = sum(1 for t in window if t == target)
    p_cache = (w_count + alpha) / (len(window) + alpha * V)
    return lam * p_uni + (1 - lam) * p_cache


class TestWittenBell:
    def test_three_observation_closed_form(self):
        # 'a a a' with a one-entry vocabulary: (3 + 1*(1/1)) / (3 + 1) = 1.
        v = Vocabulary(["a"])
        lm = train_ngram([doc_from("a a a", v)], v, n_lm=1, lam=0.5, alpha=1.0, n_cache=1)
        assert lm.backoff_dist(np.array([], dtype=np.int64))[0] == pytest.approx(1.0, abs=1e-15)

    def test_three_observation_closed_form_with_padding_vocab(self):
        # Same corpus, V=4: p(a) = (3 + 1*(1/4)) / (3 + 1), others (1/4)/4.
        v = Vocabulary(["a", "b", "c", "d"])
        lm = train_ngram([doc_from("a a a", v)], v, n_lm=1, lam=0.5, alpha=1.0, n_cache=1)
        p = lm.backoff_dist(np.array([], dtype=np.int64))
        assert p[0] == pytest.approx((3 + 0.25) / 4, abs=1e-15)
        assert p[1] == pytest.approx(0.25 / 4, abs=1e-15)
        assert p.sum() == pytest.approx(1.0, abs=1e-12)

    def test_zero_count_context_backs_off_to_uniform_floor(self):
        # A context never seen in training must fall through to the unigram,
        # whose own floor term keeps every token strictly positive.
        v = Vocabulary(["a", "b", "c"])
        lm = train_ngram([doc_from("a a a", v)], v, n_lm=3, lam=0.5, alpha=1.0, n_cache=1)
        ctx = np.array([v.id_of("b"), v.id_of("c")], dtype=np.int64)
        p = lm.backoff_dist(ctx)
        assert (p > 0).all()
        assert p.sum() == pytest.approx(1.0, abs=1e-12)

    def test_lambda_near_one_is_pure_backoff(self):
        v = Vocabulary(["a", "b"])
        docs = [doc_from("a b a b a b", v)]
        lam = 1 - 1e-9
        lm = train_ngram(docs, v, n_lm=2, lam=lam, alpha=1.0, n_cache=2)
        pure = train_ngram(docs, v, n_lm=2, lam=0.5, alpha=1.0, n_cache=2)
        ctx = np.array([0, 1, 0], dtype=np.int64)
        assert np.allclose(lm.distribution(ctx), pure.backoff_dist(ctx), atol=1e-5)


class TestCache:
    def test_window_continuation_count(self):
        # Window a b a b a, bigram cache, context ending in 'a': two a->b
        # continuations, the final 'a' has no successor. (2+1)/(2+2) = 0.75.
        v = Vocabulary(["a", "b"])
        lm = train_ngram([doc_from("a b", v)], v, n_lm=2, lam=0.5, alpha=1.0, n_cache=2)
        p = lm.cache_dist(np.array([0, 1, 0, 1, 0], dtype=np.int64))
        assert p[1] == pytest.approx(0.75, abs=1e-15)
        assert p[0] == pytest.approx(0.25, abs=1e-15)

    def test_brute_force_window_scan(self):
        rng = np.random.default_rng(7)
        v = Vocabulary(["a", "b", "c"])
        lm = train_ngram([doc_from("a b c a", v)], v, n_lm=3, lam=0.5, alpha=0.7, n_cache=3)
        for _ in range(50):
            window = rng.integers(0, 3, size=rng.integers(0, 30))
            window = np.asarray(window, dtype=np.int64)
            # oracle: scan every trigram in the window
            ctx = tuple(window[-2:].tolist()) if len(window) >= 2 else None
            counts = [0, 0, 0]
            total = 0
            if ctx is not None:
                for j in range(len(window) - 2):
                    if tuple(window[j:j + 2].tolist()) == ctx:
                        counts[int(window[j + 2])] += 1
                        total += 1
            if total == 0:
                counts = [int((window == t).sum()) for t in range(3)]
                total = len(window)
            expect = [(c + 0.7) / (total + 0.7 * 3) for c in counts]
            assert np.allclose(lm.cache_dist(window), expect, atol=1e-12)

    def test_deterministic_cache_limit(self):
        # Window full of one token, alpha and lambda tiny: p -> 1, entropy -> 0.
        v = Vocabulary(["t", "u"])
        lm = train_ngram([doc_from("t t t t", v)], v, n_lm=1, lam=1e-9,
                         alpha=1e-9, n_cache=1)
        window = np.zeros(10, dtype=np.int64)
        rec = lm.predict(window, 0)
        assert math.exp(rec.log_prob) > 0.999999
        assert rec.entropy < 1e-4
        assert rec.max_prob > 0.999999

    def test_cache_monotonicity(self):
        # Adding one more continuation observation of the target never lowers
        # its cache probability. The windows are built so the continuation
        # context already has at least one match: the first such observation
        # switches the estimator from the unigram fallback to continuation
        # counts, and that switch is allowed to move either way.
        rng = np.random.default_rng(11)
        v = Vocabulary(["a", "b", "c", "d"])
        lm = train_ngram([doc_from("a b c d", v)], v, n_lm=2, lam=0.5,
                         alpha=0.5, n_cache=2)
        for _ in range(200):
            size = int(rng.integers(1, 40))
            body = rng.integers(0, 4, size=size)
            target = int(rng.integers(0, 4))
            prev = int(rng.integers(0, 4))
            window = np.concatenate([[prev], body, [prev]]).astype(np.int64)
            p_before = lm.cache_dist(window)[target]
            # one more (prev -> target) continuation, inserted mid-window
            grown = np.concatenate([window[:-1], [prev, target], window[-1:]])
            p_after = lm.cache_dist(grown.astype(np.int64))[target]
            assert p_after >= p_before - 1e-12

    def test_cache_monotonicity_unigram_regime(self):
        # n_cache=1: appending the target to the window never lowers it.
        rng = np.random.default_rng(13)
        v = Vocabulary(["a", "b", "c"])
        lm = train_ngram([doc_from("a b c", v)], v, n_lm=1, lam=0.5,
                         alpha=0.5, n_cache=1)
        for _ in range(200):
            window = rng.integers(0, 3, size=int(rng.integers(0, 30))).astype(np.int64)
            target = int(rng.integers(0, 3))
            p_before = lm.cache_dist(window)[target]
            p_after = lm.cache_dist(np.append(window, target).astype(np.int64))[target]
            assert p_after >= p_before - 1e-12


class TestPredict:
    def test_empty_context_unigram(self):
        v = Vocabulary(["a", "b"])
        lam = 1 - 1e-9
        lm = train_ngram([doc_from("a a b", v)], v, n_lm=1, lam=lam, alpha=1.0, n_cache=1)
        rec = lm.predict(np.array([], dtype=np.int64), 0)
        # smoothed unigram: lam*(2 + 2*(1/2))/(3+2) + (1-lam)*uniform
        expect = lam * (2 + 1.0) / 5 + (1 - lam) * 0.5
        assert math.exp(rec.log_prob) == pytest.approx(expect, abs=1e-12)
        assert rec.context_len == 0

    def test_unigram_oracle_equivalence(self):
        # n_lm=1 predictions must match the direct count formulas to 1e-12
        # on every context over a 5-token toy corpus.
        v = Vocabulary(["a", "b"])
        doc = doc_from("a b a b a", v)
        lam, alpha = 0.65, 0.4
        lm = train_ngram([doc], v, n_lm=1, lam=lam, alpha=alpha, n_cache=1)
        train_tokens = doc.tokens.tolist()
        contexts = [train_tokens[:i] for i in range(len(train_tokens) + 1)]
        for ctx in contexts:
            for target in (0, 1):
                rec = lm.predict(np.asarray(ctx, dtype=np.int64), target)
                expect = unigram_cache_reference(train_tokens, ctx, target, 2, lam, alpha)
                assert math.exp(rec.log_prob) == pytest.approx(expect, abs=1e-12)

    def test_normalization_on_random_contexts(self):
        rng = np.random.default_rng(3)
        v = Vocabulary([f"t{i}" for i in range(17)])
        corpus_ids = rng.integers(0, 17, size=400)
        text = " ".join(v.token_of(int(i)) for i in corpus_ids)
        lm = train_ngram([doc_from(text, v)], v, n_lm=3, lam=0.7, alpha=0.5, n_cache=2)
        for _ in range(100):
            ctx = rng.integers(0, 17, size=int(rng.integers(0, 50))).astype(np.int64)
            assert abs(lm.distribution(ctx).sum() - 1.0) < 1e-9

    def test_provider_determinism(self):
        v = Vocabulary(["a", "b", "c"])
        lm = train_ngram([doc_from("a b c a b c", v)], v, n_lm=3, lam=0.7,
                         alpha=0.5, n_cache=2)
        ctx = np.array([0, 1, 2, 0], dtype=np.int64)
        a = lm.predict(ctx, 1, doc_id="x", token_index=4)
        b = lm.predict(ctx, 1, doc_id="x", token_index=4)
        assert a == b

    def test_record_invariants(self):
        rng = np.random.default_rng(5)
        v = Vocabulary([f"t{i}" for i in range(11)])
        ids = rng.integers(0, 11, size=300)
        text = " ".join(v.token_of(int(i)) for i in ids)
        lm = train_ngram([doc_from(text, v)], v)
        for _ in range(100):
            ctx = rng.integers(0, 11, size=int(rng.integers(0, 40))).astype(np.int64)
            target = int(rng.integers(0, 11))
            rec = lm.predict(ctx, target)
            p = math.exp(rec.log_prob)
            assert 0 < p <= 1
            assert rec.max_prob >= p - 1e-12
            assert -1e-12 <= rec.entropy <= math.log(11) + 1e-12
            # correct <=> max_prob equals the target's probability
            assert rec.correct == (abs(rec.max_prob - p) < 1e-12)

    def test_target_out_of_vocab_rejected(self):
        v = Vocabulary(["a"])
        lm = train_ngram([doc_from("a a", v)], v, n_lm=1, lam=0.5, alpha=1.0, n_cache=1)
        with pytest.raises(CtxlensError):
            lm.predict(np.array([], dtype=np.int64), 1)

    def test_module_level_predict_wrapper(self):
        v = Vocabulary(["a", "b"])
        lm = train_ngram([doc_from("a b a", v)], v, n_lm=2, lam=0.5, alpha=1.0, n_cache=2)
        rec = predict(lm, [0, 1], 0, doc_id="w", token_index=2)
        assert rec.doc_id == "w" and rec.token_index == 2 and rec.context_len == 2


class TestDistributionSummaries:
    def test_uniform(self):
        entropy, max_prob, argmax = distribution_summaries(np.full(100, 0.01))
        assert entropy == pytest.approx(math.log(100), abs=1e-12)
        assert max_prob == pytest.approx(0.01, abs=1e-15)
        assert argmax == 0  # ties resolve to the lowest id

    def test_peaked(self):
        dist = np.full(10, 1e-9)
        dist[3] = 1.0 - 9e-9
        entropy, max_prob, argmax = distribution_summaries(dist)
        assert argmax == 3
        assert max_prob > 0.999999
        assert entropy < 1e-6


class TestTrainValidation:
    def test_empty_corpus_rejected(self):
        v = Vocabulary(["a"])
        with pytest.raises(UsageError):
            train_ngram([], v)

    def test_n_cache_above_n_lm_rejected(self):
        v = Vocabulary(["a"])
        with pytest.raises(UsageError):
            train_ngram([doc_from("a", v)], v, n_lm=1, n_cache=2)

    def test_bad_lambda_rejected(self):
        v = Vocabulary(["a"])
        with pytest.raises(UsageError):
            train_ngram([doc_from("a", v)], v, lam=1.0)
        with pytest.raises(UsageError):
            train_ngram([doc_from("a", v)], v, lam=0.0)


class TestSerialization:
    def make(self):
        v = Vocabulary(["a", "b", "c"])
        docs = [doc_from("a b c a b a c c b a", v)]
        return v, train_ngram(docs, v, n_lm=3, lam=0.7, alpha=0.5, n_cache=2)

    def test_save_load_identical_predictions(self, tmp_path):
        v, lm = self.make()
        lm.save(tmp_path / "m.json", config_hash="h1")
        loaded = CacheNGramLM.load(tmp_path / "m.json", v, expected_config_hash="h1")
        rng = np.random.default_rng(2)
        for _ in range(30):
            ctx = rng.integers(0, 3, size=int(rng.integers(0, 15))).astype(np.int64)
            t = int(rng.integers(0, 3))
            assert lm.predict(ctx, t) == loaded.predict(ctx, t)

    def test_retrain_byte_identical_artifact(self, tmp_path):
        v, lm = self.make()
        _, lm2 = self.make()
        lm.save(tmp_path / "m1.json", config_hash="h")
        lm2.save(tmp_path / "m2.json", config_hash="h")
        assert (tmp_path / "m1.json").read_bytes() == (tmp_path / "m2.json").read_bytes()

    def test_vocab_hash_mismatch_rejected(self, tmp_path):
        v, lm = self.make()
        lm.save(tmp_path / "m.json")
        other = Vocabulary(["a", "b", "c", "d"])
        with pytest.raises(ArtifactMismatchError):
            CacheNGramLM.load(tmp_path / "m.json", other)

    def test_config_hash_mismatch_rejected(self, tmp_path):
        v, lm = self.make()
        lm.save(tmp_path / "m.json", config_hash="old")
        with pytest.raises(ArtifactMismatchError):
            CacheNGramLM.load(tmp_path / "m.json", v, expected_config_hash="new")
