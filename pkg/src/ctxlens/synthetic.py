"""Deterministic synthetic corpora with long-range recurring motifs.

Desk-scale stand-in for book-length evaluation text: a pseudo-language of
syllable words (plus real function words and sentence punctuation) in which
multi-word motifs recur throughout each document at a mix of short and long
gaps. Window-sensitive models keep finding new motif repetitions as their
context grows, which is exactly the regime the diagnostics are built to
measure. Output is plain text plus a vocabulary whose entries are syllables
and function words, so words split into first/continuation subword tokens.

Everything is driven by a seeded generator: the same arguments always
produce byte-identical corpora.
"""

from pathlib import Path

import numpy as np

from .vocab import Vocabulary

_SYLLABLES = [
    "ba", "do", "fi", "gu", "ka", "le", "mi", "no", "pa", "re",
    "si", "tu", "va", "wo", "zy", "cha", "den", "gor", "lum", "mar",
    "nex", "pol", "qur", "ros", "tam", "vel", "wen", "xor", "yel", "zan",
]
_SUFFIXES = ["ly", "ous", "ful", "ive"]
_GLUE = ["the", "of", "and", "to", "in", "a", "is", "on", "for", "with"]


def _word_inventory(rng: np.random.Generator, n_content: int) -> list[str]:
    """Pseudo content words: one or two syllables, some with class suffixes."""
    words = []
    seen = set(_GLUE) | set(_SYLLABLES) | set(_SUFFIXES)
    while len(words) < n_content:
        parts = rng.choice(_SYLLABLES, size=rng.integers(1, 3), replace=True)
        word = "".join(parts)
        roll = rng.random()
        if roll < 0.15:
            word += "ly"
        elif roll < 0.3:
            word += str(rng.choice(["ous", "ful", "ive"]))
        if word not in seen:
            seen.add(word)
            words.append(word)
    return words


def build_vocabulary() -> Vocabulary:
    """Vocabulary of syllables, suffixes, function words and punctuation."""
    return Vocabulary.covering(_GLUE + ["."] + _SYLLABLES + _SUFFIXES)


def generate_corpus(n_docs: int, words_per_doc: int, seed: int, *,
                    n_content_words: int = 120, n_motifs: int = 12,
                    motif_len: tuple[int, int] = (8, 14),
                    motif_rate: float = 0.2) -> tuple[list[str], Vocabulary]:
    """Generate document texts and the matching vocabulary.

    Each document owns ``n_motifs`` motifs (word sequences of length in
    ``motif_len``); at every step a motif is emitted with probability
    ``motif_rate`` (frequent motifs recur every few hundred words, rare ones
    a few times per document), otherwise one background word drawn from a
    skewed unigram distribution. Sentence periods land every 10-20 words.
    """
    rng = np.random.default_rng(seed)
    inventory = np.array(_GLUE * 8 + _word_inventory(rng, n_content_words), dtype=object)
    bg_weights = 1.0 / (np.arange(len(inventory)) + 12.0)
    bg_weights /= bg_weights.sum()

    texts = []
    for _ in range(n_docs):
        motifs = []
        for _ in range(n_motifs):
            length = int(rng.integers(motif_len[0], motif_len[1] + 1))
            motifs.append(list(rng.choice(inventory, size=length, p=bg_weights)))
        motif_weights = 1.0 / (np.arange(n_motifs) + 2.0)
        motif_weights /= motif_weights.sum()

        words: list[str] = []
        until_period = int(rng.integers(10, 21))
        while len(words) < words_per_doc:
            if rng.random() < motif_rate:
                words.extend(motifs[int(rng.choice(n_motifs, p=motif_weights))])
            else:
                words.append(str(inventory[int(rng.choice(len(inventory), p=bg_weights))]))
            until_period -= 1
            if until_period <= 0:
                words.append(".")
                until_period = int(rng.integers(10, 21))
        lines = [" ".join(words[i:i + 16]) for i in range(0, len(words), 16)]
        texts.append("\n".join(lines) + "\n")
    return texts, build_vocabulary()


def write_corpus(outdir: str | Path, n_docs: int, words_per_doc: int, seed: int,
                 **kwargs) -> tuple[list[Path], Path]:
    """Write ``doc00.txt`` ... and ``vocab.txt`` under ``outdir``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    texts, vocab = generate_corpus(n_docs, words_per_doc, seed, **kwargs)
    paths = []
    for i, text in enumerate(texts):
        path = outdir / f"doc{i:02d}.txt"
        path.write_text(text, encoding="utf-8")
        paths.append(path)
    vocab_path = outdir / "vocab.txt"
    vocab.save(vocab_path)
    return paths, vocab_path
