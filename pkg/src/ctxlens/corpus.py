"""Documents as subword token sequences aligned to their source words.

A document is produced in two steps: the raw text is segmented into words
(maximal non-whitespace runs, with punctuation runs split off into words of
their own), then each word is split into tokens by greedy longest-prefix
match against the vocabulary. Every token remembers which word it came from
and its position inside that word, so downstream analyses can group tokens
by word class and by first-vs-continuation subword.

Word classes collapse the Penn tagset into six buckets: the four open
(content) classes plus ``closed`` for function words and ``other`` for
punctuation, symbols and numbers.
"""

import unicodedata
from collections.abc import Callable, Sequence
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import TagAlignmentError, VocabularyError
from .vocab import Vocabulary


class PosClass(Enum):
    NOUN = "noun"
    VERB = "verb"
    ADJ = "adj"
    ADV = "adv"
    CLOSED = "closed"
    OTHER = "other"

    @property
    def is_content(self) -> bool:
        return self in _CONTENT_CLASSES


_CONTENT_CLASSES = frozenset({PosClass.NOUN, PosClass.VERB, PosClass.ADJ, PosClass.ADV})

# Index used for the compact per-token class array on Document.
POS_CODES: tuple[PosClass, ...] = tuple(PosClass)
_POS_TO_CODE = {cls: i for i, cls in enumerate(POS_CODES)}

# Penn tags that are not words: punctuation, symbols, numbers, list markers.
_OTHER_TAGS = frozenset(
    {"$", "#", "''", "``", "(", ")", ",", ".", ":", "-LRB-", "-RRB-", "SYM", "CD", "LS"}
)
# Function-word (closed-class) tags. Anything in the Penn set that is not an
# open class and not in _OTHER_TAGS lands here.
_CLOSED_TAGS = frozenset(
    {"CC", "DT", "EX", "FW", "IN", "MD", "PDT", "POS", "PRP", "PRP$", "RP", "TO",
     "UH", "WDT", "WP", "WP$", "WRB"}
)


def is_known_tag(tag: str) -> bool:
    return (
        tag.startswith(("NN", "VB", "JJ", "RB"))
        or tag in _OTHER_TAGS
        or tag in _CLOSED_TAGS
    )


def classify_pos(tag: str) -> PosClass:
    """Map a Penn tag to one of the six word classes.

    Unknown tags map to ``OTHER``; callers that care (tag attachment, the
    run log) should count them via :func:`is_known_tag`.
    """
    if tag.startswith("NN"):
        return PosClass.NOUN
    if tag.startswith("VB"):
        return PosClass.VERB
    if tag.startswith("JJ"):
        return PosClass.ADJ
    if tag.startswith("RB"):
        return PosClass.ADV
    if tag in _OTHER_TAGS:
        return PosClass.OTHER
    if tag in _CLOSED_TAGS:
        return PosClass.CLOSED
    return PosClass.OTHER


@dataclass(frozen=True)
class Document:
    """Immutable tokenized document with word alignment and word classes.

    ``tokens``, ``word_index``, ``within_word_pos`` and ``pos_code`` are
    parallel read-only arrays over token positions; ``space_before`` is over
    word indices and records whether a single space preceded the word in the
    normalized source text (used by :func:`detokenize`).
    """

    doc_id: str
    tokens: np.ndarray           # int64 token ids
    token_strings: tuple[str, ...]
    word_index: np.ndarray       # int64, non-decreasing
    within_word_pos: np.ndarray  # int64, resets to 0 at each new word
    pos_code: np.ndarray         # int8 index into POS_CODES
    space_before: np.ndarray     # bool per word

    def __post_init__(self):
        for arr in (self.tokens, self.word_index, self.within_word_pos,
                    self.pos_code, self.space_before):
            arr.setflags(write=False)

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def n_words(self) -> int:
        return len(self.space_before)

    def pos_class(self, i: int) -> PosClass:
        return POS_CODES[self.pos_code[i]]

    def words(self) -> list[str]:
        """Source words, reassembled from token strings."""
        out = [""] * self.n_words
        for tok, w in zip(self.token_strings, self.word_index):
            out[w] += tok
        return out

    def with_pos_codes(self, pos_code: np.ndarray) -> "Document":
        return replace(self, pos_code=pos_code)


_PUNCT_CACHE: dict[str, bool] = {}


def _is_punct(ch: str) -> bool:
    flag = _PUNCT_CACHE.get(ch)
    if flag is None:
        flag = unicodedata.category(ch).startswith("P")
        _PUNCT_CACHE[ch] = flag
    return flag


def split_words(raw_text: str) -> tuple[list[str], list[bool]]:
    """Segment text into words plus a preceded-by-space flag per word.

    Words are maximal whitespace-free runs with punctuation split off: inside
    each run, maximal stretches of punctuation characters and of
    non-punctuation characters become separate words. Only the first word of
    a run carries a space flag (and never the very first word).
    """
    words: list[str] = []
    spaces: list[bool] = []
    for run in raw_text.split():
        first_of_run = len(words)
        start = 0
        for i in range(1, len(run) + 1):
            if i == len(run) or _is_punct(run[i]) != _is_punct(run[start]):
                words.append(run[start:i])
                spaces.append(len(words) - 1 == first_of_run and first_of_run > 0)
                start = i
    return words, spaces


def greedy_token_split(word: str, vocab: Vocabulary) -> list[str]:
    """Split a word by repeatedly taking the longest vocabulary prefix."""
    pieces = []
    pos = 0
    n = len(word)
    while pos < n:
        limit = min(vocab.max_token_len, n - pos)
        for length in range(limit, 0, -1):
            piece = word[pos:pos + length]
            if piece in vocab:
                pieces.append(piece)
                pos += length
                break
        else:
            raise VocabularyError(
                f"no vocabulary entry covers character {word[pos]!r} in word {word!r}"
            )
    return pieces


def tokenize(raw_text: str, vocab: Vocabulary, doc_id: str = "") -> Document:
    """Tokenize text into a Document; word classes start out as ``other``.

    Empty (or all-whitespace) input yields an empty document.
    """
    words, spaces = split_words(raw_text)
    token_strings: list[str] = []
    token_ids: list[int] = []
    word_index: list[int] = []
    within: list[int] = []
    for w, word in enumerate(words):
        for p, piece in enumerate(greedy_token_split(word, vocab)):
            token_strings.append(piece)
            token_ids.append(vocab.id_of(piece))
            word_index.append(w)
            within.append(p)
    n = len(token_ids)
    return Document(
        doc_id=doc_id,
        tokens=np.asarray(token_ids, dtype=np.int64).reshape(n),
        token_strings=tuple(token_strings),
        word_index=np.asarray(word_index, dtype=np.int64).reshape(n),
        within_word_pos=np.asarray(within, dtype=np.int64).reshape(n),
        pos_code=np.full(n, _POS_TO_CODE[PosClass.OTHER], dtype=np.int8),
        space_before=np.asarray(spaces, dtype=bool).reshape(len(words)),
    )


def detokenize(doc: Document) -> str:
    """Rebuild the normalized source text (whitespace runs collapsed to one space)."""
    parts = []
    for word, space in zip(doc.words(), doc.space_before):
        if space:
            parts.append(" ")
        parts.append(word)
    return "".join(parts)


def attach_pos_tags(
    doc: Document,
    tagged_words: Sequence[tuple[str, str]],
    warn: Callable[[str], None] | None = None,
) -> Document:
    """Attach one Penn tag per word; every token inherits its word's class.

    ``tagged_words`` must list exactly the document's words, in order; the
    first mismatch (by count or by spelling) raises ``TagAlignmentError``.
    Unknown tags classify as ``other`` and are reported through ``warn``.
    """
    words = doc.words()
    if len(tagged_words) != len(words):
        idx = min(len(tagged_words), len(words))
        expected = words[idx] if idx < len(words) else "<end>"
        got = tagged_words[idx][0] if idx < len(tagged_words) else "<end>"
        raise TagAlignmentError(idx, expected, got)
    word_codes = np.empty(len(words), dtype=np.int8)
    unknown: dict[str, int] = {}
    for i, ((word, tag), doc_word) in enumerate(zip(tagged_words, words)):
        if word != doc_word:
            raise TagAlignmentError(i, doc_word, word)
        if not is_known_tag(tag):
            unknown[tag] = unknown.get(tag, 0) + 1
        word_codes[i] = _POS_TO_CODE[classify_pos(tag)]
    if unknown and warn is not None:
        for tag in sorted(unknown):
            warn(f"unknown POS tag {tag!r} on {unknown[tag]} word(s); classified as 'other'")
    return doc.with_pos_codes(word_codes[doc.word_index])


def read_tag_file(path: str | Path) -> list[list[tuple[str, str]]]:
    """Parse a tag file: one ``word<TAB>tag`` per line, blank line between documents."""
    docs: list[list[tuple[str, str]]] = []
    current: list[tuple[str, str]] = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                if current:
                    docs.append(current)
                    current = []
                continue
            word, sep, tag = line.partition("\t")
            if not sep or not tag:
                raise VocabularyError(f"{path}:{lineno}: expected 'word<TAB>tag', got {line!r}")
            current.append((word, tag))
    if current:
        docs.append(current)
    return docs


# Small function-word list for the built-in fallback tagger. Deliberately
# coarse: it exists so untagged corpora can still run the class analyses,
# at lower fidelity than external tags.
_FALLBACK_CLOSED = frozenset("""
a an the and or but nor so yet if then else because although though while when
whenever where wherever since until unless of in on at to for with by from into
onto over under between among through during about against across behind beyond
up down out off above below near this that these those i you he she it we they
me him her us them my your his its our their mine yours hers ours theirs who
whom whose which what is are was were be been being am do does did have has had
will would can could shall should may might must not no
""".split())


def fallback_pos_tags(doc: Document) -> Document:
    """Heuristic word classes for untagged corpora.

    Punctuation-only words are ``other``; a short function-word list gives
    ``closed``; ``-ly`` suffixes give ``adv``; ``-ous/-ful/-ive`` give
    ``adj``; everything else defaults to ``noun``. Verbs are never guessed.
    """
    word_codes = np.empty(doc.n_words, dtype=np.int8)
    for i, word in enumerate(doc.words()):
        low = word.lower()
        if all(_is_punct(c) for c in word):
            cls = PosClass.OTHER
        elif low in _FALLBACK_CLOSED:
            cls = PosClass.CLOSED
        elif low.endswith("ly"):
            cls = PosClass.ADV
        elif low.endswith(("ous", "ful", "ive")):
            cls = PosClass.ADJ
        else:
            cls = PosClass.NOUN
        word_codes[i] = _POS_TO_CODE[cls]
    return doc.with_pos_codes(word_codes[doc.word_index])
