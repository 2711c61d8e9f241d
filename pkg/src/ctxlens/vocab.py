"""Token vocabulary with dense integer ids and single-character fallbacks.

The file format is one token string per line; the line number (0-based) is
the token id. A vocabulary is only safe to tokenize with if every character
of the input text has its own single-character entry; ``Vocabulary.covering``
builds one that does.
"""

import hashlib
from collections.abc import Iterable

from .errors import VocabularyError


class Vocabulary:
    """Immutable ordered set of token strings with id lookup."""

    __slots__ = ("entries", "_index", "_max_len", "_sha")

    def __init__(self, entries: Iterable[str]):
        self.entries: tuple[str, ...] = tuple(entries)
        self._index: dict[str, int] = {}
        for i, tok in enumerate(self.entries):
            if not tok:
                raise VocabularyError(f"empty token string at id {i}")
            if "\n" in tok:
                raise VocabularyError(f"token at id {i} contains a newline")
            if tok in self._index:
                raise VocabularyError(f"duplicate token {tok!r} (ids {self._index[tok]} and {i})")
            self._index[tok] = i
        self._max_len = max((len(t) for t in self.entries), default=0)
        self._sha: str | None = None

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def id_of(self, token: str) -> int:
        try:
            return self._index[token]
        except KeyError:
            raise VocabularyError(f"token {token!r} not in vocabulary") from None

    def token_of(self, token_id: int) -> str:
        return self.entries[token_id]

    @property
    def max_token_len(self) -> int:
        return self._max_len

    @property
    def sha256(self) -> str:
        """Hash of the entry list; used to bind model artifacts to a vocabulary."""
        if self._sha is None:
            h = hashlib.sha256()
            for tok in self.entries:
                h.update(tok.encode("utf-8"))
                h.update(b"\n")
            self._sha = h.hexdigest()
        return self._sha

    @classmethod
    def covering(cls, entries: Iterable[str], texts: Iterable[str] = ()) -> "Vocabulary":
        """Build a vocabulary from ``entries`` plus single-character fallbacks.

        Any character that appears in ``texts`` (or in an entry) and has no
        entry of its own is appended as a one-character token, in sorted
        order so construction is deterministic.
        """
        base = list(dict.fromkeys(entries))
        seen = set(base)
        chars: set[str] = set()
        for tok in base:
            chars.update(tok)
        for text in texts:
            for ch in text:
                if not ch.isspace():
                    chars.add(ch)
        extra = sorted(c for c in chars if c not in seen)
        return cls(base + extra)

    @classmethod
    def load(cls, path) -> "Vocabulary":
        with open(path, encoding="utf-8") as f:
            lines = f.read().split("\n")
        if lines and lines[-1] == "":
            lines.pop()
        return cls(lines)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for tok in self.entries:
                f.write(tok + "\n")
