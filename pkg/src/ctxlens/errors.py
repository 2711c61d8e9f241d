"""Exception hierarchy shared across the toolkit.

``UsageError`` and its subclasses mean the caller's inputs or configuration
are wrong (CLI exit code 2 / HTTP 400); everything else raised by the
toolkit is a runtime failure (exit code 1 / HTTP 500).
"""


class CtxlensError(Exception):
    """Base class for all toolkit errors."""


class UsageError(CtxlensError):
    """Bad configuration, bad arguments, or misuse of a command."""


class VocabularyError(UsageError):
    """Vocabulary file malformed or does not cover the input text."""


class TagAlignmentError(UsageError):
    """POS tag stream does not line up with the document's words."""

    def __init__(self, index: int, expected: str, got: str):
        self.index = index
        self.expected = expected
        self.got = got
        super().__init__(
            f"tag stream misaligned at word {index}: document has {expected!r}, "
            f"tag file has {got!r}"
        )


class RecordValidationError(CtxlensError):
    """An interchange record violates a field invariant."""


class DuplicateRecordError(CtxlensError):
    """Two interchange records share the same (doc_id, tier, token_index) key."""


class RecordNotFoundError(CtxlensError, KeyError):
    """A file-backed provider has no record for a requested token."""

    def __init__(self, doc_id: str, tier: int, token_index: int):
        self.doc_id = doc_id
        self.tier = tier
        self.token_index = token_index
        super().__init__(
            f"no stored record for doc={doc_id!r} K={tier} token_index={token_index}"
        )


class EmptyInputError(CtxlensError):
    """An aggregate was asked for on an empty collection."""


class ConstantInputError(CtxlensError):
    """Rank correlation is undefined because one input has no variation."""


class ArtifactMismatchError(UsageError):
    """Artifacts on disk were produced under a different configuration."""
