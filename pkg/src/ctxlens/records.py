"""Per-token prediction records and the NDJSON interchange format.

One record summarizes one token's next-token distribution at one context
length: log-probability of the true token, distribution entropy (nats),
max probability, argmax id, and whether the argmax matched truth.

The interchange file is newline-delimited JSON. The first line is a header
object that must carry ``schema_version``, ``vocab_size`` and
``tokenizer_name`` (extra keys are allowed and preserved); every following
line is one record with exactly the record fields. In files exported per
(document, K) by the sweep command, ``context_len`` carries the context
tier K so stores can be keyed by it; records produced in memory carry the
actual number of context tokens supplied.
"""

import json
import math
import os
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .errors import DuplicateRecordError, RecordNotFoundError, RecordValidationError

SCHEMA_VERSION = 1
_REQUIRED_HEADER_KEYS = ("schema_version", "vocab_size", "tokenizer_name")
_RECORD_FIELDS = (
    "doc_id", "token_index", "context_len", "log_prob",
    "entropy", "max_prob", "argmax_id", "correct",
)
# Slack for invariants that hold exactly in real arithmetic but may be off
# by rounding in a float pipeline (e.g. exp(log(p)) > p by one ulp).
_FLOAT_SLACK = 1e-9


@dataclass(frozen=True, slots=True)
class PredictionRecord:
    doc_id: str
    token_index: int
    context_len: int
    log_prob: float   # natural log of p(true token), <= 0
    entropy: float    # nats, in [0, ln V]
    max_prob: float   # max of the predictive distribution
    argmax_id: int
    correct: bool     # argmax_id == true token id


def validate_record(rec: PredictionRecord, vocab_size: int) -> None:
    """Check the field invariants a well-formed record must satisfy."""
    if not rec.log_prob <= 0.0:
        raise RecordValidationError(f"{_key(rec)}: log_prob {rec.log_prob} > 0")
    if not (0.0 < rec.max_prob <= 1.0 + _FLOAT_SLACK):
        raise RecordValidationError(f"{_key(rec)}: max_prob {rec.max_prob} outside (0, 1]")
    if rec.max_prob + _FLOAT_SLACK < math.exp(rec.log_prob):
        raise RecordValidationError(
            f"{_key(rec)}: max_prob {rec.max_prob} < exp(log_prob) {math.exp(rec.log_prob)}"
        )
    if not (-_FLOAT_SLACK <= rec.entropy <= math.log(vocab_size) + _FLOAT_SLACK):
        raise RecordValidationError(
            f"{_key(rec)}: entropy {rec.entropy} outside [0, ln {vocab_size}]"
        )
    if not 0 <= rec.argmax_id < vocab_size:
        raise RecordValidationError(f"{_key(rec)}: argmax_id {rec.argmax_id} outside vocabulary")
    if rec.token_index < 0 or rec.context_len < 0:
        raise RecordValidationError(f"{_key(rec)}: negative index field")


def _key(rec: PredictionRecord) -> str:
    return f"(doc={rec.doc_id!r}, context_len={rec.context_len}, i={rec.token_index})"


def make_header(vocab_size: int, tokenizer_name: str, **extra) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "vocab_size": int(vocab_size),
        "tokenizer_name": tokenizer_name,
        **extra,
    }


def write_records(path: str | Path, header: dict, records: Iterable[PredictionRecord]) -> None:
    """Write an interchange file atomically (temp file + rename)."""
    for key in _REQUIRED_HEADER_KEYS:
        if key not in header:
            raise RecordValidationError(f"header missing required key {key!r}")
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as f:
        f.write(json.dumps(header, sort_keys=True) + "\n")
        for rec in records:
            d = asdict(rec)
            f.write(json.dumps({k: d[k] for k in _RECORD_FIELDS}) + "\n")
    os.replace(tmp, path)


def read_records(path: str | Path) -> tuple[dict, list[PredictionRecord]]:
    """Parse and validate one interchange file."""
    path = Path(path)
    with open(path, encoding="utf-8") as f:
        first = f.readline()
        if not first.strip():
            raise RecordValidationError(f"{path}: empty interchange file")
        header = json.loads(first)
        for key in _REQUIRED_HEADER_KEYS:
            if key not in header:
                raise RecordValidationError(f"{path}: header missing {key!r}")
        if header["schema_version"] != SCHEMA_VERSION:
            raise RecordValidationError(
                f"{path}: unsupported schema_version {header['schema_version']}"
            )
        vocab_size = int(header["vocab_size"])
        out = []
        for lineno, line in enumerate(f, start=2):
            if not line.strip():
                continue
            raw = json.loads(line)
            missing = [k for k in _RECORD_FIELDS if k not in raw]
            extra = [k for k in raw if k not in _RECORD_FIELDS]
            if missing or extra:
                raise RecordValidationError(
                    f"{path}:{lineno}: record fields off (missing={missing}, extra={extra})"
                )
            rec = PredictionRecord(
                doc_id=str(raw["doc_id"]),
                token_index=int(raw["token_index"]),
                context_len=int(raw["context_len"]),
                log_prob=float(raw["log_prob"]),
                entropy=float(raw["entropy"]),
                max_prob=float(raw["max_prob"]),
                argmax_id=int(raw["argmax_id"]),
                correct=bool(raw["correct"]),
            )
            try:
                validate_record(rec, vocab_size)
            except RecordValidationError as e:
                raise RecordValidationError(f"{path}:{lineno}: {e}") from None
            out.append(rec)
    return header, out


class RecordStore:
    """File-backed provider: keyed lookup of pre-extracted records.

    Records are keyed by (doc_id, context tier, token_index), where the tier
    is whatever the file's ``context_len`` field carries. All files merged
    into one store must agree on vocab_size and tokenizer_name.
    """

    def __init__(self, paths: Iterable[str | Path]):
        self.paths = [Path(p) for p in paths]
        if not self.paths:
            raise RecordValidationError("no interchange files to open")
        self.vocab_size: int | None = None
        self.tokenizer_name: str | None = None
        self.headers: list[dict] = []
        self._by_key: dict[tuple[str, int, int], PredictionRecord] = {}
        for path in self.paths:
            header, recs = read_records(path)
            if self.vocab_size is None:
                self.vocab_size = int(header["vocab_size"])
                self.tokenizer_name = str(header["tokenizer_name"])
            elif (int(header["vocab_size"]) != self.vocab_size
                  or str(header["tokenizer_name"]) != self.tokenizer_name):
                raise RecordValidationError(
                    f"{path}: header disagrees with already-loaded files "
                    f"(vocab_size/tokenizer_name)"
                )
            self.headers.append(header)
            for rec in recs:
                key = (rec.doc_id, rec.context_len, rec.token_index)
                if key in self._by_key:
                    raise DuplicateRecordError(f"duplicate record key {key}")
                self._by_key[key] = rec

    def __len__(self) -> int:
        return len(self._by_key)

    def __iter__(self) -> Iterator[PredictionRecord]:
        return iter(self._by_key.values())

    def get(self, doc_id: str, tier: int, token_index: int) -> PredictionRecord:
        try:
            return self._by_key[(doc_id, tier, token_index)]
        except KeyError:
            raise RecordNotFoundError(doc_id, tier, token_index) from None

    def tiers(self, doc_id: str) -> list[int]:
        return sorted({k[1] for k in self._by_key if k[0] == doc_id})

    # Provider interface used by the sweep engine: the stored record is
    # returned as-is; the engine normalizes context_len to the window it
    # reconstructed.
    def score_token(self, doc_id: str, tier: int, token_index: int,
                    context, target: int) -> PredictionRecord:
        return self.get(doc_id, tier, token_index)


def open_record_store(path: str | Path | Iterable[str | Path]) -> RecordStore:
    """Open one interchange file, a directory of ``*.ndjson`` files, or a list."""
    if isinstance(path, (str, Path)):
        p = Path(path)
        if p.is_dir():
            paths = sorted(p.glob("*.ndjson"))
        else:
            paths = [p]
    else:
        paths = list(path)
    return RecordStore(paths)
