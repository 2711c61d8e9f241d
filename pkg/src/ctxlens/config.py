"""Run configuration: one declarative object shared by CLI, service and pipeline.

A config is hashed over its semantically meaningful fields (everything
except the output directory and execution knobs like the worker count), and
that hash is embedded in every artifact a run writes. Commands refuse to
mix artifacts whose hashes disagree, and reruns of the same config are
byte-identical regardless of parallelism.
"""

import hashlib
import json
from pathlib import Path

from pydantic import BaseModel, Field, field_validator, model_validator

from .errors import UsageError
from .sweep import SweepConfig


class LMParams(BaseModel):
    """Hyperparameters of the built-in cache-augmented n-gram LM."""

    n_lm: int = 3
    lam: float = Field(default=0.7, alias="lambda")
    alpha: float = 0.5
    n_cache: int = 2

    model_config = {"populate_by_name": True, "frozen": True}


class RunConfig(BaseModel):
    corpus_paths: list[str]
    vocab_path: str
    tag_path: str | None = None
    provider: str = "builtin"          # "builtin" or "file:<path>"
    lm: LMParams = LMParams()
    context_lens: list[int]
    stride_ratio: int = 200            # S = max(1, K // stride_ratio)
    strides: dict[int, int] | None = None  # explicit per-K overrides
    ngram_n: int = 5
    ngram_n_range: tuple[int, int] | None = None
    freq_corpus_paths: list[str] | None = None
    output_dir: str
    epsilon: float = 0.0               # |change| <= epsilon counts as unchanged
    seed: int = 0
    extra_delta_n_breakpoint: float | None = None
    workers: int = 1                   # execution knob; not part of the hash

    model_config = {"frozen": True}

    @field_validator("context_lens")
    @classmethod
    def _ascending(cls, v):
        if not v or sorted(set(v)) != list(v):
            raise ValueError(f"context_lens must be non-empty and strictly ascending: {v}")
        return v

    @field_validator("provider")
    @classmethod
    def _provider_form(cls, v):
        if v != "builtin" and not v.startswith("file:"):
            raise ValueError(f"provider must be 'builtin' or 'file:<path>', got {v!r}")
        return v

    @model_validator(mode="after")
    def _cross_checks(self):
        if self.ngram_n > min(self.context_lens):
            raise ValueError(
                f"ngram_n {self.ngram_n} exceeds the smallest context length "
                f"{min(self.context_lens)}"
            )
        if self.ngram_n_range is not None:
            lo, hi = self.ngram_n_range
            if not 1 <= lo <= hi:
                raise ValueError(f"bad ngram_n_range {self.ngram_n_range}")
            if hi > min(self.context_lens):
                raise ValueError(
                    f"ngram_n_range upper bound {hi} exceeds the smallest context length"
                )
        if self.workers < 1:
            raise ValueError("workers must be >= 1")
        return self

    def sweep_config(self) -> SweepConfig:
        return SweepConfig.from_tiers(
            self.context_lens, strides=self.strides, stride_ratio=self.stride_ratio
        )

    def config_hash(self) -> str:
        """Hash of the semantic fields; stable across output dirs and worker counts."""
        payload = self.model_dump(mode="json", exclude={"output_dir", "workers"})
        # Resolve the stride rule so an explicit map and an equivalent ratio hash alike.
        payload["resolved_strides"] = {
            str(k): s for k, s in sorted(self.sweep_config().stride.items())
        }
        blob = json.dumps(payload, sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:16]

    def check_paths(self) -> None:
        """Referenced input paths must exist before any work starts."""
        missing = [p for p in self.corpus_paths if not Path(p).is_file()]
        if not Path(self.vocab_path).is_file():
            missing.append(self.vocab_path)
        if self.tag_path and not Path(self.tag_path).is_file():
            missing.append(self.tag_path)
        for p in self.freq_corpus_paths or []:
            if not Path(p).is_file():
                missing.append(p)
        if self.provider.startswith("file:"):
            store = Path(self.provider[len("file:"):])
            if not store.exists():
                missing.append(str(store))
        if missing:
            raise UsageError("missing input path(s): " + ", ".join(missing))


def load_config(path: str | Path, overrides: dict | None = None) -> RunConfig:
    """Load a JSON config file and apply flat key overrides (CLI flags)."""
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except OSError as e:
        raise UsageError(f"cannot read config {path}: {e}") from None
    except json.JSONDecodeError as e:
        raise UsageError(f"config {path} is not valid JSON: {e}") from None
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key.startswith("lm."):
            data.setdefault("lm", {})[key[3:]] = value
        else:
            data[key] = value
    try:
        return RunConfig.model_validate(data)
    except Exception as e:
        raise UsageError(f"invalid config: {e}") from None
