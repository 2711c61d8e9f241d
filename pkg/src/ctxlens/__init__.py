"""Token-level diagnostics for how LM predictions change as context grows."""

__version__ = "0.1.0"

from .analysis import (
    ChangeRatios,
    CorrelationResult,
    confidence_stats,
    decrease_increase_ratios,
    delta_d,
    grouped_frequency_correlation,
    ngram_correlation,
    pos_class_decrements,
    spearman,
)
from .annotate import (
    FrequencyTable,
    NGramIndex,
    NGramStats,
    annotate_pairs,
    build_frequency_table,
    ngram_stats,
    subword_partition,
)
from .config import LMParams, RunConfig, load_config
from .corpus import (
    Document,
    PosClass,
    attach_pos_tags,
    classify_pos,
    detokenize,
    fallback_pos_tags,
    read_tag_file,
    tokenize,
)
from .errors import CtxlensError, UsageError
from .ngram_lm import CacheNGramLM, distribution_summaries, predict, train_ngram
from .records import PredictionRecord, open_record_store, read_records, write_records
from .sweep import (
    PairedComparison,
    SweepConfig,
    SweepResult,
    align_comparisons,
    chunk_spans,
    ppl_table,
    run_sweep,
)
from .vocab import Vocabulary

__all__ = [
    "__version__",
    "CacheNGramLM", "ChangeRatios", "CorrelationResult", "CtxlensError",
    "Document", "FrequencyTable", "LMParams", "NGramIndex", "NGramStats",
    "PairedComparison", "PosClass", "PredictionRecord", "RunConfig",
    "SweepConfig", "SweepResult", "UsageError", "Vocabulary",
    "align_comparisons", "annotate_pairs", "attach_pos_tags",
    "build_frequency_table", "chunk_spans", "classify_pos", "confidence_stats",
    "decrease_increase_ratios", "delta_d", "detokenize",
    "distribution_summaries", "fallback_pos_tags",
    "grouped_frequency_correlation", "load_config", "ngram_correlation",
    "ngram_stats", "open_record_store", "pos_class_decrements", "ppl_table",
    "predict", "read_records", "read_tag_file", "run_sweep", "spearman",
    "subword_partition", "tokenize", "train_ngram", "write_records",
]
