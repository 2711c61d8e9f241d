"""Command implementations behind the service endpoints and the CLI.

Artifacts land under the config's output directory:

    model.json                  trained LM (builtin provider)
    sweeps/<doc>.K<k>.ndjson    per-(document, tier) interchange files
    sweeps/ppl.csv              per-document and corpus token-perplexity
    freq_table.tsv              token frequency table (frequency analysis)
    reports/<analysis>.csv      one CSV per analysis, plot-ready
    reports/<analysis>.json     JSON summary of the same numbers
    logs/<command>.ndjson       machine-readable warnings, one event per line

Every artifact embeds the config hash; commands refuse inputs written under
a different hash. All writers are deterministic, so a rerun of the same
config (at any worker count) reproduces every byte.
"""

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

from . import analysis as an
from .annotate import FrequencyTable, NGramIndex, annotate_pairs, build_frequency_table
from .config import RunConfig
from .corpus import Document, PosClass, attach_pos_tags, fallback_pos_tags, read_tag_file, tokenize
from .errors import ArtifactMismatchError, ConstantInputError, UsageError
from .ngram_lm import TOKENIZER_NAME, CacheNGramLM, train_ngram
from .records import make_header, open_record_store, read_records, write_records
from .sweep import PairedComparison, SweepResult, align_comparisons, ppl_table, run_sweep
from .vocab import Vocabulary

ANALYSES = ("ratios", "pos", "subword", "ngram", "ngram-sweep", "frequency", "confidence")


def _out(config: RunConfig) -> Path:
    return Path(config.output_dir)


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, sort_keys=True, indent=2)
        f.write("\n")


def _write_csv(path: Path, config_hash: str, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(f"# config_hash={config_hash}\n")
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_log(path: Path, events: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for event in events:
            f.write(json.dumps(event, sort_keys=True) + "\n")


def load_documents(config: RunConfig) -> tuple[Vocabulary, list[Document], list[dict]]:
    """Load the vocabulary and corpus; attach POS tags (or fallbacks).

    One document per corpus file, identified by the file stem; a single tag
    file carries one blank-line-separated section per document, in corpus
    order.
    """
    config.check_paths()
    events: list[dict] = []
    vocab = Vocabulary.load(config.vocab_path)
    docs = []
    seen_ids = set()
    for path in config.corpus_paths:
        doc_id = Path(path).stem
        if doc_id in seen_ids:
            raise UsageError(f"duplicate document id {doc_id!r} (corpus file stems must differ)")
        seen_ids.add(doc_id)
        text = Path(path).read_text(encoding="utf-8")
        docs.append(tokenize(text, vocab, doc_id=doc_id))
    if config.tag_path:
        sections = read_tag_file(config.tag_path)
        if len(sections) != len(docs):
            raise UsageError(
                f"tag file has {len(sections)} document section(s), corpus has {len(docs)}"
            )
        docs = [
            attach_pos_tags(
                doc, section,
                warn=lambda msg, d=doc: events.append(
                    {"event": "unknown_tag", "doc_id": d.doc_id, "detail": msg}
                ),
            )
            for doc, section in zip(docs, sections)
        ]
    else:
        docs = [fallback_pos_tags(doc) for doc in docs]
        events.append({
            "event": "fallback_tagger",
            "detail": "no tag file configured; heuristic word classes (lower fidelity)",
        })
    return vocab, docs, events


def run_train(config: RunConfig) -> dict:
    """Train the built-in LM and persist the artifact."""
    if config.provider != "builtin":
        raise UsageError("train only applies to the builtin provider")
    vocab, docs, events = load_documents(config)
    lm = train_ngram(
        docs, vocab,
        n_lm=config.lm.n_lm, lam=config.lm.lam,
        alpha=config.lm.alpha, n_cache=config.lm.n_cache,
    )
    out = _out(config)
    out.mkdir(parents=True, exist_ok=True)
    model_path = out / "model.json"
    lm.save(model_path, config_hash=config.config_hash())
    _write_log(out / "logs" / "train.ndjson", events)
    return {
        "model_path": str(model_path),
        "config_hash": config.config_hash(),
        "vocab_size": len(vocab),
        "n_docs": len(docs),
        "n_tokens": sum(len(d) for d in docs),
    }


def _provider_for(config: RunConfig, vocab: Vocabulary):
    if config.provider == "builtin":
        model_path = _out(config) / "model.json"
        if not model_path.is_file():
            raise UsageError(f"no model artifact at {model_path}; run `ctxlens train` first")
        return CacheNGramLM.load(model_path, vocab,
                                 expected_config_hash=config.config_hash())
    store = open_record_store(config.provider[len("file:"):])
    if store.vocab_size != len(vocab):
        raise ArtifactMismatchError(
            f"record store vocab size {store.vocab_size} != vocabulary size {len(vocab)}"
        )
    return store


def run_sweep_cmd(config: RunConfig, force: bool = False) -> dict:
    """Evaluate every document at every tier; persist interchange files + ppl table."""
    vocab, docs, events = load_documents(config)
    sweep_cfg = config.sweep_config()
    h = config.config_hash()
    out = _out(config)
    sweep_dir = out / "sweeps"
    if sweep_dir.is_dir() and any(sweep_dir.glob("*.ndjson")) and not force:
        raise UsageError(f"{sweep_dir} already holds sweep outputs; pass --force to overwrite")
    sweep_dir.mkdir(parents=True, exist_ok=True)
    for stale in sweep_dir.glob("*.ndjson"):
        stale.unlink()
    provider = _provider_for(config, vocab)

    def work(doc: Document) -> tuple[list[SweepResult], list[dict]]:
        local: list[dict] = []
        results = run_sweep(
            provider, doc, sweep_cfg,
            warn=lambda msg: local.append(
                {"event": "tier_skipped", "doc_id": doc.doc_id, "detail": msg}
            ),
        )
        return results, local

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            outcomes = list(pool.map(work, docs))
    else:
        outcomes = [work(doc) for doc in docs]

    all_results: list[SweepResult] = []
    files = []
    for doc, (results, local_events) in zip(docs, outcomes):
        events.extend(local_events)
        for res in results:
            all_results.append(res)
            path = sweep_dir / f"{doc.doc_id}.K{res.k}.ndjson"
            header = make_header(
                len(vocab), TOKENIZER_NAME,
                config_hash=h, doc_id=doc.doc_id, context_len=res.k,
            )
            # On the wire, context_len carries the tier so stores can key by it.
            write_records(path, header,
                          (replace(r, context_len=res.k) for r in res.records))
            files.append(str(path))

    if not all_results:
        raise UsageError("no document is long enough for any configured context length")
    rows = []
    table = ppl_table(all_results)
    for k, entry in table.items():
        for doc_id, ppl in entry["docs"].items():
            rows.append([doc_id, k, repr(ppl)])
    for k, entry in table.items():
        rows.append(["__corpus__", k, repr(entry["corpus"])])
    _write_csv(sweep_dir / "ppl.csv", h, ["doc_id", "K", "ppl"], rows)
    _write_log(out / "logs" / "sweep.ndjson", events)
    return {
        "config_hash": h,
        "files": files,
        "ppl_csv": str(sweep_dir / "ppl.csv"),
        "n_results": len(all_results),
        "skipped": [e for e in events if e["event"] == "tier_skipped"],
    }


def load_sweep_results(config: RunConfig) -> dict[tuple[str, int], SweepResult]:
    """Rebuild sweep results from the interchange files this config produced."""
    sweep_dir = _out(config) / "sweeps"
    paths = sorted(sweep_dir.glob("*.ndjson"))
    if not paths:
        raise UsageError(f"no sweep outputs under {sweep_dir}; run `ctxlens sweep` first")
    h = config.config_hash()
    out: dict[tuple[str, int], SweepResult] = {}
    for path in paths:
        header, recs = read_records(path)
        if header.get("config_hash") != h:
            raise ArtifactMismatchError(
                f"{path} was produced under config {header.get('config_hash')!r}; "
                f"current config is {h!r}"
            )
        doc_id = str(header["doc_id"])
        k = int(header["context_len"])
        out[(doc_id, k)] = SweepResult.build(doc_id, k, recs)
    return out


def _paired(config: RunConfig, docs: list[Document],
            results: dict[tuple[str, int], SweepResult],
            events: list[dict]) -> dict[int, dict[str, list[PairedComparison]]]:
    """Aligned comparisons per configured (K, 2K) pair, keyed by K then doc id."""
    pairs_by_k: dict[int, dict[str, list[PairedComparison]]] = {}
    doc_by_id = {d.doc_id: d for d in docs}
    comparison_pairs = config.sweep_config().comparison_pairs
    if not comparison_pairs:
        raise UsageError("config defines no (K, 2K) comparison pairs")
    for k, k2 in comparison_pairs:
        present: dict[str, list[PairedComparison]] = {}
        for doc in docs:
            res_k = results.get((doc.doc_id, k))
            res_2k = results.get((doc.doc_id, k2))
            if res_k is None and res_2k is None:
                continue
            if res_k is None or res_2k is None:
                missing = k if res_k is None else k2
                events.append({
                    "event": "pair_skipped", "doc_id": doc.doc_id,
                    "detail": f"tier K={missing} missing for this document",
                })
                continue
            present[doc.doc_id] = align_comparisons(res_k, res_2k, doc_by_id[doc.doc_id])
        if not present:
            have_k = any((d.doc_id, k) in results for d in docs)
            missing = k2 if have_k else k
            raise UsageError(
                f"no document has sweep outputs for both tiers of the ({k}, {k2}) "
                f"comparison; tier K={missing} is missing"
            )
        pairs_by_k[k] = present
    return pairs_by_k


def _annotated(docs: list[Document], pairs_by_k: dict[int, dict[str, list[PairedComparison]]],
               n: int, freq_table: FrequencyTable | None = None
               ) -> dict[int, list[PairedComparison]]:
    """Pool each pair's comparisons across documents, with covariates filled in."""
    doc_by_id = {d.doc_id: d for d in docs}
    out: dict[int, list[PairedComparison]] = {}
    for k, per_doc in pairs_by_k.items():
        pooled = []
        for doc_id in sorted(per_doc):
            doc = doc_by_id[doc_id]
            index = NGramIndex(doc.tokens, n)
            pooled.extend(annotate_pairs(doc, per_doc[doc_id], n=n, k=k,
                                         freq_table=freq_table, index=index))
        out[k] = pooled
    return out


def run_analyze(config: RunConfig, analysis_name: str) -> dict:
    """Run one named analysis over persisted sweep outputs; write CSV + JSON."""
    if analysis_name not in ANALYSES:
        raise UsageError(f"unknown analysis {analysis_name!r}; choose from {', '.join(ANALYSES)}")
    vocab, docs, events = load_documents(config)
    results = load_sweep_results(config)
    h = config.config_hash()
    out = _out(config)
    report_dir = out / "reports"
    summary: dict = {"analysis": analysis_name, "config_hash": h}
    csv_path = report_dir / f"{analysis_name.replace('-', '_')}.csv"
    json_path = report_dir / f"{analysis_name.replace('-', '_')}.json"

    if analysis_name == "confidence":
        needed = set(config.context_lens)
        have = {k for _, k in results}
        missing = sorted(needed - have)
        if missing:
            raise UsageError(f"sweep outputs missing for tier K={missing[0]}")
        stats = an.confidence_stats(res for res in results.values())
        rows = []
        body = []
        for k in sorted(stats):
            for label in ("T", "F"):
                g = stats[k].get(label)
                if g is None:
                    continue
                rows.append([k, label, repr(g.entropy_mean), repr(g.max_prob_mean), g.n])
                body.append({"K": k, "group": label, "entropy": g.entropy_mean,
                             "max_prob": g.max_prob_mean, "n": g.n})
        _write_csv(csv_path, h, ["K", "group", "entropy_mean", "max_prob_mean", "n"], rows)
        summary["results"] = body
    else:
        pairs_by_k = _paired(config, docs, results, events)
        ks = sorted(pairs_by_k)

        if analysis_name == "ratios":
            rows = [["ratio"] + [f"K{k}" for k in ks]]
            per_k = {k: an.decrease_increase_ratios(
                [p for doc_pairs in pairs_by_k[k].values() for p in doc_pairs],
                epsilon=config.epsilon) for k in ks}
            for field in ("decrease", "increase", "unchanged"):
                rows.append([field] + [repr(getattr(per_k[k], field)) for k in ks])
            _write_csv(csv_path, h, rows[0], rows[1:])
            summary["epsilon"] = config.epsilon
            summary["results"] = [
                {"K": k, "decrease": per_k[k].decrease, "increase": per_k[k].increase,
                 "unchanged": per_k[k].unchanged, "n": per_k[k].n} for k in ks
            ]

        elif analysis_name == "pos":
            per_k = {k: an.pos_class_decrements(
                [p for doc_pairs in pairs_by_k[k].values() for p in doc_pairs]) for k in ks}
            rows = []
            for cls in PosClass:
                row = [cls.value]
                for k in ks:
                    mean = per_k[k].get(cls)
                    row.append("" if mean is None else repr(mean))
                rows.append(row)
            _write_csv(csv_path, h, ["pos_class"] + [f"K{k}" for k in ks], rows)
            summary["results"] = [
                {"K": k, "class_means": {cls.value: mean for cls, mean in
                                         sorted(per_k[k].items(), key=lambda kv: kv[0].value)}}
                for k in ks
            ]

        elif analysis_name == "subword":
            rows = []
            body = []
            for k in ks:
                pooled = [p for doc_pairs in pairs_by_k[k].values() for p in doc_pairs]
                overall = an.delta_d(pooled)
                per_class = an.delta_d(
                    pooled, by_class=True,
                    warn=lambda msg: events.append(
                        {"event": "stratum_omitted", "K": k, "detail": msg}),
                )
                rows.append([k, "overall", repr(overall)])
                for cls, gap in sorted(per_class.items(), key=lambda kv: kv[0].value):
                    rows.append([k, cls.value, repr(gap)])
                body.append({"K": k, "overall": overall,
                             "per_class": {cls.value: gap for cls, gap in
                                           sorted(per_class.items(), key=lambda kv: kv[0].value)}})
            _write_csv(csv_path, h, ["K", "stratum", "delta_d"], rows)
            summary["results"] = body

        elif analysis_name == "ngram":
            annotated = _annotated(docs, pairs_by_k, config.ngram_n)
            rows = []
            body = []
            for k in ks:
                corr = an.ngram_correlation(annotated[k], config.ngram_n)
                rows.append([k, config.ngram_n, repr(corr.rho), repr(corr.p_value),
                             corr.n, corr.significant])
                body.append({"K": k, "N": config.ngram_n, "rho": corr.rho,
                             "p_value": corr.p_value, "n": corr.n,
                             "significant": corr.significant})
            _write_csv(csv_path, h, ["K", "N", "rho", "p_value", "n", "significant"], rows)
            summary["N"] = config.ngram_n
            summary["results"] = body

        elif analysis_name == "ngram-sweep":
            if config.ngram_n_range is None:
                raise UsageError("ngram-sweep needs ngram_n_range in the config")
            lo, hi = config.ngram_n_range
            k = ks[-1]  # widest configured comparison pair
            rows = []
            body = []
            for n in range(lo, hi + 1):
                annotated = _annotated(docs, {k: pairs_by_k[k]}, n)
                try:
                    corr = an.ngram_correlation(annotated[k], n)
                except ConstantInputError as e:
                    events.append({"event": "n_skipped", "N": n, "detail": str(e)})
                    continue
                rows.append([k, n, repr(corr.rho), repr(corr.p_value), corr.n,
                             corr.significant])
                body.append({"K": k, "N": n, "rho": corr.rho, "p_value": corr.p_value,
                             "n": corr.n, "significant": corr.significant})
            _write_csv(csv_path, h, ["K", "N", "rho", "p_value", "n", "significant"], rows)
            summary["results"] = body

        elif analysis_name == "frequency":
            if not config.freq_corpus_paths:
                raise UsageError("frequency analysis needs freq_corpus_paths in the config")
            freq_table = build_frequency_table(config.freq_corpus_paths, vocab)
            freq_table.save(out / "freq_table.tsv")
            annotated = _annotated(docs, pairs_by_k, config.ngram_n, freq_table)
            rows = []
            body = []
            for k in ks:
                groups = an.grouped_frequency_correlation(
                    annotated[k],
                    extra_breakpoint=config.extra_delta_n_breakpoint,
                    warn=lambda msg: events.append(
                        {"event": "group_omitted", "K": k, "detail": msg}),
                )
                for label in sorted(groups):
                    corr = groups[label]
                    rows.append([k, label, repr(corr.rho), repr(corr.p_value),
                                 corr.n, corr.significant])
                    body.append({"K": k, "group": label, "rho": corr.rho,
                                 "p_value": corr.p_value, "n": corr.n,
                                 "significant": corr.significant})
            _write_csv(csv_path, h,
                       ["K", "group", "rho", "p_value", "n", "significant"], rows)
            summary["N"] = config.ngram_n
            summary["results"] = body

    _write_json(json_path, summary)
    _write_log(out / "logs" / f"analyze_{analysis_name.replace('-', '_')}.ndjson", events)
    return {
        "config_hash": h,
        "csv_path": str(csv_path),
        "json_path": str(json_path),
        "summary": summary,
    }
