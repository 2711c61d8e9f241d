/**
 * Extraction job: run a causal LM over one document under the
 * stride-chunked protocol and emit interchange records for every scored
 * position at every configured context tier.
 *
 * Tiers and stride mirror the analysis toolkit's run configuration, so the
 * scored-position sets on both sides agree by construction; the toolkit's
 * file-backed provider then serves these records during its own sweep.
 */

import { renameSync, rmSync, writeFileSync } from "node:fs";
import { z } from "zod";

import { chunkSpans } from "./chunking.js";
import { loadModel } from "./model.js";
import {
  Header,
  PredictionRecord,
  SCHEMA_VERSION,
  headerLine,
  recordLine,
  summarize,
  validateRecord,
} from "./records.js";

export const JobSchema = z
  .object({
    model: z.string().default("builtin-tiny"),
    doc_id: z.string(),
    text: z.string().optional(),
    token_ids: z.array(z.number().int().nonnegative()).optional(),
    context_lens: z.array(z.number().int().positive()).nonempty(),
    stride_ratio: z.number().int().positive().default(200),
    strides: z.record(z.string(), z.number().int().positive()).optional(),
    output_path: z.string(),
    device: z.string().default("cpu"),
    batch_size: z.number().int().positive().default(1),
    precision: z.enum(["float64"]).default("float64"),
  })
  .refine((job) => (job.text !== undefined) !== (job.token_ids !== undefined), {
    message: "provide exactly one of text or token_ids",
  });

export type ExtractionJob = z.infer<typeof JobSchema>;

export function strideFor(job: ExtractionJob, k: number): number {
  const explicit = job.strides?.[String(k)];
  if (explicit !== undefined) return explicit;
  return Math.max(1, Math.floor(k / job.stride_ratio));
}

export interface ExtractionResult {
  header: Header;
  records: PredictionRecord[];
  outputPath: string;
}

export function runJob(job: ExtractionJob): ExtractionResult {
  const model = loadModel(job.model);
  const tokens =
    job.token_ids ??
    (() => {
      if (!model.encode) throw new Error(`model ${job.model} cannot tokenize raw text`);
      return model.encode(job.text!);
    })();
  for (const t of tokens) {
    if (t >= model.vocabSize) {
      throw new Error(`token id ${t} outside model vocabulary of ${model.vocabSize}`);
    }
  }
  const tiers = [...job.context_lens].sort((a, b) => a - b);
  const maxK = tiers[tiers.length - 1];
  if (tokens.length <= maxK) {
    throw new Error(
      `document has ${tokens.length} tokens; needs more than the largest tier K=${maxK}`,
    );
  }

  const records: PredictionRecord[] = [];
  for (const k of tiers) {
    const s = strideFor(job, k);
    for (const span of chunkSpans(tokens.length, k, s)) {
      for (let i = span.scoreStart; i < span.scoreEnd; i++) {
        const prefix = tokens.slice(span.chunkStart, i);
        const dist = model.distribution(prefix);
        const { entropy, maxProb, argmax } = summarize(dist);
        const rec: PredictionRecord = {
          doc_id: job.doc_id,
          token_index: i,
          context_len: k, // wire format carries the tier
          log_prob: Math.log(dist[tokens[i]]),
          entropy,
          max_prob: maxProb,
          argmax_id: argmax,
          correct: argmax === tokens[i],
        };
        validateRecord(rec, model.vocabSize);
        records.push(rec);
      }
    }
  }

  const header: Header = {
    schema_version: SCHEMA_VERSION,
    vocab_size: model.vocabSize,
    tokenizer_name: model.tokenizerName,
    doc_id: job.doc_id,
    doc_len: tokens.length,
    model: job.model,
    stride: strideFor(job, tiers[0]),
    strides: Object.fromEntries(tiers.map((k) => [String(k), strideFor(job, k)])),
    context_lens: tiers,
  };
  return { header, records, outputPath: job.output_path };
}

/** Serialize and atomically move into place (temp file + rename, same dir). */
export function writeResult(result: ExtractionResult): void {
  const lines = [headerLine(result.header)];
  for (const rec of result.records) lines.push(recordLine(rec));
  const tmpFile = `${result.outputPath}.tmp-${process.pid}`;
  try {
    writeFileSync(tmpFile, lines.join("\n") + "\n", "utf-8");
    renameSync(tmpFile, result.outputPath);
  } catch (err) {
    rmSync(tmpFile, { force: true });
    throw err;
  }
}
