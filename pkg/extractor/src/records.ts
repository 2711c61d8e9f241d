/**
 * Interchange records: one JSON line per scored token. Field set and
 * invariants match the analysis toolkit's reader; `context_len` carries the
 * context tier K so file-backed stores can key lookups by it.
 */

export const SCHEMA_VERSION = 1;

// Invariants that are exact in real arithmetic get this much float slack.
const FLOAT_SLACK = 1e-9;

export interface PredictionRecord {
  doc_id: string;
  token_index: number;
  context_len: number;
  log_prob: number;
  entropy: number;
  max_prob: number;
  argmax_id: number;
  correct: boolean;
}

export interface Header {
  schema_version: number;
  vocab_size: number;
  tokenizer_name: string;
  [extra: string]: unknown;
}

export interface Summaries {
  entropy: number;
  maxProb: number;
  argmax: number;
}

/** Entropy (nats), max probability and argmax id; ties go to the lowest id. */
export function summarize(dist: Float64Array): Summaries {
  let entropy = 0;
  let maxProb = -Infinity;
  let argmax = 0;
  for (let v = 0; v < dist.length; v++) {
    const p = dist[v];
    if (p <= 0) throw new Error(`distribution has non-positive mass at id ${v}`);
    entropy -= p * Math.log(p);
    if (p > maxProb) {
      maxProb = p;
      argmax = v;
    }
  }
  return { entropy, maxProb, argmax };
}

/** Self-check run on every record before anything is written. */
export function validateRecord(rec: PredictionRecord, vocabSize: number): void {
  const where = `doc=${rec.doc_id} K=${rec.context_len} i=${rec.token_index}`;
  if (!(rec.log_prob <= 0)) throw new Error(`${where}: log_prob ${rec.log_prob} > 0`);
  if (!(rec.max_prob > 0 && rec.max_prob <= 1 + FLOAT_SLACK)) {
    throw new Error(`${where}: max_prob ${rec.max_prob} outside (0, 1]`);
  }
  if (rec.max_prob + FLOAT_SLACK < Math.exp(rec.log_prob)) {
    throw new Error(`${where}: max_prob ${rec.max_prob} < exp(log_prob)`);
  }
  if (rec.entropy < -FLOAT_SLACK || rec.entropy > Math.log(vocabSize) + FLOAT_SLACK) {
    throw new Error(`${where}: entropy ${rec.entropy} outside [0, ln ${vocabSize}]`);
  }
  if (rec.argmax_id < 0 || rec.argmax_id >= vocabSize) {
    throw new Error(`${where}: argmax_id ${rec.argmax_id} outside vocabulary`);
  }
}

const FIELD_ORDER: (keyof PredictionRecord)[] = [
  "doc_id", "token_index", "context_len", "log_prob",
  "entropy", "max_prob", "argmax_id", "correct",
];

export function recordLine(rec: PredictionRecord): string {
  const ordered: Record<string, unknown> = {};
  for (const key of FIELD_ORDER) ordered[key] = rec[key];
  return JSON.stringify(ordered);
}

export function headerLine(header: Header): string {
  if (header.schema_version !== SCHEMA_VERSION) {
    throw new Error(`unsupported schema_version ${header.schema_version}`);
  }
  const keys = Object.keys(header).sort();
  const ordered: Record<string, unknown> = {};
  for (const key of keys) ordered[key] = header[key];
  return JSON.stringify(ordered);
}
