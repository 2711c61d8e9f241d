import { existsSync, mkdtempSync, readFileSync, readdirSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterEach, describe, expect, it } from "vitest";

import { scoredPositions } from "../src/chunking.js";
import { JobSchema, runJob, writeResult } from "../src/extract.js";

const dirs: string[] = [];

function workdir(): string {
  const dir = mkdtempSync(join(tmpdir(), "extract-test-"));
  dirs.push(dir);
  return dir;
}

afterEach(() => {
  while (dirs.length) rmSync(dirs.pop()!, { recursive: true, force: true });
});

function tinyJob(overrides: Record<string, unknown> = {}) {
  // 64-token document, K tiers {16, 32}, stride 4 at both tiers.
  const tokenIds = Array.from({ length: 64 }, (_, i) => (i * 7 + 3) % 20);
  return JobSchema.parse({
    model: "builtin-tiny@11",
    doc_id: "tiny-fixture",
    token_ids: tokenIds,
    context_lens: [16, 32],
    strides: { "16": 4, "32": 4 },
    output_path: join(workdir(), "out.ndjson"),
    ...overrides,
  });
}

describe("runJob", () => {
  it("scores exactly the protocol's position set at every tier", () => {
    const job = tinyJob();
    const result = runJob(job);
    for (const k of [16, 32]) {
      const got = result.records
        .filter((r) => r.context_len === k)
        .map((r) => r.token_index)
        .sort((a, b) => a - b);
      expect(got).toEqual(scoredPositions(64, k, 4));
    }
  });

  it("writes a parseable interchange file with a conforming header", () => {
    const job = tinyJob();
    const result = runJob(job);
    writeResult(result);
    const lines = readFileSync(job.output_path, "utf-8").trimEnd().split("\n");
    const header = JSON.parse(lines[0]);
    expect(header.schema_version).toBe(1);
    expect(header.vocab_size).toBeGreaterThan(0);
    expect(header.tokenizer_name).toBe("tiny-rnn-char");
    expect(lines).toHaveLength(1 + result.records.length);
    for (const line of lines.slice(1)) {
      const rec = JSON.parse(line);
      expect(Object.keys(rec)).toEqual([
        "doc_id", "token_index", "context_len", "log_prob",
        "entropy", "max_prob", "argmax_id", "correct",
      ]);
      expect(rec.log_prob).toBeLessThanOrEqual(0);
      expect(rec.max_prob + 1e-9).toBeGreaterThanOrEqual(Math.exp(rec.log_prob));
    }
  });

  it("repeat extraction is reproducible within 1e-6", () => {
    const a = runJob(tinyJob());
    const b = runJob(tinyJob());
    expect(b.records).toHaveLength(a.records.length);
    for (let i = 0; i < a.records.length; i++) {
      expect(Math.abs(a.records[i].log_prob - b.records[i].log_prob)).toBeLessThan(1e-6);
    }
  });

  it("accepts raw text by tokenizing with the model's tokenizer", () => {
    const job = tinyJob({
      token_ids: undefined,
      text: "the quick brown fox jumps over the lazy dog again and again. ".repeat(3),
      context_lens: [16],
      strides: { "16": 4 },
    });
    const result = runJob(job);
    expect(result.records.length).toBeGreaterThan(0);
  });

  it("rejects documents not longer than the largest tier", () => {
    expect(() => runJob(tinyJob({ token_ids: Array(32).fill(1) }))).toThrow(/needs more/);
  });

  it("rejects token ids outside the model vocabulary", () => {
    expect(() => runJob(tinyJob({ token_ids: Array(64).fill(10_000) }))).toThrow(/vocabulary/);
  });

  it("job must carry exactly one of text or token_ids", () => {
    expect(() => tinyJob({ text: "also text" })).toThrow();
    expect(() => tinyJob({ token_ids: undefined })).toThrow();
  });

  it("failed writes leave no partial output", () => {
    const job = tinyJob({ output_path: join(workdir(), "no-such-dir", "out.ndjson") });
    const result = runJob(job);
    expect(() => writeResult(result)).toThrow();
    const dir = join(job.output_path, "..", "..");
    expect(existsSync(job.output_path)).toBe(false);
    expect(readdirSync(dir).filter((f) => f.includes(".tmp"))).toEqual([]);
  });
});
