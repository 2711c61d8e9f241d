import { describe, expect, it } from "vitest";

import { TinyRnnLM, loadModel } from "../src/model.js";
import { summarize } from "../src/records.js";

describe("TinyRnnLM", () => {
  it("produces a normalized, strictly positive distribution", () => {
    const lm = new TinyRnnLM(7);
    const dist = lm.distribution([1, 2, 3]);
    let sum = 0;
    for (const p of dist) {
      expect(p).toBeGreaterThan(0);
      sum += p;
    }
    expect(Math.abs(sum - 1)).toBeLessThan(1e-9);
  });

  it("depends on the whole prefix, not just the last token", () => {
    const lm = new TinyRnnLM(7);
    const a = lm.distribution([1, 2, 3, 4]);
    const b = lm.distribution([5, 2, 3, 4]);
    let differs = false;
    for (let v = 0; v < a.length; v++) if (a[v] !== b[v]) differs = true;
    expect(differs).toBe(true);
  });

  it("is deterministic for a fixed seed", () => {
    const a = new TinyRnnLM(42).distribution([3, 1, 4, 1, 5]);
    const b = new TinyRnnLM(42).distribution([3, 1, 4, 1, 5]);
    expect([...a]).toEqual([...b]);
  });

  it("summaries satisfy the record invariants", () => {
    const lm = new TinyRnnLM(9);
    const dist = lm.distribution(lm.encode("the quick brown fox"));
    const { entropy, maxProb, argmax } = summarize(dist);
    expect(entropy).toBeGreaterThanOrEqual(0);
    expect(entropy).toBeLessThanOrEqual(Math.log(lm.vocabSize) + 1e-12);
    expect(maxProb).toBe(dist[argmax]);
    for (const p of dist) expect(maxProb).toBeGreaterThanOrEqual(p);
  });

  it("loadModel parses seeds and rejects unknown identifiers", () => {
    expect(loadModel("builtin-tiny").vocabSize).toBeGreaterThan(0);
    expect(loadModel("builtin-tiny@5").tokenizerName).toBe("tiny-rnn-char");
    expect(() => loadModel("gpt-420b")).toThrow(/cannot load model/);
  });
});
