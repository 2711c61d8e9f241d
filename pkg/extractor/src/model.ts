/**
 * Self-contained causal language model used when no external model is
 * available: a tiny Elman-style RNN with seeded random weights. It is not
 * trained — it exists to produce genuine full-prefix-dependent next-token
 * distributions so the extraction pipeline, chunking and interchange output
 * can be exercised end to end, deterministically, with zero downloads.
 */

import { gaussian, mulberry32 } from "./rng.js";

/** Characters the built-in tokenizer knows; one id per character. */
const CHARSET = "abcdefghijklmnopqrstuvwxyz .,!?'\n0123456789";

export interface CausalLM {
  vocabSize: number;
  tokenizerName: string;
  /** Next-token distribution given the (possibly empty) prefix. */
  distribution(prefix: number[]): Float64Array;
  encode?(text: string): number[];
}

export class TinyRnnLM implements CausalLM {
  readonly vocabSize: number;
  readonly tokenizerName = "tiny-rnn-char";
  private readonly dim: number;
  private readonly embed: Float64Array; // vocab x dim
  private readonly recur: Float64Array; // dim x dim
  private readonly out: Float64Array;   // vocab x dim
  private readonly bias: Float64Array;  // vocab

  constructor(seed: number, vocabSize = CHARSET.length, dim = 16) {
    this.vocabSize = vocabSize;
    this.dim = dim;
    const draw = gaussian(mulberry32(seed));
    const fill = (n: number, scale: number) => {
      const arr = new Float64Array(n);
      for (let i = 0; i < n; i++) arr[i] = draw() * scale;
      return arr;
    };
    this.embed = fill(vocabSize * dim, 0.8);
    this.recur = fill(dim * dim, 0.35);
    this.out = fill(vocabSize * dim, 0.9);
    this.bias = fill(vocabSize, 0.3);
  }

  encode(text: string): number[] {
    const ids: number[] = [];
    for (const ch of text.toLowerCase()) {
      const id = CHARSET.indexOf(ch);
      ids.push(id >= 0 ? id : CHARSET.indexOf(" "));
    }
    return ids;
  }

  distribution(prefix: number[]): Float64Array {
    const { dim } = this;
    let h = new Float64Array(dim);
    for (const tok of prefix) {
      if (tok < 0 || tok >= this.vocabSize) {
        throw new Error(`token id ${tok} outside vocabulary of ${this.vocabSize}`);
      }
      const next = new Float64Array(dim);
      for (let i = 0; i < dim; i++) {
        let acc = this.embed[tok * dim + i];
        for (let j = 0; j < dim; j++) acc += this.recur[i * dim + j] * h[j];
        next[i] = Math.tanh(acc);
      }
      h = next;
    }
    const logits = new Float64Array(this.vocabSize);
    let maxLogit = -Infinity;
    for (let v = 0; v < this.vocabSize; v++) {
      let acc = this.bias[v];
      for (let j = 0; j < dim; j++) acc += this.out[v * dim + j] * h[j];
      logits[v] = acc;
      if (acc > maxLogit) maxLogit = acc;
    }
    let z = 0;
    for (let v = 0; v < this.vocabSize; v++) {
      logits[v] = Math.exp(logits[v] - maxLogit);
      z += logits[v];
    }
    for (let v = 0; v < this.vocabSize; v++) logits[v] /= z;
    return logits;
  }
}

/**
 * Resolve a model identifier. `builtin-tiny` (optionally `builtin-tiny@seed`)
 * is always available; anything else fails loudly, since this environment has
 * no way to fetch external weights.
 */
export function loadModel(identifier: string): CausalLM {
  const match = /^builtin-tiny(?:@(\d+))?$/.exec(identifier);
  if (!match) {
    throw new Error(
      `cannot load model ${JSON.stringify(identifier)}; only 'builtin-tiny[@seed]' is available`,
    );
  }
  const seed = match[1] !== undefined ? Number(match[1]) : 1337;
  return new TinyRnnLM(seed);
}
