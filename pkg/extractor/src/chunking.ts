/**
 * Stride-chunked scoring layout, mirroring the analysis toolkit exactly:
 * chunks of K tokens start at 0, S, 2S, ...; the first chunk scores all of
 * its tokens (each from its in-chunk predecessors), later chunks only their
 * last S; if the document is not aligned to the stride grid a final chunk
 * anchors at the last token and scores the leftover suffix. Scored
 * positions partition the document.
 */

export interface ChunkSpan {
  chunkStart: number;
  scoreStart: number;
  scoreEnd: number; // exclusive
}

export function chunkSpans(docLen: number, k: number, s: number): ChunkSpan[] {
  if (!Number.isInteger(k) || k < 2 || k % 2 !== 0) {
    throw new Error(`context length must be even and >= 2, got ${k}`);
  }
  if (!Number.isInteger(s) || s < 1 || s > k) {
    throw new Error(`stride must be in [1, ${k}], got ${s}`);
  }
  if (docLen < k) {
    throw new Error(`document of ${docLen} tokens is shorter than K=${k}`);
  }
  const spans: ChunkSpan[] = [{ chunkStart: 0, scoreStart: 0, scoreEnd: k }];
  let start = s;
  while (start + k <= docLen) {
    spans.push({ chunkStart: start, scoreStart: start + k - s, scoreEnd: start + k });
    start += s;
  }
  const covered = spans[spans.length - 1].scoreEnd;
  if (covered < docLen) {
    spans.push({ chunkStart: docLen - k, scoreStart: covered, scoreEnd: docLen });
  }
  return spans;
}

export function scoredPositions(docLen: number, k: number, s: number): number[] {
  const out: number[] = [];
  for (const span of chunkSpans(docLen, k, s)) {
    for (let i = span.scoreStart; i < span.scoreEnd; i++) out.push(i);
  }
  return out;
}
