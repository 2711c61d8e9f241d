#!/usr/bin/env node
/**
 * Usage: ctxlens-extract <job.json>
 *
 * Reads an extraction job, runs the model, and atomically writes the
 * interchange file. Any failure (bad job, model load, invariant violation)
 * exits nonzero and leaves no partial output behind.
 */

import { readFileSync } from "node:fs";

import { JobSchema, runJob, writeResult } from "./extract.js";

function main(argv: string[]): number {
  if (argv.length !== 1) {
    console.error("usage: ctxlens-extract <job.json>");
    return 2;
  }
  let job;
  try {
    job = JobSchema.parse(JSON.parse(readFileSync(argv[0], "utf-8")));
  } catch (err) {
    console.error(`invalid job file: ${err instanceof Error ? err.message : err}`);
    return 2;
  }
  try {
    const result = runJob(job);
    writeResult(result);
    console.log(
      JSON.stringify({
        output_path: result.outputPath,
        records: result.records.length,
        vocab_size: result.header.vocab_size,
        context_lens: result.header.context_lens,
      }),
    );
    return 0;
  } catch (err) {
    console.error(`extraction failed: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

process.exit(main(process.argv.slice(2)));
