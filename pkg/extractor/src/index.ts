export { chunkSpans, scoredPositions } from "./chunking.js";
export { JobSchema, runJob, strideFor, writeResult } from "./extract.js";
export type { ExtractionJob, ExtractionResult } from "./extract.js";
export { TinyRnnLM, loadModel } from "./model.js";
export type { CausalLM } from "./model.js";
export {
  SCHEMA_VERSION,
  headerLine,
  recordLine,
  summarize,
  validateRecord,
} from "./records.js";
export type { Header, PredictionRecord } from "./records.js";
