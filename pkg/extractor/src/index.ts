export { loadCheckpoint, weightsDigest, type Checkpoint, type Layer } from './checkpoints.js'
export { loadSplit, type LabeledSplit } from './datasets.js'
export { extract, type ExtractResult, type ExtractSpec } from './extract.js'
export { embed, embedBatch, POOLINGS_BY_FAMILY, type Pooling } from './model.js'
export { decodeNmft, encodeNmft, type FeaturePayload } from './nmft.js'
export {
  listDatasets,
  listModels,
  preprocessingConfig,
  preprocessingHash,
  resolveDataset,
  resolveModel,
  type DatasetEntry,
  type ModelEntry,
} from './registry.js'
