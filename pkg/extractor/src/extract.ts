/**
 * Extraction pipeline: frozen checkpoint + labeled dataset split -> NMFT
 * file plus a JSON sidecar recording model id, preprocessing hash, and
 * split, so every extraction is reproducible from the committed artifacts.
 */

import { mkdirSync, writeFileSync } from 'node:fs'
import { dirname } from 'node:path'

import { loadCheckpoint } from './checkpoints.js'
import { loadSplit } from './datasets.js'
import { embedBatch, type Pooling } from './model.js'
import { encodeNmft } from './nmft.js'
import { preprocessingConfig, preprocessingHash, resolveModel } from './registry.js'

export interface ExtractSpec {
  modelId: string
  datasetId: string
  split: 'train' | 'test'
  pooling: Pooling
  out: string
}

export interface ExtractResult {
  out: string
  sidecar: string
  m: number
  d: number
  numClasses: number
}

export function extract(spec: ExtractSpec): ExtractResult {
  // resolve both identifiers before touching any payload
  const modelEntry = resolveModel(spec.modelId)
  const data = loadSplit(spec.datasetId, spec.split)
  const checkpoint = loadCheckpoint(modelEntry.file)

  const features = embedBatch(checkpoint, data.inputs, spec.pooling)
  const payload = encodeNmft({
    features,
    m: data.inputs.length,
    d: checkpoint.embedding_dim,
    labels: Uint32Array.from(data.labels),
    numClasses: data.classes,
  })
  mkdirSync(dirname(spec.out) || '.', { recursive: true })
  writeFileSync(spec.out, payload)

  const sidecarPath = spec.out + '.meta.json'
  const sidecar = {
    schema_version: 1,
    kind: 'extraction',
    model_id: spec.modelId,
    model_family: modelEntry.family,
    embedding_dim: checkpoint.embedding_dim,
    dataset_id: spec.datasetId,
    split: spec.split,
    pooling: spec.pooling,
    preprocessing: preprocessingConfig(modelEntry.family),
    preprocessing_sha256: preprocessingHash(),
    weights_sha256: checkpoint.weights_sha256,
  }
  writeFileSync(sidecarPath, JSON.stringify(sidecar, null, 2) + '\n')

  return {
    out: spec.out,
    sidecar: sidecarPath,
    m: data.inputs.length,
    d: checkpoint.embedding_dim,
    numClasses: data.classes,
  }
}
