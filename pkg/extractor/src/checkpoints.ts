/**
 * Pinned checkpoint loading with integrity verification.
 *
 * A checkpoint is a committed JSON file carrying the frozen weights of a
 * small feature encoder plus a sha256 over the raw float32 weight bytes.
 * Loading recomputes the digest so a tampered file never runs.
 */

import { createHash } from 'node:crypto'
import { readFileSync } from 'node:fs'

export interface DenseLayer {
  type: 'dense'
  in: number
  out: number
  weights: number[] // row-major [in][out]
  bias: number[]
}

export interface ReluLayer {
  type: 'relu'
}

export type Layer = DenseLayer | ReluLayer

export interface Checkpoint {
  schema_version: number
  id: string
  family: 'dense-stack' | 'token-encoder'
  description: string
  embedding_dim: number
  input: { kind: 'vector'; dim: number }
  tokens?: number
  token_dim?: number
  layers: Layer[]
  weights_sha256: string
}

export function weightsDigest(layers: Layer[]): string {
  const hash = createHash('sha256')
  for (const layer of layers) {
    if (layer.type !== 'dense') continue
    hash.update(toF32Bytes(layer.weights))
    hash.update(toF32Bytes(layer.bias))
  }
  return hash.digest('hex')
}

function toF32Bytes(values: number[]): Buffer {
  const buf = Buffer.alloc(values.length * 4)
  values.forEach((v, i) => buf.writeFloatLE(v, i * 4))
  return buf
}

export function loadCheckpoint(path: string): Checkpoint {
  const parsed = JSON.parse(readFileSync(path, 'utf-8')) as Checkpoint
  if (parsed.schema_version !== 1) {
    throw new Error(`unsupported checkpoint schema ${parsed.schema_version}`)
  }
  const digest = weightsDigest(parsed.layers)
  if (digest !== parsed.weights_sha256) {
    throw new Error(
      `checkpoint ${parsed.id} failed integrity check: ${digest} != ${parsed.weights_sha256}`,
    )
  }
  if (parsed.family === 'token-encoder') {
    if (!parsed.tokens || !parsed.token_dim) {
      throw new Error(`token-encoder checkpoint ${parsed.id} is missing token geometry`)
    }
    if (parsed.tokens * parsed.token_dim !== parsed.input.dim) {
      throw new Error(`token geometry does not tile the input dim in ${parsed.id}`)
    }
  }
  return parsed
}
