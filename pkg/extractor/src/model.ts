/**
 * Frozen forward pass and pooling.
 *
 * Inputs run through the checkpoint's dense/relu stack in float64 and the
 * pooled embeddings are downcast to float32 only when written. Nothing here
 * mutates checkpoint weights.
 */

import type { Checkpoint, DenseLayer } from './checkpoints.js'

export type Pooling = 'cls' | 'mean' | 'penultimate'

export const POOLINGS_BY_FAMILY: Record<Checkpoint['family'], Pooling[]> = {
  'dense-stack': ['penultimate'],
  'token-encoder': ['cls', 'mean'],
}

function denseForward(layer: DenseLayer, row: Float64Array): Float64Array {
  const out = new Float64Array(layer.out)
  for (let j = 0; j < layer.out; j++) out[j] = layer.bias[j]
  for (let k = 0; k < layer.in; k++) {
    const x = row[k]
    if (x === 0) continue
    const base = k * layer.out
    for (let j = 0; j < layer.out; j++) out[j] += x * layer.weights[base + j]
  }
  return out
}

function stackForward(checkpoint: Checkpoint, row: Float64Array): Float64Array {
  let activ = row
  for (const layer of checkpoint.layers) {
    if (layer.type === 'dense') {
      activ = denseForward(layer, activ)
    } else {
      activ = activ.map((v) => (v > 0 ? v : 0))
    }
  }
  return activ
}

/** Embed one sample; returns a float64 vector of length embedding_dim. */
export function embed(checkpoint: Checkpoint, input: number[], pooling: Pooling): Float64Array {
  if (input.length !== checkpoint.input.dim) {
    throw new Error(
      `input dim ${input.length} does not match model dim ${checkpoint.input.dim}`,
    )
  }
  const allowed = POOLINGS_BY_FAMILY[checkpoint.family]
  if (!allowed.includes(pooling)) {
    throw new Error(
      `pooling '${pooling}' is not supported by family '${checkpoint.family}' (use ${allowed.join('|')})`,
    )
  }

  if (checkpoint.family === 'dense-stack') {
    return stackForward(checkpoint, Float64Array.from(input))
  }

  // token-encoder: the input tiles into contiguous tokens, each token runs
  // through the shared stack, then cls (first token) or mean pooling
  const tokens = checkpoint.tokens!
  const tokenDim = checkpoint.token_dim!
  const perToken: Float64Array[] = []
  for (let t = 0; t < tokens; t++) {
    const slice = Float64Array.from(input.slice(t * tokenDim, (t + 1) * tokenDim))
    perToken.push(stackForward(checkpoint, slice))
  }
  if (pooling === 'cls') return perToken[0]
  const pooled = new Float64Array(checkpoint.embedding_dim)
  for (const tok of perToken) {
    for (let j = 0; j < pooled.length; j++) pooled[j] += tok[j]
  }
  for (let j = 0; j < pooled.length; j++) pooled[j] /= tokens
  return pooled
}

/** Embed a batch into a row-major float32 matrix. */
export function embedBatch(
  checkpoint: Checkpoint,
  inputs: number[][],
  pooling: Pooling,
): Float32Array {
  const d = checkpoint.embedding_dim
  const out = new Float32Array(inputs.length * d)
  inputs.forEach((input, i) => {
    const vec = embed(checkpoint, input, pooling)
    for (let j = 0; j < d; j++) out[i * d + j] = Math.fround(vec[j])
  })
  return out
}
