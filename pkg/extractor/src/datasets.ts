import { readFileSync } from 'node:fs'

import { resolveDataset } from './registry.js'

export interface LabeledSplit {
  inputs: number[][]
  labels: number[]
  classes: number
}

export function loadSplit(datasetId: string, split: 'train' | 'test'): LabeledSplit {
  const entry = resolveDataset(datasetId)
  const parsed = JSON.parse(readFileSync(entry.file, 'utf-8'))
  const data = parsed.splits?.[split]
  if (!data) throw new Error(`dataset '${datasetId}' has no split '${split}'`)
  const { inputs, labels } = data
  if (!Array.isArray(inputs) || !Array.isArray(labels) || inputs.length !== labels.length) {
    throw new Error(`dataset '${datasetId}' split '${split}' is malformed`)
  }
  for (const row of inputs) {
    if (row.length !== entry.inputDim) {
      throw new Error(`dataset '${datasetId}' row width ${row.length} != ${entry.inputDim}`)
    }
  }
  return { inputs, labels, classes: parsed.classes }
}
