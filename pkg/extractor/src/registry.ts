/**
 * Local registries of pinned checkpoints and datasets.
 *
 * Identifiers resolve to committed files before anything is loaded; there
 * are no network downloads. Listings are stable and sorted by id.
 */

import { createHash } from 'node:crypto'
import { readFileSync } from 'node:fs'
import { dirname, join } from 'node:path'
import { fileURLToPath } from 'node:url'

import type { Pooling } from './model.js'
import { POOLINGS_BY_FAMILY } from './model.js'

const ROOT = join(dirname(fileURLToPath(import.meta.url)), '..')

export interface ModelEntry {
  id: string
  family: 'dense-stack' | 'token-encoder'
  embeddingDim: number
  inputDim: number
  poolings: Pooling[]
  file: string
}

export interface DatasetEntry {
  id: string
  classes: number
  inputDim: number
  splits: string[]
  file: string
}

const MODELS: ModelEntry[] = [
  {
    id: 'tiny-tok-12',
    family: 'token-encoder',
    embeddingDim: 12,
    inputDim: 8,
    poolings: POOLINGS_BY_FAMILY['token-encoder'],
    file: join(ROOT, 'models', 'tiny-tok-12.json'),
  },
  {
    id: 'tiny-vec-16',
    family: 'dense-stack',
    embeddingDim: 16,
    inputDim: 8,
    poolings: POOLINGS_BY_FAMILY['dense-stack'],
    file: join(ROOT, 'models', 'tiny-vec-16.json'),
  },
]

const DATASETS: DatasetEntry[] = [
  {
    id: 'blobs-8d',
    classes: 2,
    inputDim: 8,
    splits: ['train', 'test'],
    file: join(ROOT, 'datasets', 'blobs-8d.json'),
  },
]

const PREPROCESSING_FILE = join(ROOT, 'models', 'preprocessing.json')

export function listModels(filter?: string): ModelEntry[] {
  const models = [...MODELS].sort((a, b) => a.id.localeCompare(b.id))
  return filter ? models.filter((m) => m.id.includes(filter)) : models
}

export function listDatasets(filter?: string): DatasetEntry[] {
  const datasets = [...DATASETS].sort((a, b) => a.id.localeCompare(b.id))
  return filter ? datasets.filter((d) => d.id.includes(filter)) : datasets
}

export function resolveModel(id: string): ModelEntry {
  const entry = MODELS.find((m) => m.id === id)
  if (!entry) {
    throw new Error(`unknown model '${id}'; known: ${MODELS.map((m) => m.id).join(', ')}`)
  }
  return entry
}

export function resolveDataset(id: string): DatasetEntry {
  const entry = DATASETS.find((d) => d.id === id)
  if (!entry) {
    throw new Error(`unknown dataset '${id}'; known: ${DATASETS.map((d) => d.id).join(', ')}`)
  }
  return entry
}

/** sha256 of the committed preprocessing config, recorded in sidecars. */
export function preprocessingHash(): string {
  return createHash('sha256').update(readFileSync(PREPROCESSING_FILE)).digest('hex')
}

export function preprocessingConfig(family: string): Record<string, string> {
  const parsed = JSON.parse(readFileSync(PREPROCESSING_FILE, 'utf-8'))
  const config = parsed.families?.[family]
  if (!config) throw new Error(`no pinned preprocessing for family '${family}'`)
  return config
}
