#!/usr/bin/env node
/**
 * nmft-extract <command>
 *
 *   extract --model ID --dataset ID --split train|test --pooling P --out PATH
 *   list-models [--filter TEXT]
 *   list-datasets [--filter TEXT]
 *
 * Emitted files are consumed by the tuning toolkit (`nmtune validate`,
 * `nmtune train`, ...).
 */

import { extract } from './extract.js'
import type { Pooling } from './model.js'
import { listDatasets, listModels } from './registry.js'

function parseFlags(argv: string[]): Record<string, string> {
  const flags: Record<string, string> = {}
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i]
    if (!key.startsWith('--') || i + 1 >= argv.length) {
      throw new Error(`malformed flags near '${key}'`)
    }
    flags[key.slice(2)] = argv[i + 1]
  }
  return flags
}

function need(flags: Record<string, string>, name: string): string {
  const value = flags[name]
  if (value === undefined) throw new Error(`missing required flag --${name}`)
  return value
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv
  try {
    if (command === 'extract') {
      const flags = parseFlags(rest)
      const split = need(flags, 'split')
      if (split !== 'train' && split !== 'test') {
        throw new Error(`--split must be train or test, got '${split}'`)
      }
      const result = extract({
        modelId: need(flags, 'model'),
        datasetId: need(flags, 'dataset'),
        split,
        pooling: (flags['pooling'] ?? 'penultimate') as Pooling,
        out: need(flags, 'out'),
      })
      console.log(JSON.stringify(result, null, 2))
      return 0
    }
    if (command === 'list-models') {
      const flags = parseFlags(rest)
      const rows = listModels(flags['filter']).map((m) => ({
        id: m.id,
        family: m.family,
        embedding_dim: m.embeddingDim,
        input_dim: m.inputDim,
        poolings: m.poolings,
      }))
      console.log(JSON.stringify(rows, null, 2))
      return 0
    }
    if (command === 'list-datasets') {
      const flags = parseFlags(rest)
      const rows = listDatasets(flags['filter']).map((d) => ({
        id: d.id,
        classes: d.classes,
        input_dim: d.inputDim,
        splits: d.splits,
      }))
      console.log(JSON.stringify(rows, null, 2))
      return 0
    }
    console.error(`unknown command '${command ?? ''}'; use extract | list-models | list-datasets`)
    return 1
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : String(err)}`)
    return 1
  }
}

if (import.meta.url === `file://${process.argv[1]}`) {
  process.exit(main(process.argv.slice(2)))
}
