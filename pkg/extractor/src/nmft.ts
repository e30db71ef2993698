/**
 * NMFT feature-file writer (and reader, used by the tests).
 *
 * Layout, little-endian throughout:
 *   magic "NMFT" | version u32 = 1 | m u64 | d u64 | num_classes u32 |
 *   flags u32 (bit0 = has_labels) | m*d float32 row-major | m u32 labels
 */

const MAGIC = 'NMFT'
const VERSION = 1
const HEADER_BYTES = 32
const FLAG_HAS_LABELS = 1

export interface FeaturePayload {
  features: Float32Array // m * d, row-major
  m: number
  d: number
  labels?: Uint32Array
  numClasses: number
}

export function encodeNmft(payload: FeaturePayload): Buffer {
  const { features, m, d, labels, numClasses } = payload
  if (m < 1 || d < 1) throw new Error(`sizes must be positive, got m=${m} d=${d}`)
  if (features.length !== m * d) {
    throw new Error(`feature length ${features.length} != m*d = ${m * d}`)
  }
  for (const v of features) {
    if (!Number.isFinite(v)) throw new Error('features must be finite')
  }
  if (labels) {
    if (labels.length !== m) throw new Error(`label length ${labels.length} != m = ${m}`)
    if (numClasses < 1) throw new Error('labeled payloads need numClasses >= 1')
    for (const y of labels) {
      if (y >= numClasses) throw new Error(`label ${y} out of range for numClasses=${numClasses}`)
    }
  } else if (numClasses !== 0) {
    throw new Error('unlabeled payloads must declare numClasses = 0')
  }

  const total = HEADER_BYTES + m * d * 4 + (labels ? m * 4 : 0)
  const buf = Buffer.alloc(total)
  buf.write(MAGIC, 0, 'ascii')
  buf.writeUInt32LE(VERSION, 4)
  buf.writeBigUInt64LE(BigInt(m), 8)
  buf.writeBigUInt64LE(BigInt(d), 16)
  buf.writeUInt32LE(numClasses, 24)
  buf.writeUInt32LE(labels ? FLAG_HAS_LABELS : 0, 28)
  let offset = HEADER_BYTES
  for (let i = 0; i < features.length; i++) {
    buf.writeFloatLE(features[i], offset)
    offset += 4
  }
  if (labels) {
    for (let i = 0; i < labels.length; i++) {
      buf.writeUInt32LE(labels[i], offset)
      offset += 4
    }
  }
  return buf
}

export function decodeNmft(buf: Buffer): FeaturePayload {
  if (buf.length < HEADER_BYTES) throw new Error('truncated header')
  if (buf.toString('ascii', 0, 4) !== MAGIC) throw new Error('bad magic')
  if (buf.readUInt32LE(4) !== VERSION) throw new Error('unsupported version')
  const m = Number(buf.readBigUInt64LE(8))
  const d = Number(buf.readBigUInt64LE(16))
  const numClasses = buf.readUInt32LE(24)
  const hasLabels = (buf.readUInt32LE(28) & FLAG_HAS_LABELS) !== 0
  const expected = HEADER_BYTES + m * d * 4 + (hasLabels ? m * 4 : 0)
  if (buf.length !== expected) {
    throw new Error(`payload length mismatch: expected ${expected} bytes, found ${buf.length}`)
  }
  const features = new Float32Array(m * d)
  let offset = HEADER_BYTES
  for (let i = 0; i < features.length; i++) {
    features[i] = buf.readFloatLE(offset)
    offset += 4
  }
  let labels: Uint32Array | undefined
  if (hasLabels) {
    labels = new Uint32Array(m)
    for (let i = 0; i < m; i++) {
      labels[i] = buf.readUInt32LE(offset)
      offset += 4
    }
  }
  return { features, m, d, labels, numClasses }
}
