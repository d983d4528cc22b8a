/**
 * Interchange formats shared with the Python toolkit.
 *
 * Classification: UTF-8 CSV, header `label,l0,...,l{C-1}`, one sample per
 * row, logits serialized with 17 significant digits (lossless for doubles).
 *
 * Logits tensor: little-endian binary — magic `AIMT`, u32 version = 1,
 * u32 height, width, channels, then H*W*C float32 values row-major with
 * channel innermost. Label map: magic `AIML`, u32 version = 1, u32 height,
 * width, then H*W u16 labels; 0xFFFF marks ignored pixels.
 *
 * Manifest: `key: value` header lines (kind, num_classes, optional seed),
 * then one entry per line (a CSV path, or `<logits> <labels>` for
 * segmentation), relative to the manifest file.
 */

import * as fs from 'node:fs';
import * as path from 'node:path';

export const TENSOR_MAGIC = 'AIMT';
export const LABELS_MAGIC = 'AIML';
export const FORMAT_VERSION = 1;
export const IGNORE_LABEL = 0xffff;

export interface ClassifiedLogits {
  numClasses: number;
  logits: Float64Array[]; // one row per sample
  labels: number[];
}

export interface SegmentationPair {
  height: number;
  width: number;
  channels: number;
  /** row-major, channel innermost */
  values: Float32Array;
  /** row-major H*W, IGNORE_LABEL allowed */
  labels: Uint16Array;
}

function formatLogit(x: number): string {
  if (!Number.isFinite(x)) {
    throw new Error(`non-finite logit value ${x}`);
  }
  return x.toPrecision(17);
}

export function writeClassificationCsv(data: ClassifiedLogits, file: string): void {
  const c = data.numClasses;
  const header = 'label,' + Array.from({ length: c }, (_, i) => `l${i}`).join(',');
  const lines = [header];
  data.logits.forEach((row, i) => {
    if (row.length !== c) {
      throw new Error(`row ${i} has ${row.length} logits, expected ${c}`);
    }
    const label = data.labels[i];
    if (!Number.isInteger(label) || label < 0 || label >= c) {
      throw new Error(`label ${label} out of range for ${c} classes`);
    }
    lines.push(`${label},` + Array.from(row, formatLogit).join(','));
  });
  fs.writeFileSync(file, lines.join('\n') + '\n', 'utf8');
}

export function readClassificationCsv(file: string): ClassifiedLogits {
  const lines = fs.readFileSync(file, 'utf8').split('\n');
  if (lines.length === 0 || lines[0].trim() === '') {
    throw new Error(`${file}: missing header`);
  }
  const fields = lines[0].split(',');
  const c = fields.length - 1;
  if (fields[0] !== 'label' || c < 2) {
    throw new Error(`${file}: malformed header`);
  }
  const logits: Float64Array[] = [];
  const labels: number[] = [];
  for (let i = 1; i < lines.length; i++) {
    const line = lines[i];
    if (line.trim() === '') continue;
    const parts = line.split(',');
    if (parts.length !== c + 1) {
      throw new Error(`${file}:${i + 1}: ragged row`);
    }
    labels.push(Number(parts[0]));
    logits.push(Float64Array.from(parts.slice(1), Number));
  }
  return { numClasses: c, logits, labels };
}

function u32(value: number): Buffer {
  const buf = Buffer.alloc(4);
  buf.writeUInt32LE(value >>> 0);
  return buf;
}

export function writeLogitsTensor(pair: Omit<SegmentationPair, 'labels'>, file: string): void {
  const { height, width, channels, values } = pair;
  if (values.length !== height * width * channels) {
    throw new Error(`tensor payload length ${values.length} != ${height}*${width}*${channels}`);
  }
  const head = Buffer.concat([
    Buffer.from(TENSOR_MAGIC, 'ascii'),
    u32(FORMAT_VERSION),
    u32(height),
    u32(width),
    u32(channels),
  ]);
  const payload = Buffer.alloc(values.length * 4);
  for (let i = 0; i < values.length; i++) {
    payload.writeFloatLE(values[i], i * 4);
  }
  fs.writeFileSync(file, Buffer.concat([head, payload]));
}

export function readLogitsTensor(file: string): Omit<SegmentationPair, 'labels'> {
  const buf = fs.readFileSync(file);
  if (buf.length < 20 || buf.subarray(0, 4).toString('ascii') !== TENSOR_MAGIC) {
    throw new Error(`${file}: bad magic, expected ${TENSOR_MAGIC}`);
  }
  const version = buf.readUInt32LE(4);
  if (version !== FORMAT_VERSION) {
    throw new Error(`${file}: unsupported version ${version}`);
  }
  const height = buf.readUInt32LE(8);
  const width = buf.readUInt32LE(12);
  const channels = buf.readUInt32LE(16);
  const expected = height * width * channels * 4;
  if (buf.length !== 20 + expected) {
    throw new Error(`${file}: payload size mismatch`);
  }
  const values = new Float32Array(height * width * channels);
  for (let i = 0; i < values.length; i++) {
    values[i] = buf.readFloatLE(20 + i * 4);
  }
  return { height, width, channels, values };
}

export function writeLabelMap(
  labels: Uint16Array,
  height: number,
  width: number,
  file: string,
): void {
  if (labels.length !== height * width) {
    throw new Error(`label payload length ${labels.length} != ${height}*${width}`);
  }
  const head = Buffer.concat([
    Buffer.from(LABELS_MAGIC, 'ascii'),
    u32(FORMAT_VERSION),
    u32(height),
    u32(width),
  ]);
  const payload = Buffer.alloc(labels.length * 2);
  for (let i = 0; i < labels.length; i++) {
    payload.writeUInt16LE(labels[i], i * 2);
  }
  fs.writeFileSync(file, Buffer.concat([head, payload]));
}

export type ManifestKind = 'classification' | 'segmentation';

export interface Manifest {
  kind: ManifestKind;
  numClasses: number;
  seed?: number;
  /** classification: single paths; segmentation: [logits, labels] pairs */
  entries: Array<string | [string, string]>;
}

export function writeManifest(manifest: Manifest, file: string): void {
  const lines = [`kind: ${manifest.kind}`, `num_classes: ${manifest.numClasses}`];
  if (manifest.seed !== undefined) {
    lines.push(`seed: ${manifest.seed}`);
  }
  for (const entry of manifest.entries) {
    lines.push(typeof entry === 'string' ? entry : `${entry[0]} ${entry[1]}`);
  }
  fs.writeFileSync(file, lines.join('\n') + '\n', 'utf8');
}

export function relativeTo(dir: string, file: string): string {
  return path.relative(dir, file).split(path.sep).join('/');
}
