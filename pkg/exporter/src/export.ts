/**
 * Export jobs: run a stored model over a directory of inputs and write raw
 * logits in the interchange formats.
 *
 * Inputs are JSON files (one sample each, processed in filename order):
 *
 *   classification: {"values": [...], "shape": [d0, ...], "label": int}
 *   segmentation:   {"values": [...], "shape": [H, W, F],
 *                    "labels": [H*W ints, 0xFFFF = ignore]}
 *
 * The exporter never applies softmax, resizing, or normalization: whatever
 * the model's final layer emits is written verbatim (float32 on disk for
 * tensors, 17-significant-digit text for CSV). Logits are written at the
 * resolution of the provided label maps; the bundled models emit
 * full-resolution outputs so no resampling happens here.
 */

import * as fs from 'node:fs';
import * as path from 'node:path';
import * as tf from '@tensorflow/tfjs';

import {
  IGNORE_LABEL,
  Manifest,
  writeClassificationCsv,
  writeLabelMap,
  writeLogitsTensor,
  writeManifest,
} from './formats.js';
import { loadStoredModel } from './model.js';

export interface ExportJob {
  modelPath: string;
  inputPath: string;
  outputPath: string;
  kind: 'classification' | 'segmentation';
  batchSize: number;
}

export interface ClassificationExport {
  csvPath: string;
  manifestPath: string;
  samples: number;
  numClasses: number;
  /** native top-1 accuracy of the raw logits argmax on these inputs */
  nativeAccuracy: number;
  softmaxSuspected: boolean;
}

export interface SegmentationExport {
  manifestPath: string;
  pairs: Array<[string, string]>;
  numClasses: number;
}

interface ClassificationSample {
  values: number[];
  shape: number[];
  label: number;
}

interface SegmentationSample {
  values: number[];
  shape: [number, number, number];
  labels: number[];
}

function listInputFiles(dir: string): string[] {
  if (!fs.existsSync(dir) || !fs.statSync(dir).isDirectory()) {
    throw new Error(`input path is not a directory: ${dir}`);
  }
  const files = fs
    .readdirSync(dir)
    .filter((f) => f.endsWith('.json'))
    .sort()
    .map((f) => path.join(dir, f));
  if (files.length === 0) {
    throw new Error(`no input files (*.json) in ${dir}`);
  }
  return files;
}

function readJson<T>(file: string): T {
  return JSON.parse(fs.readFileSync(file, 'utf8')) as T;
}

function looksLikeSoftmax(rows: Float64Array[]): boolean {
  return rows.every((row) => {
    let sum = 0;
    for (const v of row) {
      if (v < 0 || v > 1) return false;
      sum += v;
    }
    return Math.abs(sum - 1) <= 1e-6;
  });
}

export async function exportClassification(job: ExportJob): Promise<ClassificationExport> {
  if (job.kind !== 'classification') {
    throw new Error(`expected a classification job, got ${job.kind}`);
  }
  const files = listInputFiles(job.inputPath);
  const samples = files.map((f) => readJson<ClassificationSample>(f));
  const model = await loadStoredModel(job.modelPath);
  const rows: Float64Array[] = [];
  const labels: number[] = [];
  for (let start = 0; start < samples.length; start += job.batchSize) {
    const batch = samples.slice(start, start + job.batchSize);
    const stacked = tf.stack(batch.map((s) => tf.tensor(s.values, s.shape as number[])));
    const out = model.predict(stacked) as tf.Tensor;
    if (out.rank !== 2) {
      out.dispose();
      stacked.dispose();
      throw new Error(
        `model output rank ${out.rank} does not match classification (expected [batch, classes])`,
      );
    }
    const data = await out.data();
    const [, c] = out.shape;
    for (let i = 0; i < batch.length; i++) {
      rows.push(Float64Array.from(data.subarray(i * c, (i + 1) * c)));
      labels.push(batch[i].label);
    }
    out.dispose();
    stacked.dispose();
  }
  const numClasses = rows[0].length;
  if (numClasses < 2) {
    throw new Error(`model emits ${numClasses} classes; need at least 2`);
  }
  for (const label of labels) {
    if (!Number.isInteger(label) || label < 0 || label >= numClasses) {
      throw new Error(`input label ${label} out of range for ${numClasses} classes`);
    }
  }
  const softmaxSuspected = looksLikeSoftmax(rows);
  if (softmaxSuspected) {
    console.warn(
      'warning: every output row lies in [0,1] and sums to 1; raw logits were expected, ' +
        'but these look like softmax probabilities',
    );
  }
  fs.mkdirSync(job.outputPath, { recursive: true });
  const csvPath = path.join(job.outputPath, 'logits.csv');
  writeClassificationCsv({ numClasses, logits: rows, labels }, csvPath);
  const manifest: Manifest = { kind: 'classification', numClasses, entries: ['logits.csv'] };
  const manifestPath = path.join(job.outputPath, 'manifest.txt');
  writeManifest(manifest, manifestPath);
  let correct = 0;
  rows.forEach((row, i) => {
    let best = 0;
    for (let k = 1; k < row.length; k++) {
      if (row[k] > row[best]) best = k;
    }
    if (best === labels[i]) correct += 1;
  });
  return {
    csvPath,
    manifestPath,
    samples: rows.length,
    numClasses,
    nativeAccuracy: correct / rows.length,
    softmaxSuspected,
  };
}

export async function exportSegmentation(job: ExportJob): Promise<SegmentationExport> {
  if (job.kind !== 'segmentation') {
    throw new Error(`expected a segmentation job, got ${job.kind}`);
  }
  const files = listInputFiles(job.inputPath);
  const model = await loadStoredModel(job.modelPath);
  fs.mkdirSync(job.outputPath, { recursive: true });
  const pairs: Array<[string, string]> = [];
  let numClasses = 0;
  for (const file of files) {
    const sample = readJson<SegmentationSample>(file);
    const [h, w] = sample.shape;
    const input = tf.tensor(sample.values, sample.shape).expandDims(0);
    const out = model.predict(input) as tf.Tensor;
    if (out.rank !== 4) {
      out.dispose();
      input.dispose();
      throw new Error(
        `model output rank ${out.rank} does not match segmentation (expected [batch, H, W, classes])`,
      );
    }
    const [, oh, ow, c] = out.shape;
    if (oh !== h || ow !== w) {
      out.dispose();
      input.dispose();
      throw new Error(`model output ${oh}x${ow} does not match the label map ${h}x${w}`);
    }
    if (numClasses === 0) {
      numClasses = c;
      if (numClasses < 2) {
        throw new Error(`model emits ${numClasses} channels; need at least 2`);
      }
    }
    if (sample.labels.length !== h * w) {
      throw new Error(`${file}: labels length ${sample.labels.length} != ${h * w}`);
    }
    for (const v of sample.labels) {
      if (v !== IGNORE_LABEL && (!Number.isInteger(v) || v < 0 || v >= numClasses)) {
        throw new Error(`${file}: label value ${v} out of range for ${numClasses} classes`);
      }
    }
    const values = new Float32Array(await out.data());
    const stem = path.basename(file, '.json');
    const logitsName = `${stem}.aimt`;
    const labelsName = `${stem}.aiml`;
    writeLogitsTensor(
      { height: h, width: w, channels: numClasses, values },
      path.join(job.outputPath, logitsName),
    );
    writeLabelMap(Uint16Array.from(sample.labels), h, w, path.join(job.outputPath, labelsName));
    pairs.push([logitsName, labelsName]);
    out.dispose();
    input.dispose();
  }
  const manifestPath = path.join(job.outputPath, 'manifest.txt');
  writeManifest({ kind: 'segmentation', numClasses, entries: pairs }, manifestPath);
  return { manifestPath, pairs, numClasses };
}
