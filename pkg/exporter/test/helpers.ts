/** Shared test utilities: deterministic data synthesis and the primary-toolkit bridge. */

import { execFileSync } from 'node:child_process';
import * as fs from 'node:fs';
import * as path from 'node:path';
import { fileURLToPath } from 'node:url';

const here = path.dirname(fileURLToPath(import.meta.url));
export const repoRoot = path.resolve(here, '..', '..');

/** Run the primary toolkit's CLI; returns stdout. */
export function runPrimary(...args: string[]): string {
  return execFileSync('python3', ['-m', 'logitmod', ...args], {
    env: { ...process.env, PYTHONPATH: path.join(repoRoot, 'src') },
    encoding: 'utf8',
  });
}

/** Run a Python snippet with the primary toolkit importable; returns stdout. */
export function runPython(snippet: string): string {
  return execFileSync('python3', ['-c', snippet], {
    env: { ...process.env, PYTHONPATH: path.join(repoRoot, 'src') },
    encoding: 'utf8',
  });
}

/** mulberry32: tiny deterministic PRNG for test data. */
export function rng(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a |= 0;
    a = (a + 0x6d2b79f5) | 0;
    let t = Math.imul(a ^ (a >>> 15), 1 | a);
    t = (t + Math.imul(t ^ (t >>> 7), 61 | t)) ^ t;
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

export function gaussian(next: () => number): () => number {
  return () => {
    const u = Math.max(next(), 1e-12);
    const v = next();
    return Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * v);
  };
}

export interface BlobSpec {
  numClasses: number;
  featureDim: number;
  count: number;
  spread: number;
  seed: number;
  /** class centers derive from this seed, so train and eval sets can share them */
  centerSeed?: number;
}

export interface BlobData {
  inputs: number[][];
  labels: number[];
}

/** Class-centered Gaussian blobs in feature space. */
export function makeBlobs(spec: BlobSpec): BlobData {
  const centerNext = rng(spec.centerSeed ?? spec.seed);
  const centers: number[][] = [];
  for (let c = 0; c < spec.numClasses; c++) {
    centers.push(Array.from({ length: spec.featureDim }, () => (centerNext() < 0.5 ? -1 : 1)));
  }
  const next = rng(spec.seed);
  const normal = gaussian(next);
  const inputs: number[][] = [];
  const labels: number[] = [];
  for (let i = 0; i < spec.count; i++) {
    const label = i % spec.numClasses;
    inputs.push(centers[label].map((v) => v + spec.spread * normal()));
    labels.push(label);
  }
  return { inputs, labels };
}

export function writeClassificationInputs(dir: string, data: BlobData): void {
  fs.mkdirSync(dir, { recursive: true });
  data.inputs.forEach((values, i) => {
    const name = path.join(dir, `sample_${String(i).padStart(4, '0')}.json`);
    fs.writeFileSync(
      name,
      JSON.stringify({ values, shape: [values.length], label: data.labels[i] }),
    );
  });
}

export interface FieldSceneSpec {
  numClasses: number;
  height: number;
  width: number;
  waves: number;
  seed: number;
  /** multiplies every field; steepens class boundaries (default 1) */
  amplitude?: number;
}

export interface FieldScene {
  /** H*W*C, channel innermost: one smooth field per class */
  fields: Float64Array;
  /** H*W ground-truth labels: argmax over the fields */
  labels: number[];
}

/** Smooth random per-class fields; the ground truth is their argmax. */
export function makeFieldScene(spec: FieldSceneSpec): FieldScene {
  const { numClasses: c, height: h, width: w } = spec;
  const gain = spec.amplitude ?? 1;
  const next = rng(spec.seed);
  const params: Array<Array<{ fx: number; fy: number; phase: number; amp: number }>> = [];
  for (let k = 0; k < c; k++) {
    params.push(
      Array.from({ length: spec.waves }, () => ({
        fx: (next() * 3 + 0.5) / h,
        fy: (next() * 3 + 0.5) / w,
        phase: next() * 2 * Math.PI,
        amp: gain * (0.5 + next()),
      })),
    );
  }
  const fields = new Float64Array(h * w * c);
  const labels = new Array<number>(h * w);
  for (let y = 0; y < h; y++) {
    for (let x = 0; x < w; x++) {
      let best = 0;
      let bestVal = -Infinity;
      for (let k = 0; k < c; k++) {
        let v = 0;
        for (const wave of params[k]) {
          v += wave.amp * Math.sin(2 * Math.PI * (wave.fx * y + wave.fy * x) + wave.phase);
        }
        fields[(y * w + x) * c + k] = v;
        if (v > bestVal) {
          bestVal = v;
          best = k;
        }
      }
      labels[y * w + x] = best;
    }
  }
  return { fields, labels };
}

export function writeSegmentationInput(file: string, scene: FieldScene, spec: FieldSceneSpec): void {
  fs.writeFileSync(
    file,
    JSON.stringify({
      values: Array.from(scene.fields),
      shape: [spec.height, spec.width, spec.numClasses],
      labels: scene.labels,
    }),
  );
}
