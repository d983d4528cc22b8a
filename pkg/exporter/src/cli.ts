#!/usr/bin/env node
/**
 * logits-exporter --model path/model.json --inputs dir --out dir \
 *     --kind classification|segmentation [--batch-size N]
 */

import { exportClassification, exportSegmentation, ExportJob } from './export.js';

function parseArgs(argv: string[]): ExportJob {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (!key.startsWith('--') || value === undefined) {
      throw new Error(`malformed arguments near ${key}`);
    }
    flags.set(key.slice(2), value);
  }
  const known = new Set(['model', 'inputs', 'out', 'kind', 'batch-size']);
  for (const key of flags.keys()) {
    if (!known.has(key)) {
      throw new Error(`unknown flag --${key}`);
    }
  }
  for (const required of ['model', 'inputs', 'out', 'kind']) {
    if (!flags.has(required)) {
      throw new Error(`missing --${required}`);
    }
  }
  const kind = flags.get('kind')!;
  if (kind !== 'classification' && kind !== 'segmentation') {
    throw new Error(`--kind must be classification or segmentation, got ${kind}`);
  }
  const batchSize = Number(flags.get('batch-size') ?? '16');
  if (!Number.isInteger(batchSize) || batchSize < 1) {
    throw new Error(`--batch-size must be a positive integer`);
  }
  return {
    modelPath: flags.get('model')!,
    inputPath: flags.get('inputs')!,
    outputPath: flags.get('out')!,
    kind,
    batchSize,
  };
}

async function main(): Promise<number> {
  let job: ExportJob;
  try {
    job = parseArgs(process.argv.slice(2));
  } catch (err) {
    console.error(`usage error: ${(err as Error).message}`);
    return 2;
  }
  try {
    if (job.kind === 'classification') {
      const result = await exportClassification(job);
      console.log(
        `exported ${result.samples} samples (${result.numClasses} classes) to ${result.csvPath}; ` +
          `native top-1 accuracy ${result.nativeAccuracy.toFixed(6)}`,
      );
    } else {
      const result = await exportSegmentation(job);
      console.log(
        `exported ${result.pairs.length} instances (${result.numClasses} classes); ` +
          `manifest at ${result.manifestPath}`,
      );
    }
    return 0;
  } catch (err) {
    console.error(`export error: ${(err as Error).message}`);
    return 1;
  }
}

main().then((code) => {
  process.exitCode = code;
});
