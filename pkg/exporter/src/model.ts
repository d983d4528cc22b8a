/**
 * Model storage for pure @tensorflow/tfjs under Node.
 *
 * Implements the standard tfjs layers-model artifact layout (model.json
 * with a weightsManifest plus binary weight shards) through a small
 * file-system IOHandler, so models saved here load with stock tfjs and
 * vice versa. Loading supports multi-shard manifests; saving writes a
 * single shard.
 */

import * as fs from 'node:fs';
import * as path from 'node:path';
import * as tf from '@tensorflow/tfjs';

interface WeightsGroup {
  paths: string[];
  weights: tf.io.WeightsManifestEntry[];
}

export function fileSystemIO(modelJsonPath: string): tf.io.IOHandler {
  const dir = path.dirname(modelJsonPath);
  return {
    async load(): Promise<tf.io.ModelArtifacts> {
      const parsed = JSON.parse(fs.readFileSync(modelJsonPath, 'utf8'));
      const manifest: WeightsGroup[] = parsed.weightsManifest ?? [];
      const specs: tf.io.WeightsManifestEntry[] = [];
      const buffers: Buffer[] = [];
      for (const group of manifest) {
        specs.push(...group.weights);
        for (const shard of group.paths) {
          buffers.push(fs.readFileSync(path.join(dir, shard)));
        }
      }
      const weightData = Buffer.concat(buffers);
      return {
        modelTopology: parsed.modelTopology,
        format: parsed.format,
        generatedBy: parsed.generatedBy,
        convertedBy: parsed.convertedBy,
        weightSpecs: specs,
        weightData: weightData.buffer.slice(
          weightData.byteOffset,
          weightData.byteOffset + weightData.byteLength,
        ),
      };
    },
    async save(artifacts: tf.io.ModelArtifacts): Promise<tf.io.SaveResult> {
      fs.mkdirSync(dir, { recursive: true });
      const shard = 'weights.bin';
      const weightData = artifacts.weightData as ArrayBuffer;
      fs.writeFileSync(path.join(dir, shard), Buffer.from(weightData));
      const json = {
        modelTopology: artifacts.modelTopology,
        format: artifacts.format ?? 'layers-model',
        generatedBy: artifacts.generatedBy ?? `TensorFlow.js ${tf.version.tfjs}`,
        convertedBy: artifacts.convertedBy ?? null,
        weightsManifest: [{ paths: [shard], weights: artifacts.weightSpecs }],
      };
      fs.writeFileSync(modelJsonPath, JSON.stringify(json), 'utf8');
      return {
        modelArtifactsInfo: {
          dateSaved: new Date(),
          modelTopologyType: 'JSON',
        },
      };
    },
  };
}

export async function loadStoredModel(modelJsonPath: string): Promise<tf.LayersModel> {
  if (!fs.existsSync(modelJsonPath)) {
    throw new Error(`model file not found: ${modelJsonPath}`);
  }
  return tf.loadLayersModel(fileSystemIO(modelJsonPath));
}

export async function saveModel(model: tf.LayersModel, modelJsonPath: string): Promise<void> {
  await model.save(fileSystemIO(modelJsonPath));
}

/**
 * A small dense classifier emitting raw logits (no softmax), with seeded
 * initializers so builds are reproducible.
 */
export function buildClassifier(inputDim: number, numClasses: number, seed = 1): tf.LayersModel {
  const model = tf.sequential();
  model.add(
    tf.layers.dense({
      inputShape: [inputDim],
      units: 32,
      activation: 'relu',
      kernelInitializer: tf.initializers.glorotUniform({ seed }),
      biasInitializer: 'zeros',
    }),
  );
  model.add(
    tf.layers.dense({
      units: numClasses,
      kernelInitializer: tf.initializers.glorotUniform({ seed: seed + 1 }),
      biasInitializer: 'zeros',
    }),
  );
  return model;
}

/**
 * A per-pixel segmentation head (1x1 convolutions) emitting raw logits of
 * shape [batch, H, W, numClasses].
 */
export function buildSegmenter(inputChannels: number, numClasses: number, seed = 1): tf.LayersModel {
  const model = tf.sequential();
  model.add(
    tf.layers.conv2d({
      inputShape: [null as unknown as number, null as unknown as number, inputChannels],
      filters: 16,
      kernelSize: 1,
      activation: 'relu',
      kernelInitializer: tf.initializers.glorotUniform({ seed }),
      biasInitializer: 'zeros',
    }),
  );
  model.add(
    tf.layers.conv2d({
      filters: numClasses,
      kernelSize: 1,
      kernelInitializer: tf.initializers.glorotUniform({ seed: seed + 1 }),
      biasInitializer: 'zeros',
    }),
  );
  return model;
}

export interface TrainOptions {
  epochs: number;
  learningRate?: number;
  batchSize?: number;
}

/** Train with softmax cross-entropy on integer labels; logits stay raw. */
export async function trainWithCrossEntropy(
  model: tf.LayersModel,
  inputs: tf.Tensor,
  labels: tf.Tensor,
  numClasses: number,
  options: TrainOptions,
): Promise<void> {
  model.compile({
    optimizer: tf.train.adam(options.learningRate ?? 0.05),
    loss: (target, output) => tf.losses.softmaxCrossEntropy(target, output),
  });
  const oneHot = tf.oneHot(labels.cast('int32'), numClasses);
  await model.fit(inputs, oneHot, {
    epochs: options.epochs,
    batchSize: options.batchSize ?? 32,
    shuffle: false,
    verbose: 0,
  });
  oneHot.dispose();
}
