/** Training loop: teacher forcing, Adam, equal-length batches.
 *
 * Batches are drawn from one source-length bucket at a time so no
 * padding or loss masking is needed; every decoder position carries a
 * real label.  Training math runs in float64; evaluation and export
 * use the engine-parity float32 scheme.
 */

import { Adam, clipGlobalNorm } from "./adam.js";
import { backwardSample, lossAndDLogits } from "./backward.js";
import { Mat, mat } from "./mat.js";
import { Dataset, Pair, lengthBuckets } from "./dataset.js";
import { decode, encode, greedyDecode, peTable } from "./forward.js";
import { ModelConfig, Params, initParams, zerosLike } from "./model.js";
import { Rng } from "./rng.js";
import { BOS_ID, EOS_ID } from "./vocab.js";

export interface TrainConfig {
  steps: number;
  batchSize: number;
  lr: number;
  warmupSteps: number;
  clipNorm: number;
  seed: number;
  evalEvery: number;
  evalSamples: number;
  /** stop early once a periodic eval reaches this held-out exact match */
  targetExact: number;
}

export const TRAIN_DEFAULTS: TrainConfig = {
  steps: 1500,
  batchSize: 12,
  lr: 1e-3,
  warmupSteps: 80,
  clipNorm: 1.0,
  seed: 1,
  evalEvery: 100,
  evalSamples: 40,
  targetExact: 0.98,
};

export function modelConfigFor(alphabetSize: number,
                               maxBodyLen: number): ModelConfig {
  return {
    vocabSize: 4 + alphabetSize,
    numLayers: 2,
    numHeads: 4,
    dModel: 64,
    dFF: 256,
    maxLen: Math.max(32, maxBodyLen + 8),
  };
}

export class DivergenceError extends Error {
  constructor(step: number, trace: readonly number[]) {
    const tail = trace.slice(-8).map((x) => x.toFixed(4)).join(", ");
    super(`training diverged at step ${step}; recent losses: [${tail}]`);
  }
}

/** Fraction of pairs whose greedy decode equals BOS target EOS exactly. */
export function exactMatch(params: Params, cfg: ModelConfig, pe: Mat,
                           pairs: readonly Pair[]): number {
  if (pairs.length === 0) return 0;
  let hits = 0;
  for (const pair of pairs) {
    const source = [BOS_ID, ...pair.source, EOS_ID];
    const want = [BOS_ID, ...pair.target, EOS_ID];
    const got = greedyDecode(params, cfg, pe, source, pair.target.length + 5);
    if (got.length === want.length && got.every((t, i) => t === want[i])) {
      hits += 1;
    }
  }
  return hits / pairs.length;
}

export interface TrainResult {
  params: Params;
  config: ModelConfig;
  lossTrace: number[];
  evals: { step: number; exact: number }[];
  heldOutExact: number;
}

export function train(dataset: Dataset, cfg: ModelConfig,
                      tc: TrainConfig,
                      log?: (msg: string) => void): TrainResult {
  const rng = new Rng(tc.seed);
  const params = initParams(cfg, rng);
  const pe = peTable(cfg.maxLen, cfg.dModel);
  const adam = new Adam(params);
  const buckets = [...lengthBuckets(dataset.train).values()];
  const lossTrace: number[] = [];
  const evals: { step: number; exact: number }[] = [];

  for (let step = 1; step <= tc.steps; step++) {
    // pick a bucket with probability proportional to its size
    let pick = rng.int(0, dataset.train.length);
    let bucket: number[] = buckets[buckets.length - 1];
    for (const b of buckets) {
      if (pick < b.length) {
        bucket = b;
        break;
      }
      pick -= b.length;
    }
    const grads = zerosLike(params);
    let positions = 0;
    const batch: Pair[] = [];
    for (let i = 0; i < tc.batchSize; i++) {
      const pair = dataset.train[bucket[rng.int(0, bucket.length)]];
      batch.push(pair);
      positions += pair.target.length + 1;
    }
    let lossSum = 0;
    for (const pair of batch) {
      const source = [BOS_ID, ...pair.source, EOS_ID];
      const decIn = [BOS_ID, ...pair.target];
      const labels = [...pair.target, EOS_ID];
      const enc = encode(params, cfg, pe, source, "f64");
      const dec = decode(params, cfg, pe, decIn, enc.states, "f64");
      const { loss, dLogits } = lossAndDLogits(dec.logits, labels,
                                              1 / positions);
      lossSum += loss;
      backwardSample(params, grads, cfg, enc, dec, dLogits);
    }
    const meanLoss = lossSum / positions;
    lossTrace.push(meanLoss);
    if (!Number.isFinite(meanLoss) || meanLoss > 50) {
      throw new DivergenceError(step, lossTrace);
    }
    clipGlobalNorm(grads, tc.clipNorm);
    // linear warmup to the peak rate, then linear decay to 10% of it
    // by the final step; the decay tail is what settles exact match
    const warm = Math.min(1, step / tc.warmupSteps);
    const left = Math.max(0, tc.steps - step) / Math.max(1, tc.steps - tc.warmupSteps);
    const lr = tc.lr * warm * (0.1 + 0.9 * Math.min(1, left));
    adam.step(params, grads, lr);

    if (step % tc.evalEvery === 0 || step === tc.steps) {
      const sample = dataset.test.slice(0, tc.evalSamples);
      const exact = exactMatch(params, cfg, pe, sample);
      evals.push({ step, exact });
      log?.(`step ${step}  loss ${meanLoss.toFixed(4)}  ` +
            `exact(${sample.length}) ${exact.toFixed(3)}`);
      if (exact >= tc.targetExact) break;
    }
  }

  const heldOutExact = exactMatch(params, cfg, pe, dataset.test);
  log?.(`held-out exact match: ${heldOutExact.toFixed(4)} ` +
        `(${dataset.test.length} pairs)`);
  return { params, config: cfg, lossTrace, evals, heldOutExact };
}
