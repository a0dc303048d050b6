/** Synthetic string-rewriting datasets.
 *
 * Tasks produce targets with high positional overlap with their
 * sources, the property that makes source-substring drafting pay off
 * at decode time.  "copy" keeps the body; "reverse" mirrors it; both
 * then rewrite floor(editRate * len) distinct positions to a different
 * token.  Same seed, same dataset, and the train/test sources are
 * disjoint.
 */

import { Rng } from "./rng.js";
import { UNK_ID, Vocab, buildVocab } from "./vocab.js";

export type TaskName = "copy" | "reverse";

export interface TaskSpec {
  task: TaskName;
  alphabetSize: number;
  minLen: number;
  maxLen: number;
  editRate: number;
  trainPairs: number;
  testPairs: number;
  seed: number;
}

/** Content-token ids only; BOS/EOS wrapping happens at batch time. */
export interface Pair {
  source: number[];
  target: number[];
}

export interface Dataset {
  spec: TaskSpec;
  vocab: Vocab;
  train: Pair[];
  test: Pair[];
}

export function validateSpec(spec: TaskSpec): void {
  if (spec.task !== "copy" && spec.task !== "reverse") {
    throw new Error(`unknown task ${spec.task}`);
  }
  if (spec.editRate < 0 || spec.editRate > 1) {
    throw new Error("editRate must lie in [0, 1]");
  }
  if (spec.minLen < 1 || spec.maxLen < spec.minLen) {
    throw new Error("need 1 <= minLen <= maxLen");
  }
  if (spec.trainPairs < 1 || spec.testPairs < 0) {
    throw new Error("need trainPairs >= 1 and testPairs >= 0");
  }
}

function makeTarget(source: number[], spec: TaskSpec, rng: Rng,
                    firstContent: number): number[] {
  const base = spec.task === "reverse" ? [...source].reverse() : [...source];
  const nEdits = Math.floor(spec.editRate * base.length);
  if (nEdits > 0) {
    for (const pos of rng.distinct(base.length, nEdits)) {
      let tok = firstContent + rng.int(0, spec.alphabetSize);
      while (tok === base[pos]) {
        tok = firstContent + rng.int(0, spec.alphabetSize);
      }
      base[pos] = tok;
    }
  }
  return base;
}

export function generateDataset(spec: TaskSpec): Dataset {
  validateSpec(spec);
  const vocab = buildVocab(spec.alphabetSize);
  const firstContent = UNK_ID + 1;
  const rng = new Rng(spec.seed);
  const seen = new Set<string>();
  const pairs: Pair[] = [];
  const total = spec.trainPairs + spec.testPairs;
  let attempts = 0;
  while (pairs.length < total) {
    if (++attempts > total * 20) {
      throw new Error(
        "cannot draw enough distinct sources; enlarge the length range or alphabet");
    }
    const len = rng.int(spec.minLen, spec.maxLen + 1);
    const source = Array.from(
      { length: len }, () => firstContent + rng.int(0, spec.alphabetSize));
    const key = source.join(",");
    if (seen.has(key)) continue;
    seen.add(key);
    pairs.push({ source, target: makeTarget(source, spec, rng, firstContent) });
  }
  return {
    spec,
    vocab,
    train: pairs.slice(0, spec.trainPairs),
    test: pairs.slice(spec.trainPairs),
  };
}

/** Group pair indices by source length so batches need no padding. */
export function lengthBuckets(pairs: readonly Pair[]): Map<number, number[]> {
  const buckets = new Map<number, number[]>();
  pairs.forEach((p, i) => {
    const b = buckets.get(p.source.length);
    if (b) b.push(i);
    else buckets.set(p.source.length, [i]);
  });
  return buckets;
}
