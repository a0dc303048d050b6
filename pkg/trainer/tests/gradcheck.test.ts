/** Analytic gradients vs central finite differences on tiny models.
 *
 * The full loss (embed, encoder, decoder, projection, cross-entropy)
 * is differentiated both ways for a sample of entries in every tensor.
 * Everything runs in f64 so the finite-difference error is dominated by
 * the O(h^2) truncation term, far below the tolerance.
 */

import { describe, expect, it } from "vitest";

import { backwardSample, lossAndDLogits } from "../src/backward.js";
import { decode, encode, peTable } from "../src/forward.js";
import { ModelConfig, Params, initParams, zerosLike } from "../src/model.js";
import { Rng } from "../src/rng.js";

const CONFIGS: { name: string; cfg: ModelConfig }[] = [
  {
    name: "one layer",
    cfg: { vocabSize: 9, numLayers: 1, numHeads: 2, dModel: 8, dFF: 16,
           maxLen: 12 },
  },
  {
    name: "two layers",
    cfg: { vocabSize: 7, numLayers: 2, numHeads: 2, dModel: 6, dFF: 10,
           maxLen: 12 },
  },
];

const SOURCE = [1, 4, 5, 6, 5, 2];
const DEC_IN = [1, 5, 4, 6];
const LABELS = [5, 4, 6, 2];

function lossOf(params: Params, cfg: ModelConfig): number {
  const pe = peTable(cfg.maxLen, cfg.dModel);
  const enc = encode(params, cfg, pe, SOURCE, "f64");
  const dec = decode(params, cfg, pe, DEC_IN, enc.states, "f64");
  return lossAndDLogits(dec.logits, LABELS, 1).loss / LABELS.length;
}

function analyticGrads(params: Params, cfg: ModelConfig): Params {
  const pe = peTable(cfg.maxLen, cfg.dModel);
  const enc = encode(params, cfg, pe, SOURCE, "f64");
  const dec = decode(params, cfg, pe, DEC_IN, enc.states, "f64");
  const { dLogits } = lossAndDLogits(dec.logits, LABELS, 1 / LABELS.length);
  const grads = zerosLike(params);
  backwardSample(params, grads, cfg, enc, dec, dLogits);
  return grads;
}

describe.each(CONFIGS)("gradient check, $name", ({ cfg }) => {
  it("matches finite differences on every tensor", () => {
    const params = initParams(cfg, new Rng(17));
    const grads = analyticGrads(params, cfg);
    const picker = new Rng(99);
    const h = 1e-5;
    let checked = 0;

    for (const [name, tensor] of params) {
      const grad = grads.get(name)!;
      const nProbes = Math.min(4, tensor.data.length);
      const idxs = picker.distinct(tensor.data.length, nProbes);
      for (const i of idxs) {
        const orig = tensor.data[i];
        tensor.data[i] = orig + h;
        const up = lossOf(params, cfg);
        tensor.data[i] = orig - h;
        const down = lossOf(params, cfg);
        tensor.data[i] = orig;
        const fd = (up - down) / (2 * h);
        const a = grad.data[i];
        const tol = 1e-7 + 1e-4 * Math.max(Math.abs(a), Math.abs(fd));
        if (Math.abs(a - fd) > tol) {
          throw new Error(
            `${name}[${i}]: analytic ${a} vs finite-diff ${fd}`);
        }
        checked++;
      }
    }
    expect(checked).toBeGreaterThan(50);
  });
});

describe("lossAndDLogits", () => {
  it("returns the summed cross-entropy and softmax-minus-onehot", () => {
    const logits = {
      rows: 2, cols: 3,
      data: new Float64Array([1, 2, 3, 0.5, 0.5, 0.5]),
    };
    const { loss, dLogits } = lossAndDLogits(logits, [2, 0], 0.5);
    // row 0: -log softmax(3 | [1,2,3]); row 1: -log(1/3)
    const row0 = -(3 - Math.log(Math.exp(1) + Math.exp(2) + Math.exp(3)));
    expect(loss).toBeCloseTo(row0 + Math.log(3), 12);
    const p0 = [1, 2, 3].map((v) => Math.exp(v));
    const z0 = p0[0] + p0[1] + p0[2];
    expect(dLogits.data[2]).toBeCloseTo((p0[2] / z0 - 1) * 0.5, 12);
    expect(dLogits.data[3]).toBeCloseTo((1 / 3 - 1) * 0.5, 12);
    expect(dLogits.data[4]).toBeCloseTo((1 / 3) * 0.5, 12);
  });
});
