/** Parameter registry for the encoder-decoder transformer.
 *
 * Tensor names, shapes, and ordering are the engine's checkpoint
 * contract: weights are (dIn, dOut) so a forward affine is x @ W + b,
 * and the Map insertion order is the serialization order.
 */

import { Rng } from "./rng.js";

export interface ModelConfig {
  vocabSize: number;
  numLayers: number;
  numHeads: number;
  dModel: number;
  dFF: number;
  maxLen: number;
}

export type Shape = readonly number[];

export interface Tensor {
  shape: Shape;
  data: Float64Array;
}

export type Params = Map<string, Tensor>;

export function validateConfig(c: ModelConfig): void {
  for (const [k, v] of Object.entries(c)) {
    if (!Number.isInteger(v) || v <= 0) {
      throw new Error(`${k} must be a positive integer`);
    }
  }
  if (c.dModel % c.numHeads !== 0) {
    throw new Error("dModel must be divisible by numHeads");
  }
}

export function dHead(c: ModelConfig): number {
  return c.dModel / c.numHeads;
}

function affine(shapes: Map<string, Shape>, prefix: string,
                dIn: number, dOut: number): void {
  shapes.set(prefix + "weight", [dIn, dOut]);
  shapes.set(prefix + "bias", [dOut]);
}

function attn(shapes: Map<string, Shape>, prefix: string, d: number): void {
  for (const proj of ["q", "k", "v", "o"]) {
    affine(shapes, `${prefix}${proj}.`, d, d);
  }
}

function ln(shapes: Map<string, Shape>, prefix: string, d: number): void {
  shapes.set(prefix + "gamma", [d]);
  shapes.set(prefix + "beta", [d]);
}

export function paramShapes(c: ModelConfig): Map<string, Shape> {
  const { dModel: d, dFF: f, vocabSize: v } = c;
  const shapes = new Map<string, Shape>();
  shapes.set("embedding", [v, d]);
  for (let i = 0; i < c.numLayers; i++) {
    const p = `encoder.${i}.`;
    attn(shapes, p + "attn.", d);
    ln(shapes, p + "ln1.", d);
    affine(shapes, p + "ff.w1.", d, f);
    affine(shapes, p + "ff.w2.", f, d);
    ln(shapes, p + "ln2.", d);
  }
  for (let i = 0; i < c.numLayers; i++) {
    const p = `decoder.${i}.`;
    attn(shapes, p + "self_attn.", d);
    ln(shapes, p + "ln1.", d);
    attn(shapes, p + "cross_attn.", d);
    ln(shapes, p + "ln2.", d);
    affine(shapes, p + "ff.w1.", d, f);
    affine(shapes, p + "ff.w2.", f, d);
    ln(shapes, p + "ln3.", d);
  }
  affine(shapes, "output.", d, v);
  return shapes;
}

export function numel(shape: Shape): number {
  return shape.reduce((a, b) => a * b, 1);
}

/** Scaled-normal weights, unit gammas, zero biases and betas. */
export function initParams(c: ModelConfig, rng: Rng): Params {
  validateConfig(c);
  const params: Params = new Map();
  for (const [name, shape] of paramShapes(c)) {
    const data = new Float64Array(numel(shape));
    if (name.endsWith(".gamma")) {
      data.fill(1);
    } else if (!name.endsWith(".beta") && !name.endsWith(".bias")) {
      const std = 1 / Math.sqrt(shape[0]);
      for (let i = 0; i < data.length; i++) data[i] = std * rng.gauss();
    }
    params.set(name, { shape, data });
  }
  return params;
}

/** Same-shape zero tensors, for gradients and optimizer state. */
export function zerosLike(params: Params): Params {
  const out: Params = new Map();
  for (const [name, t] of params) {
    out.set(name, { shape: t.shape, data: new Float64Array(t.data.length) });
  }
  return out;
}

export function getT(params: Params, name: string): Tensor {
  const t = params.get(name);
  if (t === undefined) throw new Error(`missing tensor ${name}`);
  return t;
}
