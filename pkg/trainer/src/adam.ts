/** Adam with bias correction and optional global-norm gradient clipping. */

import { Params, getT, zerosLike } from "./model.js";

export interface AdamConfig {
  beta1: number;
  beta2: number;
  eps: number;
}

export const ADAM_DEFAULTS: AdamConfig = { beta1: 0.9, beta2: 0.999, eps: 1e-8 };

export class Adam {
  private m: Params;
  private v: Params;
  private t = 0;
  private cfg: AdamConfig;

  constructor(params: Params, cfg: AdamConfig = ADAM_DEFAULTS) {
    this.m = zerosLike(params);
    this.v = zerosLike(params);
    this.cfg = cfg;
  }

  step(params: Params, grads: Params, lr: number): void {
    this.t += 1;
    const { beta1, beta2, eps } = this.cfg;
    const c1 = 1 - Math.pow(beta1, this.t);
    const c2 = 1 - Math.pow(beta2, this.t);
    for (const [name, p] of params) {
      const g = getT(grads, name).data;
      const m = getT(this.m, name).data;
      const v = getT(this.v, name).data;
      for (let i = 0; i < p.data.length; i++) {
        m[i] = beta1 * m[i] + (1 - beta1) * g[i];
        v[i] = beta2 * v[i] + (1 - beta2) * g[i] * g[i];
        p.data[i] -= lr * (m[i] / c1) / (Math.sqrt(v[i] / c2) + eps);
      }
    }
  }
}

/** Scale all gradients in place so their global L2 norm is at most
 * maxNorm; returns the pre-clip norm. */
export function clipGlobalNorm(grads: Params, maxNorm: number): number {
  let sq = 0;
  for (const [, g] of grads) {
    for (let i = 0; i < g.data.length; i++) sq += g.data[i] * g.data[i];
  }
  const norm = Math.sqrt(sq);
  if (norm > maxNorm && norm > 0) {
    const scale = maxNorm / norm;
    for (const [, g] of grads) {
      for (let i = 0; i < g.data.length; i++) g.data[i] *= scale;
    }
  }
  return norm;
}
