/** Manual backpropagation through the forward pass in forward.ts.
 *
 * Gradients accumulate into a Params-shaped map so one call per sample
 * adds its contribution; the training loop zeroes the map per batch.
 * All math is float64; the f32 rounding of inference mode is not
 * differentiated through (training runs in "f64" mode).
 */

import { Mat, addColSum, addMatmulTA, mat, matmulTB } from "./mat.js";
import {
  AttnCache,
  DecodeResult,
  EncodeResult,
  FFCache,
  LNCache,
  asMat,
} from "./forward.js";
import { ModelConfig, Params, dHead, getT } from "./model.js";

function affineBwd(params: Params, grads: Params, prefix: string,
                   x: Mat, dy: Mat): Mat {
  addMatmulTA(getT(grads, prefix + "weight").data, x, dy);
  addColSum(getT(grads, prefix + "bias").data, dy);
  return matmulTB(dy, asMat(getT(params, prefix + "weight")));
}

function layerNormBwd(params: Params, grads: Params, prefix: string,
                      cache: LNCache, dy: Mat): Mat {
  const gamma = getT(params, prefix + "gamma").data;
  const dGamma = getT(grads, prefix + "gamma").data;
  const dBeta = getT(grads, prefix + "beta").data;
  const d = dy.cols;
  const dx = mat(dy.rows, d);
  const dyd = dy.data;
  const xh = cache.xhat.data;
  const dxd = dx.data;
  for (let i = 0; i < dy.rows; i++) {
    const ri = i * d;
    let m1 = 0;
    let m2 = 0;
    for (let j = 0; j < d; j++) {
      const g = dyd[ri + j] * gamma[j];
      m1 += g;
      m2 += g * xh[ri + j];
      dGamma[j] += dyd[ri + j] * xh[ri + j];
      dBeta[j] += dyd[ri + j];
    }
    m1 /= d;
    m2 /= d;
    const inv = cache.invStd[i];
    for (let j = 0; j < d; j++) {
      const g = dyd[ri + j] * gamma[j];
      dxd[ri + j] = (g - m1 - xh[ri + j] * m2) * inv;
    }
  }
  return dx;
}

function ffBwd(params: Params, grads: Params, prefix: string,
               cache: FFCache, dy: Mat): Mat {
  const dHidden = affineBwd(params, grads, prefix + "w2.", cache.hidden, dy);
  for (let i = 0; i < dHidden.data.length; i++) {
    if (cache.pre1.data[i] <= 0) dHidden.data[i] = 0;
  }
  return affineBwd(params, grads, prefix + "w1.", cache.x, dHidden);
}

function attentionBwd(params: Params, grads: Params, cfg: ModelConfig,
                      prefix: string, cache: AttnCache,
                      dy: Mat): { dxq: Mat; dxkv: Mat } {
  const h = cfg.numHeads;
  const dh = dHead(cfg);
  const scale = 1 / Math.sqrt(dh);
  const tq = cache.q.rows;
  const tk = cache.k.rows;
  const dMerged = affineBwd(params, grads, prefix + "o.", cache.merged, dy);
  const dQ = mat(tq, cfg.dModel);
  const dK = mat(tk, cfg.dModel);
  const dV = mat(tk, cfg.dModel);
  const dWRow = new Float64Array(tk);
  const md = dMerged.data;
  const wts = cache.weights;
  const qd = cache.q.data;
  const kd = cache.k.data;
  const vd = cache.v.data;
  const dQd = dQ.data;
  const dKd = dK.data;
  const dVd = dV.data;
  for (let head = 0; head < h; head++) {
    const off = head * dh;
    for (let i = 0; i < tq; i++) {
      const limit = cache.causal ? i + 1 : tk;
      const wRow = (head * tq + i) * tk;
      const mi = i * cfg.dModel + off;
      // dV and the raw dW for this query row
      for (let j = 0; j < limit; j++) {
        const vj = j * cfg.dModel + off;
        const w = wts[wRow + j];
        let acc = 0;
        for (let c = 0; c < dh; c++) {
          acc += md[mi + c] * vd[vj + c];
          dVd[vj + c] += w * md[mi + c];
        }
        dWRow[j] = acc;
      }
      // softmax backward: ds = w * (dw - sum(w * dw))
      let dot = 0;
      for (let j = 0; j < limit; j++) {
        dot += wts[wRow + j] * dWRow[j];
      }
      const qi = i * cfg.dModel + off;
      for (let j = 0; j < limit; j++) {
        const ds = wts[wRow + j] * (dWRow[j] - dot) * scale;
        if (ds === 0) continue;
        const kj = j * cfg.dModel + off;
        for (let c = 0; c < dh; c++) {
          dQd[qi + c] += ds * kd[kj + c];
          dKd[kj + c] += ds * qd[qi + c];
        }
      }
    }
  }
  const dxq = affineBwd(params, grads, prefix + "q.", cache.xq, dQ);
  const dxkv = affineBwd(params, grads, prefix + "k.", cache.xkv, dK);
  const dxv = affineBwd(params, grads, prefix + "v.", cache.xkv, dV);
  for (let i = 0; i < dxkv.data.length; i++) dxkv.data[i] += dxv.data[i];
  return { dxq, dxkv };
}

function embedBwd(grads: Params, cfg: ModelConfig, ids: readonly number[],
                  dx: Mat): void {
  const scale = Math.sqrt(cfg.dModel);
  const dEmb = getT(grads, "embedding").data;
  for (let t = 0; t < ids.length; t++) {
    const row = ids[t] * cfg.dModel;
    const xi = t * cfg.dModel;
    for (let j = 0; j < cfg.dModel; j++) {
      dEmb[row + j] += dx.data[xi + j] * scale;
    }
  }
}

/** Mean cross-entropy over all positions; dLogits is scaled by
 * 1/positionCount so batch gradients average over tokens. */
export function lossAndDLogits(logits: Mat, targets: readonly number[],
                               invCount: number): { loss: number; dLogits: Mat } {
  if (targets.length !== logits.rows) {
    throw new Error("one target per logit row required");
  }
  const v = logits.cols;
  const dLogits = mat(logits.rows, v);
  let loss = 0;
  for (let t = 0; t < logits.rows; t++) {
    const ri = t * v;
    let max = -Infinity;
    for (let j = 0; j < v; j++) {
      if (logits.data[ri + j] > max) max = logits.data[ri + j];
    }
    let denom = 0;
    for (let j = 0; j < v; j++) {
      denom += Math.exp(logits.data[ri + j] - max);
    }
    const logDenom = Math.log(denom);
    loss -= logits.data[ri + targets[t]] - max - logDenom;
    for (let j = 0; j < v; j++) {
      const p = Math.exp(logits.data[ri + j] - max) / denom;
      dLogits.data[ri + j] = (p - (j === targets[t] ? 1 : 0)) * invCount;
    }
  }
  return { loss, dLogits };
}

/** Backward through decoder, then encoder, for one sample.  Gradients
 * accumulate into `grads`. */
export function backwardSample(params: Params, grads: Params,
                               cfg: ModelConfig, enc: EncodeResult,
                               dec: DecodeResult, dLogits: Mat): void {
  let dx = affineBwd(params, grads, "output.", dec.hFinal, dLogits);
  const dMem = mat(enc.states.rows, enc.states.cols);
  for (let i = cfg.numLayers - 1; i >= 0; i--) {
    const p = `decoder.${i}.`;
    const layer = dec.layers[i];
    const da3 = layerNormBwd(params, grads, p + "ln3.", layer.ln3, dx);
    const dx2 = ffBwd(params, grads, p + "ff.", layer.ff, da3);
    for (let j = 0; j < dx2.data.length; j++) dx2.data[j] += da3.data[j];
    const da2 = layerNormBwd(params, grads, p + "ln2.", layer.ln2, dx2);
    const cross = attentionBwd(params, grads, cfg, p + "cross_attn.",
                               layer.cross, da2);
    for (let j = 0; j < dMem.data.length; j++) {
      dMem.data[j] += cross.dxkv.data[j];
    }
    const dx1 = cross.dxq;
    for (let j = 0; j < dx1.data.length; j++) dx1.data[j] += da2.data[j];
    const da1 = layerNormBwd(params, grads, p + "ln1.", layer.ln1, dx1);
    const self = attentionBwd(params, grads, cfg, p + "self_attn.",
                              layer.self, da1);
    dx = self.dxq;
    for (let j = 0; j < dx.data.length; j++) {
      dx.data[j] += self.dxkv.data[j] + da1.data[j];
    }
  }
  embedBwd(grads, cfg, dec.ids, dx);

  dx = dMem;
  for (let i = cfg.numLayers - 1; i >= 0; i--) {
    const p = `encoder.${i}.`;
    const layer = enc.layers[i];
    const da2 = layerNormBwd(params, grads, p + "ln2.", layer.ln2, dx);
    const dx1 = ffBwd(params, grads, p + "ff.", layer.ff, da2);
    for (let j = 0; j < dx1.data.length; j++) dx1.data[j] += da2.data[j];
    const da1 = layerNormBwd(params, grads, p + "ln1.", layer.ln1, dx1);
    const att = attentionBwd(params, grads, cfg, p + "attn.",
                             layer.attn, da1);
    dx = att.dxq;
    for (let j = 0; j < dx.data.length; j++) {
      dx.data[j] += att.dxkv.data[j] + da1.data[j];
    }
  }
  embedBwd(grads, cfg, enc.ids, dx);
}
