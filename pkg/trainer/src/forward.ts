/** Transformer forward passes, with caches kept for backpropagation.
 *
 * Post-layer-norm blocks: a sublayer's output is added to its input and
 * the sum is normalized.  Sinusoidal positional encodings are added to
 * embeddings scaled by sqrt(dModel).  Heads are contiguous column
 * blocks of the projected vectors.
 *
 * Two numeric modes.  "f64" is plain double arithmetic for training.
 * "f32" rounds every operation's result to float32, reproducing the
 * inference engine's scheme (32-bit storage between operations, 64-bit
 * accumulation inside them) so that exported checkpoints decode
 * identically on both sides.
 */

import { Mat, froundInPlace, mat, matmul } from "./mat.js";
import { ModelConfig, Params, Tensor, dHead, getT } from "./model.js";
import { BOS_ID, EOS_ID, PAD_ID } from "./vocab.js";

export const LN_EPS = 1e-5;

export type Mode = "f64" | "f32";

export function asMat(t: Tensor): Mat {
  if (t.shape.length !== 2) throw new Error("expected a 2-d tensor");
  return { data: t.data, rows: t.shape[0], cols: t.shape[1] };
}

function maybeRound(m: Mat, mode: Mode): Mat {
  if (mode === "f32") froundInPlace(m);
  return m;
}

/** PE(p, 2i) = sin(p / 10000^(2i/d)), PE(p, 2i+1) = cos(same angle).
 * Entries are float32 values, matching the engine's stored table. */
export function peTable(maxLen: number, dModel: number): Mat {
  const pe = mat(maxLen, dModel);
  for (let p = 0; p < maxLen; p++) {
    const row = p * dModel;
    for (let i = 0; i < dModel; i += 2) {
      const angle = p / Math.pow(10000, i / dModel);
      pe.data[row + i] = Math.fround(Math.sin(angle));
      if (i + 1 < dModel) pe.data[row + i + 1] = Math.fround(Math.cos(angle));
    }
  }
  return pe;
}

export function affineFwd(x: Mat, w: Tensor, b: Tensor, mode: Mode): Mat {
  const y = matmul(x, asMat(w));
  for (let i = 0; i < y.rows; i++) {
    const yi = i * y.cols;
    for (let j = 0; j < y.cols; j++) y.data[yi + j] += b.data[j];
  }
  return maybeRound(y, mode);
}

export interface LNCache {
  xhat: Mat;
  invStd: Float64Array;
}

export function layerNormFwd(x: Mat, gamma: Tensor, beta: Tensor,
                             mode: Mode): { y: Mat; cache: LNCache } {
  const d = x.cols;
  const y = mat(x.rows, d);
  const xhat = mat(x.rows, d);
  const invStd = new Float64Array(x.rows);
  for (let i = 0; i < x.rows; i++) {
    const ri = i * d;
    let mu = 0;
    for (let j = 0; j < d; j++) mu += x.data[ri + j];
    mu /= d;
    let variance = 0;
    for (let j = 0; j < d; j++) {
      const c = x.data[ri + j] - mu;
      variance += c * c;
    }
    variance /= d;
    const inv = 1 / Math.sqrt(variance + LN_EPS);
    invStd[i] = inv;
    for (let j = 0; j < d; j++) {
      const h = (x.data[ri + j] - mu) * inv;
      xhat.data[ri + j] = h;
      y.data[ri + j] = h * gamma.data[j] + beta.data[j];
    }
  }
  return { y: maybeRound(y, mode), cache: { xhat, invStd } };
}

export interface AttnCache {
  xq: Mat;
  xkv: Mat;
  q: Mat;
  k: Mat;
  v: Mat;
  /** softmax weights, [h][Tq][Tk] flattened */
  weights: Float64Array;
  merged: Mat;
  causal: boolean;
}

export function attentionFwd(params: Params, prefix: string, cfg: ModelConfig,
                             xq: Mat, xkv: Mat, causal: boolean,
                             mode: Mode): { y: Mat; cache: AttnCache } {
  const h = cfg.numHeads;
  const dh = dHead(cfg);
  const scale = 1 / Math.sqrt(dh);
  const q = affineFwd(xq, getT(params, prefix + "q.weight"),
                      getT(params, prefix + "q.bias"), mode);
  const k = affineFwd(xkv, getT(params, prefix + "k.weight"),
                      getT(params, prefix + "k.bias"), mode);
  const v = affineFwd(xkv, getT(params, prefix + "v.weight"),
                      getT(params, prefix + "v.bias"), mode);
  const tq = xq.rows;
  const tk = xkv.rows;
  const weights = new Float64Array(h * tq * tk);
  const merged = mat(tq, cfg.dModel);
  const scores = new Float64Array(tk);
  const qd = q.data;
  const kd = k.data;
  const vd = v.data;
  const mgd = merged.data;
  for (let head = 0; head < h; head++) {
    const off = head * dh;
    for (let i = 0; i < tq; i++) {
      const limit = causal ? i + 1 : tk;
      const qi = i * q.cols + off;
      let rowMax = -Infinity;
      for (let j = 0; j < limit; j++) {
        const kj = j * k.cols + off;
        let acc = 0;
        for (let c = 0; c < dh; c++) acc += qd[qi + c] * kd[kj + c];
        const s = acc * scale;
        scores[j] = s;
        if (s > rowMax) rowMax = s;
      }
      let denom = 0;
      for (let j = 0; j < limit; j++) {
        const e = Math.exp(scores[j] - rowMax);
        scores[j] = e;
        denom += e;
      }
      const wRow = (head * tq + i) * tk;
      if (mode === "f32") {
        for (let j = 0; j < limit; j++) {
          weights[wRow + j] = Math.fround(scores[j] / denom);
        }
      } else {
        for (let j = 0; j < limit; j++) weights[wRow + j] = scores[j] / denom;
      }
      const mi = i * cfg.dModel + off;
      for (let j = 0; j < limit; j++) {
        const wv = weights[wRow + j];
        if (wv === 0) continue;
        const vj = j * v.cols + off;
        for (let c = 0; c < dh; c++) mgd[mi + c] += wv * vd[vj + c];
      }
    }
  }
  maybeRound(merged, mode);
  const y = affineFwd(merged, getT(params, prefix + "o.weight"),
                      getT(params, prefix + "o.bias"), mode);
  return { y, cache: { xq, xkv, q, k, v, weights, merged, causal } };
}

export interface FFCache {
  x: Mat;
  pre1: Mat;
  hidden: Mat;
}

export function ffFwd(params: Params, prefix: string, x: Mat,
                      mode: Mode): { y: Mat; cache: FFCache } {
  const pre1 = affineFwd(x, getT(params, prefix + "w1.weight"),
                         getT(params, prefix + "w1.bias"), mode);
  const hidden = { data: pre1.data.slice(), rows: pre1.rows, cols: pre1.cols };
  for (let i = 0; i < hidden.data.length; i++) {
    if (hidden.data[i] < 0) hidden.data[i] = 0;
  }
  const y = affineFwd(hidden, getT(params, prefix + "w2.weight"),
                      getT(params, prefix + "w2.bias"), mode);
  return { y, cache: { x, pre1, hidden } };
}

export function embedFwd(params: Params, cfg: ModelConfig, pe: Mat,
                         ids: readonly number[],
                         positions: readonly number[], mode: Mode): Mat {
  const d = cfg.dModel;
  const scale = Math.sqrt(d);
  const emb = getT(params, "embedding");
  const x = mat(ids.length, d);
  for (let t = 0; t < ids.length; t++) {
    const src = ids[t] * d;
    const peRow = positions[t] * d;
    const xi = t * d;
    if (mode === "f32") {
      for (let j = 0; j < d; j++) {
        const scaled = Math.fround(emb.data[src + j] * scale);
        x.data[xi + j] = Math.fround(scaled + pe.data[peRow + j]);
      }
    } else {
      for (let j = 0; j < d; j++) {
        x.data[xi + j] = emb.data[src + j] * scale + pe.data[peRow + j];
      }
    }
  }
  return x;
}

function checkIds(ids: readonly number[], cfg: ModelConfig, what: string): void {
  if (ids.length === 0) throw new Error(`${what} must be non-empty`);
  if (ids.length > cfg.maxLen) {
    throw new Error(`${what} length ${ids.length} exceeds maxLen ${cfg.maxLen}`);
  }
  for (const i of ids) {
    if (!Number.isInteger(i) || i < 0 || i >= cfg.vocabSize) {
      throw new Error(`${what} ids must lie in [0, ${cfg.vocabSize})`);
    }
  }
}

export interface EncLayerCache {
  attn: AttnCache;
  ln1: LNCache;
  x1: Mat;
  ff: FFCache;
  ln2: LNCache;
}

export interface EncodeResult {
  ids: number[];
  states: Mat;
  layers: EncLayerCache[];
}

export function encode(params: Params, cfg: ModelConfig, pe: Mat,
                       srcIds: readonly number[], mode: Mode): EncodeResult {
  checkIds(srcIds, cfg, "source");
  const positions = srcIds.map((_, t) => t);
  let x = embedFwd(params, cfg, pe, srcIds, positions, mode);
  const layers: EncLayerCache[] = [];
  for (let i = 0; i < cfg.numLayers; i++) {
    const p = `encoder.${i}.`;
    const att = attentionFwd(params, p + "attn.", cfg, x, x, false, mode);
    const sum1 = mat(x.rows, x.cols);
    for (let j = 0; j < sum1.data.length; j++) {
      sum1.data[j] = x.data[j] + att.y.data[j];
    }
    const n1 = layerNormFwd(sum1, getT(params, p + "ln1.gamma"),
                            getT(params, p + "ln1.beta"), mode);
    const ff = ffFwd(params, p + "ff.", n1.y, mode);
    const sum2 = mat(x.rows, x.cols);
    for (let j = 0; j < sum2.data.length; j++) {
      sum2.data[j] = n1.y.data[j] + ff.y.data[j];
    }
    const n2 = layerNormFwd(sum2, getT(params, p + "ln2.gamma"),
                            getT(params, p + "ln2.beta"), mode);
    layers.push({ attn: att.cache, ln1: n1.cache, x1: n1.y,
                  ff: ff.cache, ln2: n2.cache });
    x = n2.y;
  }
  return { ids: [...srcIds], states: x, layers };
}

export interface DecLayerCache {
  self: AttnCache;
  ln1: LNCache;
  x1: Mat;
  cross: AttnCache;
  ln2: LNCache;
  x2: Mat;
  ff: FFCache;
  ln3: LNCache;
}

export interface DecodeResult {
  ids: number[];
  logits: Mat;
  hFinal: Mat;
  layers: DecLayerCache[];
}

export function decode(params: Params, cfg: ModelConfig, pe: Mat,
                       ids: readonly number[], memory: Mat,
                       mode: Mode): DecodeResult {
  checkIds(ids, cfg, "prefix");
  const positions = ids.map((_, t) => t);
  let x = embedFwd(params, cfg, pe, ids, positions, mode);
  const layers: DecLayerCache[] = [];
  for (let i = 0; i < cfg.numLayers; i++) {
    const p = `decoder.${i}.`;
    const self = attentionFwd(params, p + "self_attn.", cfg, x, x, true, mode);
    const sum1 = mat(x.rows, x.cols);
    for (let j = 0; j < sum1.data.length; j++) {
      sum1.data[j] = x.data[j] + self.y.data[j];
    }
    const n1 = layerNormFwd(sum1, getT(params, p + "ln1.gamma"),
                            getT(params, p + "ln1.beta"), mode);
    const cross = attentionFwd(params, p + "cross_attn.", cfg, n1.y, memory,
                               false, mode);
    const sum2 = mat(x.rows, x.cols);
    for (let j = 0; j < sum2.data.length; j++) {
      sum2.data[j] = n1.y.data[j] + cross.y.data[j];
    }
    const n2 = layerNormFwd(sum2, getT(params, p + "ln2.gamma"),
                            getT(params, p + "ln2.beta"), mode);
    const ff = ffFwd(params, p + "ff.", n2.y, mode);
    const sum3 = mat(x.rows, x.cols);
    for (let j = 0; j < sum3.data.length; j++) {
      sum3.data[j] = n2.y.data[j] + ff.y.data[j];
    }
    const n3 = layerNormFwd(sum3, getT(params, p + "ln3.gamma"),
                            getT(params, p + "ln3.beta"), mode);
    layers.push({ self: self.cache, ln1: n1.cache, x1: n1.y,
                  cross: cross.cache, ln2: n2.cache, x2: n2.y,
                  ff: ff.cache, ln3: n3.cache });
    x = n3.y;
  }
  const logits = affineFwd(x, getT(params, "output.weight"),
                           getT(params, "output.bias"), mode);
  return { ids: [...ids], logits, hFinal: x, layers };
}

/** Argmax over selectable tokens (PAD and BOS excluded), ties to the
 * lowest token id; mirrors the engine's greedy rule. */
export function argmaxSelectable(row: Float64Array, offset: number,
                                 vocabSize: number): number {
  let best = -1;
  let bestVal = -Infinity;
  for (let t = 0; t < vocabSize; t++) {
    if (t === PAD_ID || t === BOS_ID) continue;
    const v = row[offset + t];
    if (v > bestVal) {
      bestVal = v;
      best = t;
    }
  }
  return best;
}

/** Greedy decoding in the engine's numeric scheme: one full-prefix
 * decoder pass per token, argmax at the final position. */
export function greedyDecode(params: Params, cfg: ModelConfig, pe: Mat,
                             srcIds: readonly number[],
                             maxNewTokens?: number): number[] {
  let cap = cfg.maxLen - 1;
  if (maxNewTokens !== undefined) cap = Math.min(cap, maxNewTokens);
  if (cap < 1) throw new Error("no room to generate even one token");
  const memory = encode(params, cfg, pe, srcIds, "f32").states;
  const ids = [BOS_ID];
  while (ids.length - 1 < cap) {
    const out = decode(params, cfg, pe, ids, memory, "f32");
    const last = (out.logits.rows - 1) * out.logits.cols;
    const tok = argmaxSelectable(out.logits.data, last, cfg.vocabSize);
    ids.push(tok);
    if (tok === EOS_ID) break;
  }
  return ids;
}
