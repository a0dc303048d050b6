/** Checkpoint serialization in the inference engine's binary format.
 *
 * Layout: magic "SPDK1\n"; u32-LE length-prefixed compact-JSON header
 * with the config fields and ordered tensor list; raw little-endian
 * float32 tensor data in header order; u32-LE length-prefixed
 * vocabulary block (one token per line).  The writer emits exactly the
 * bytes the engine's own saver would, so round trips through either
 * side are bit-identical.
 */

import { readFileSync, writeFileSync } from "node:fs";

import { ModelConfig, Params, Shape, numel, paramShapes } from "./model.js";
import { Vocab, vocabBytes } from "./vocab.js";

export const MAGIC = Buffer.from("SPDK1\n", "ascii");

function headerBytes(cfg: ModelConfig): Buffer {
  const tensors = [...paramShapes(cfg)].map(([name, shape]) => ({
    name,
    shape: [...shape],
  }));
  const header = {
    numLayers: cfg.numLayers,
    numHeads: cfg.numHeads,
    dModel: cfg.dModel,
    dFF: cfg.dFF,
    vocabSize: cfg.vocabSize,
    maxLen: cfg.maxLen,
    tensors,
  };
  return Buffer.from(JSON.stringify(header), "utf-8");
}

function u32le(n: number): Buffer {
  const b = Buffer.alloc(4);
  b.writeUInt32LE(n);
  return b;
}

export function checkpointBytes(params: Params, cfg: ModelConfig,
                                vocab: Vocab): Buffer {
  if (vocab.tokens.length !== cfg.vocabSize) {
    throw new Error(
      `vocabulary has ${vocab.tokens.length} entries, config says ${cfg.vocabSize}`);
  }
  const header = headerBytes(cfg);
  const chunks: Buffer[] = [MAGIC, u32le(header.length), header];
  for (const [name, shape] of paramShapes(cfg)) {
    const t = params.get(name);
    if (t === undefined) throw new Error(`missing tensor ${name}`);
    if (t.data.length !== numel(shape)) {
      throw new Error(`tensor ${name} has wrong element count`);
    }
    const f32 = new Float32Array(t.data);
    chunks.push(Buffer.from(f32.buffer, f32.byteOffset, f32.byteLength));
  }
  const vb = vocabBytes(vocab);
  chunks.push(u32le(vb.length), vb);
  return Buffer.concat(chunks);
}

export function writeCheckpoint(path: string, params: Params,
                                cfg: ModelConfig, vocab: Vocab): void {
  writeFileSync(path, checkpointBytes(params, cfg, vocab));
}

export interface LoadedCheckpoint {
  params: Params;
  config: ModelConfig;
  vocab: Vocab;
}

/** Read a checkpoint back; float32 values widen losslessly to the
 * float64 tensors the forward pass consumes. */
export function readCheckpoint(path: string): LoadedCheckpoint {
  const blob = readFileSync(path);
  if (!blob.subarray(0, MAGIC.length).equals(MAGIC)) {
    throw new Error("not a checkpoint file: bad magic");
  }
  let offset = MAGIC.length;
  const take = (n: number, what: string): Buffer => {
    if (offset + n > blob.length) {
      throw new Error(`file ends inside ${what}`);
    }
    const out = blob.subarray(offset, offset + n);
    offset += n;
    return out;
  };
  const headerLen = take(4, "header length").readUInt32LE();
  const header = JSON.parse(take(headerLen, "header").toString("utf-8"));
  const config: ModelConfig = {
    numLayers: header.numLayers,
    numHeads: header.numHeads,
    dModel: header.dModel,
    dFF: header.dFF,
    vocabSize: header.vocabSize,
    maxLen: header.maxLen,
  };
  const expected = paramShapes(config);
  const declared: { name: string; shape: Shape }[] = header.tensors;
  if (declared.length !== expected.size) {
    throw new Error("header tensor count disagrees with config");
  }
  const params: Params = new Map();
  for (const { name, shape } of declared) {
    const want = expected.get(name);
    if (want === undefined || want.join(",") !== shape.join(",")) {
      throw new Error(`unexpected tensor ${name} ${JSON.stringify(shape)}`);
    }
    const count = numel(shape);
    const raw = take(4 * count, `tensor ${name}`);
    const f32 = new Float32Array(
      raw.buffer.slice(raw.byteOffset, raw.byteOffset + raw.byteLength));
    params.set(name, { shape, data: Float64Array.from(f32) });
  }
  const vocabLen = take(4, "vocabulary length").readUInt32LE();
  const lines = take(vocabLen, "vocabulary").toString("utf-8").split("\n");
  if (lines.length && lines[lines.length - 1] === "") lines.pop();
  if (lines.length !== config.vocabSize) {
    throw new Error("vocabulary size disagrees with config");
  }
  if (offset !== blob.length) {
    throw new Error("trailing bytes after vocabulary");
  }
  return { params, config, vocab: { tokens: lines } };
}
