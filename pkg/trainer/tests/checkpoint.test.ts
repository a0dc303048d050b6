import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterAll, describe, expect, it } from "vitest";

import { checkpointBytes, readCheckpoint,
         writeCheckpoint } from "../src/checkpoint.js";
import { ModelConfig, initParams, paramShapes } from "../src/model.js";
import { Rng } from "../src/rng.js";
import { buildVocab } from "../src/vocab.js";

const CFG: ModelConfig = {
  vocabSize: 10, numLayers: 2, numHeads: 2, dModel: 8, dFF: 16, maxLen: 24,
};

const dir = mkdtempSync(join(tmpdir(), "ckpt-"));
afterAll(() => rmSync(dir, { recursive: true, force: true }));

function freshCheckpoint(seed: number) {
  const params = initParams(CFG, new Rng(seed));
  const vocab = buildVocab(CFG.vocabSize - 4);
  return { params, vocab, bytes: checkpointBytes(params, CFG, vocab) };
}

describe("checkpoint round trip", () => {
  it("restores config, vocab, and float32-quantized tensors", () => {
    const { params, vocab, bytes } = freshCheckpoint(1);
    const path = join(dir, "a.ckpt");
    writeFileSync(path, bytes);
    const loaded = readCheckpoint(path);
    expect(loaded.config).toEqual(CFG);
    expect(loaded.vocab.tokens).toEqual(vocab.tokens);
    for (const [name] of paramShapes(CFG)) {
      const orig = params.get(name)!;
      const back = loaded.params.get(name)!;
      expect([...back.shape]).toEqual([...orig.shape]);
      for (let i = 0; i < orig.data.length; i++) {
        expect(back.data[i]).toBe(Math.fround(orig.data[i]));
      }
    }
  });

  it("write-read-write reproduces the byte stream exactly", () => {
    const { bytes } = freshCheckpoint(2);
    const path = join(dir, "b.ckpt");
    writeFileSync(path, bytes);
    const loaded = readCheckpoint(path);
    const again = checkpointBytes(loaded.params, loaded.config, loaded.vocab);
    expect(again.equals(bytes)).toBe(true);
  });

  it("writeCheckpoint produces the same bytes as checkpointBytes", () => {
    const { params, vocab, bytes } = freshCheckpoint(3);
    const path = join(dir, "c.ckpt");
    writeCheckpoint(path, params, CFG, vocab);
    expect(readFileSync(path).equals(bytes)).toBe(true);
  });
});

describe("checkpoint validation", () => {
  it("rejects a vocabulary that disagrees with the config", () => {
    const params = initParams(CFG, new Rng(4));
    expect(() => checkpointBytes(params, CFG, buildVocab(3)))
      .toThrow(/vocabulary has/);
  });

  it("rejects bad magic", () => {
    const { bytes } = freshCheckpoint(5);
    const bad = Buffer.from(bytes);
    bad.write("NOPE!", 0);
    const path = join(dir, "bad-magic.ckpt");
    writeFileSync(path, bad);
    expect(() => readCheckpoint(path)).toThrow(/bad magic/);
  });

  it("rejects truncated files", () => {
    const { bytes } = freshCheckpoint(6);
    const path = join(dir, "short.ckpt");
    writeFileSync(path, bytes.subarray(0, bytes.length - 9));
    expect(() => readCheckpoint(path)).toThrow(/ends inside/);
  });

  it("rejects a header whose tensor shapes do not match the config", () => {
    const { bytes } = freshCheckpoint(7);
    const headerLen = bytes.readUInt32LE(6);
    const header = JSON.parse(
      bytes.subarray(10, 10 + headerLen).toString("utf-8"));
    header.tensors[0].shape = [3, 3];
    const mangled = Buffer.from(JSON.stringify(header), "utf-8");
    const out = Buffer.concat([
      bytes.subarray(0, 6),
      Buffer.from(new Uint32Array([mangled.length]).buffer),
      mangled,
      bytes.subarray(10 + headerLen),
    ]);
    const path = join(dir, "shape.ckpt");
    writeFileSync(path, out);
    expect(() => readCheckpoint(path)).toThrow(/unexpected tensor/);
  });

  it("rejects trailing bytes", () => {
    const { bytes } = freshCheckpoint(8);
    const path = join(dir, "trailing.ckpt");
    writeFileSync(path, Buffer.concat([bytes, Buffer.from("xx")]));
    expect(() => readCheckpoint(path)).toThrow(/trailing bytes/);
  });
});
