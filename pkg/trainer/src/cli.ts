/** Command-line entry points.
 *
 *   generate          write dataset line files and the vocabulary
 *   train             train on a task and export a checkpoint
 *   eval              re-measure held-out exact match of a checkpoint
 *   export-fixtures   emit interop fixtures for the engine's test suite
 *
 * Exit codes: 0 success, 1 usage error, 2 data or training failure.
 */

import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import { parseArgs } from "node:util";

import { readCheckpoint, writeCheckpoint } from "./checkpoint.js";
import { Dataset, TaskName, TaskSpec, generateDataset } from "./dataset.js";
import { decode, encode, greedyDecode, peTable } from "./forward.js";
import { DivergenceError, TRAIN_DEFAULTS, exactMatch, modelConfigFor,
         train } from "./train.js";
import { BOS_ID, EOS_ID, idsToText, vocabBytes } from "./vocab.js";

class UsageError extends Error {}

const SPEC_OPTIONS = {
  task: { type: "string" as const, default: "copy" },
  alphabet: { type: "string" as const, default: "12" },
  "min-len": { type: "string" as const, default: "12" },
  "max-len": { type: "string" as const, default: "28" },
  "edit-rate": { type: "string" as const, default: "0" },
  "train-pairs": { type: "string" as const, default: "4000" },
  "test-pairs": { type: "string" as const, default: "200" },
  seed: { type: "string" as const, default: "7" },
};

function num(name: string, raw: string | undefined, fallback?: number): number {
  if (raw === undefined) {
    if (fallback === undefined) throw new UsageError(`--${name} is required`);
    return fallback;
  }
  const v = Number(raw);
  if (!Number.isFinite(v)) throw new UsageError(`--${name}: not a number`);
  return v;
}

function specFrom(values: Record<string, string | undefined>): TaskSpec {
  const task = values["task"];
  if (task !== "copy" && task !== "reverse") {
    throw new UsageError("--task must be copy or reverse");
  }
  return {
    task: task as TaskName,
    alphabetSize: num("alphabet", values["alphabet"]),
    minLen: num("min-len", values["min-len"]),
    maxLen: num("max-len", values["max-len"]),
    editRate: num("edit-rate", values["edit-rate"]),
    trainPairs: num("train-pairs", values["train-pairs"]),
    testPairs: num("test-pairs", values["test-pairs"]),
    seed: num("seed", values["seed"]),
  };
}

function writeLines(path: string, lines: string[]): void {
  writeFileSync(path, lines.map((l) => l + "\n").join(""));
}

function pairLines(dataset: Dataset, which: "train" | "test") {
  const sources = dataset[which].map((p) => idsToText(dataset.vocab, p.source));
  const targets = dataset[which].map((p) => idsToText(dataset.vocab, p.target));
  return { sources, targets };
}

function cmdGenerate(argv: string[]): number {
  const { values } = parseArgs({
    args: argv,
    options: { ...SPEC_OPTIONS, "out-dir": { type: "string" } },
  });
  const outDir = values["out-dir"];
  if (outDir === undefined) throw new UsageError("--out-dir is required");
  const dataset = generateDataset(specFrom(values));
  mkdirSync(outDir, { recursive: true });
  for (const which of ["train", "test"] as const) {
    const { sources, targets } = pairLines(dataset, which);
    writeLines(join(outDir, `${which}_sources.txt`), sources);
    writeLines(join(outDir, `${which}_targets.txt`), targets);
  }
  writeFileSync(join(outDir, "vocab.txt"), vocabBytes(dataset.vocab));
  writeFileSync(join(outDir, "task.json"),
                JSON.stringify(dataset.spec, null, 2) + "\n");
  console.log(`wrote ${dataset.train.length} train / ` +
              `${dataset.test.length} test pairs to ${outDir}`);
  return 0;
}

function cmdTrain(argv: string[]): number {
  const { values } = parseArgs({
    args: argv,
    options: {
      ...SPEC_OPTIONS,
      checkpoint: { type: "string" },
      steps: { type: "string" },
      batch: { type: "string" },
      lr: { type: "string" },
      warmup: { type: "string" },
      "train-seed": { type: "string" },
      "target-exact": { type: "string" },
    },
  });
  const ckptPath = values["checkpoint"];
  if (ckptPath === undefined) throw new UsageError("--checkpoint is required");
  const spec = specFrom(values);
  const tc = {
    ...TRAIN_DEFAULTS,
    steps: num("steps", values["steps"], TRAIN_DEFAULTS.steps),
    batchSize: num("batch", values["batch"], TRAIN_DEFAULTS.batchSize),
    lr: num("lr", values["lr"], TRAIN_DEFAULTS.lr),
    warmupSteps: num("warmup", values["warmup"], TRAIN_DEFAULTS.warmupSteps),
    seed: num("train-seed", values["train-seed"], TRAIN_DEFAULTS.seed),
    targetExact: num("target-exact", values["target-exact"],
                     TRAIN_DEFAULTS.targetExact),
  };
  const dataset = generateDataset(spec);
  const cfg = modelConfigFor(spec.alphabetSize, spec.maxLen);
  const t0 = Date.now();
  const result = train(dataset, cfg, tc, (m) => console.log(m));
  console.log(`trained in ${((Date.now() - t0) / 1000).toFixed(1)}s`);
  writeCheckpoint(ckptPath, result.params, cfg, dataset.vocab);
  console.log(`wrote ${ckptPath}`);
  console.log(`heldOutExact ${result.heldOutExact.toFixed(4)}`);
  return 0;
}

function cmdEval(argv: string[]): number {
  const { values } = parseArgs({
    args: argv,
    options: { ...SPEC_OPTIONS, checkpoint: { type: "string" } },
  });
  const ckptPath = values["checkpoint"];
  if (ckptPath === undefined) throw new UsageError("--checkpoint is required");
  const spec = specFrom(values);
  const dataset = generateDataset(spec);
  const { params, config } = readCheckpoint(ckptPath);
  const pe = peTable(config.maxLen, config.dModel);
  const exact = exactMatch(params, config, pe, dataset.test);
  console.log(`heldOutExact ${exact.toFixed(4)} (${dataset.test.length} pairs)`);
  return 0;
}

function cmdExportFixtures(argv: string[]): number {
  const { values } = parseArgs({
    args: argv,
    options: {
      ...SPEC_OPTIONS,
      checkpoint: { type: "string" },
      "out-dir": { type: "string" },
      count: { type: "string", default: "50" },
    },
  });
  const ckptPath = values["checkpoint"];
  const outDir = values["out-dir"];
  if (ckptPath === undefined || outDir === undefined) {
    throw new UsageError("--checkpoint and --out-dir are required");
  }
  const count = num("count", values["count"]);
  const spec = specFrom(values);
  const dataset = generateDataset(spec);
  if (dataset.test.length < count) {
    throw new UsageError(`need at least ${count} test pairs`);
  }
  const { params, config, vocab } = readCheckpoint(ckptPath);
  const pe = peTable(config.maxLen, config.dModel);
  mkdirSync(outDir, { recursive: true });

  const heldout = dataset.test.slice(0, count);
  const sourceIds = heldout.map((p) => [BOS_ID, ...p.source, EOS_ID]);
  const greedyIds = sourceIds.map((src) =>
    greedyDecode(params, config, pe, src));
  writeLines(join(outDir, "heldout_sources.txt"),
             heldout.map((p) => idsToText(vocab, p.source)));
  writeLines(join(outDir, "trainer_greedy.txt"),
             greedyIds.map((ids) => idsToText(vocab, ids)));

  // last-position logits for 10 (source, prefix) pairs, prefix depth i
  const probes = [];
  for (let i = 0; i < 10; i++) {
    const pair = heldout[i];
    const source = [BOS_ID, ...pair.source, EOS_ID];
    const prefix = [BOS_ID, ...pair.target.slice(0, Math.min(i, pair.target.length))];
    const memory = encode(params, config, pe, source, "f32").states;
    const out = decode(params, config, pe, prefix, memory, "f32");
    const last = (out.logits.rows - 1) * out.logits.cols;
    probes.push({
      source,
      prefix,
      logits: [...out.logits.data.subarray(last, last + config.vocabSize)],
    });
  }
  const exact = exactMatch(params, config, pe, dataset.test);
  writeFileSync(join(outDir, "logit_probes.json"),
                JSON.stringify(probes) + "\n");
  writeFileSync(join(outDir, "task.json"), JSON.stringify({
    spec,
    modelConfig: config,
    heldOutExact: exact,
    greedyIds,
  }) + "\n");
  console.log(`wrote fixtures for ${count} held-out sources to ${outDir}`);
  console.log(`heldOutExact ${exact.toFixed(4)}`);
  return 0;
}

const COMMANDS: Record<string, (argv: string[]) => number> = {
  generate: cmdGenerate,
  train: cmdTrain,
  eval: cmdEval,
  "export-fixtures": cmdExportFixtures,
};

export function main(argv: string[]): number {
  const [cmd, ...rest] = argv;
  const handler = cmd === undefined ? undefined : COMMANDS[cmd];
  if (handler === undefined) {
    console.error(`usage: cli <${Object.keys(COMMANDS).join("|")}> [options]`);
    return 1;
  }
  try {
    return handler(rest);
  } catch (err) {
    if (err instanceof UsageError ||
        (err instanceof TypeError && err.message.includes("option"))) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    if (err instanceof DivergenceError) {
      console.error(`error: ${err.message}`);
      return 2;
    }
    if (err instanceof Error) {
      console.error(`error: ${err.message}`);
      return 2;
    }
    throw err;
  }
}

const invokedDirectly = process.argv[1] !== undefined &&
  import.meta.url.endsWith(process.argv[1].split("/").pop() as string);
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
