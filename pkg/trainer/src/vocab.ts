/** Token alphabet shared with the inference engine.
 *
 * Ids are fixed: PAD=0, BOS=1, EOS=2, UNK=3, then content tokens.  The
 * content tokens are single-character SMILES symbols chosen so that any
 * concatenation re-tokenizes to the same character sequence (no "Cl",
 * "Br", or bracket-atom fragments can form), which lets the engine CLI
 * consume the generated text corpora directly.
 */

export const PAD_ID = 0;
export const BOS_ID = 1;
export const EOS_ID = 2;
export const UNK_ID = 3;

export const SPECIAL_TOKENS = ["<pad>", "<bos>", "<eos>", "<unk>"] as const;

const CONTENT_TOKENS = [
  "C", "c", "O", "o", "N", "n", "(", ")",
  "=", "#", "1", "2", "3", "F", "S", "s",
];

export interface Vocab {
  readonly tokens: readonly string[];
}

export function buildVocab(alphabetSize: number): Vocab {
  if (alphabetSize < 1 || alphabetSize > CONTENT_TOKENS.length) {
    throw new Error(
      `alphabet size must be in [1, ${CONTENT_TOKENS.length}]`);
  }
  return { tokens: [...SPECIAL_TOKENS, ...CONTENT_TOKENS.slice(0, alphabetSize)] };
}

/** One token per line, trailing newline; the checkpoint vocabulary
 * block and the vocabulary file share these bytes. */
export function vocabBytes(vocab: Vocab): Buffer {
  return Buffer.from(vocab.tokens.map((t) => t + "\n").join(""), "utf-8");
}

export function idsToText(vocab: Vocab, ids: readonly number[]): string {
  return ids
    .filter((i) => i > UNK_ID)
    .map((i) => vocab.tokens[i])
    .join("");
}
