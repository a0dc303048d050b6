import { describe, expect, it } from "vitest";

import { Rng } from "../src/rng.js";

// Reference outputs computed with an independent mulberry32
// implementation (integer arithmetic, no JS involved).
const SEED1_FIRST4 = [
  0.62707394058816135, 0.0027357211802154779,
  0.52744703995995224, 0.98105096747167408,
];

describe("Rng", () => {
  it("matches the mulberry32 reference sequence", () => {
    const rng = new Rng(1);
    for (const want of SEED1_FIRST4) {
      expect(rng.next()).toBe(want);
    }
    const other = new Rng(123456789);
    expect(other.next()).toBe(0.2577907438389957);
    expect(other.next()).toBe(0.97077211155556142);
  });

  it("is reproducible for equal seeds and differs across seeds", () => {
    const a = new Rng(42);
    const b = new Rng(42);
    const c = new Rng(43);
    const seqA = Array.from({ length: 50 }, () => a.next());
    const seqB = Array.from({ length: 50 }, () => b.next());
    const seqC = Array.from({ length: 50 }, () => c.next());
    expect(seqA).toEqual(seqB);
    expect(seqA).not.toEqual(seqC);
  });

  it("int stays inside [lo, hi)", () => {
    const rng = new Rng(7);
    for (let i = 0; i < 2000; i++) {
      const v = rng.int(3, 9);
      expect(v).toBeGreaterThanOrEqual(3);
      expect(v).toBeLessThan(9);
      expect(Number.isInteger(v)).toBe(true);
    }
  });

  it("gauss has roughly standard moments", () => {
    const rng = new Rng(11);
    const n = 20000;
    let sum = 0;
    let sumSq = 0;
    for (let i = 0; i < n; i++) {
      const v = rng.gauss();
      sum += v;
      sumSq += v * v;
    }
    const mean = sum / n;
    const variance = sumSq / n - mean * mean;
    expect(Math.abs(mean)).toBeLessThan(0.03);
    expect(Math.abs(variance - 1)).toBeLessThan(0.05);
  });

  it("distinct draws k distinct ascending values in range", () => {
    const rng = new Rng(5);
    for (let trial = 0; trial < 200; trial++) {
      const picks = rng.distinct(12, 5);
      expect(picks).toHaveLength(5);
      expect(new Set(picks).size).toBe(5);
      expect([...picks].sort((x, y) => x - y)).toEqual(picks);
      for (const p of picks) {
        expect(p).toBeGreaterThanOrEqual(0);
        expect(p).toBeLessThan(12);
      }
    }
    expect(() => rng.distinct(3, 4)).toThrow();
  });

  it("shuffle permutes without losing elements", () => {
    const rng = new Rng(3);
    const items = Array.from({ length: 30 }, (_, i) => i);
    const shuffled = rng.shuffle([...items]);
    expect([...shuffled].sort((x, y) => x - y)).toEqual(items);
    expect(shuffled).not.toEqual(items);
  });
});
