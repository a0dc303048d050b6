/** Row-major float64 matrices and the handful of products training
 * needs.  Loops are ordered i-k-j so the inner loop walks both operands
 * sequentially. */

export interface Mat {
  data: Float64Array;
  rows: number;
  cols: number;
}

export function mat(rows: number, cols: number): Mat {
  return { data: new Float64Array(rows * cols), rows, cols };
}

export function matFrom(rows: number, cols: number, values: ArrayLike<number>): Mat {
  const m = mat(rows, cols);
  m.data.set(values);
  return m;
}

export function copyMat(a: Mat): Mat {
  return { data: a.data.slice(), rows: a.rows, cols: a.cols };
}

/** c = a @ b, a [m,k], b [k,n].  The inner loop is a 2-wide saxpy over
 * pairs of a-values so each pass reads one b row less often. */
export function matmul(a: Mat, b: Mat): Mat {
  if (a.cols !== b.rows) throw new Error("matmul shape mismatch");
  const c = mat(a.rows, b.cols);
  const n = b.cols;
  const kMax = a.cols;
  const ad = a.data;
  const bd = b.data;
  const cd = c.data;
  const kEven = kMax - (kMax & 1);
  for (let i = 0; i < a.rows; i++) {
    const ai = i * kMax;
    const ci = i * n;
    let k = 0;
    for (; k < kEven; k += 2) {
      const a0 = ad[ai + k];
      const a1 = ad[ai + k + 1];
      if (a0 === 0 && a1 === 0) continue;
      const b0 = k * n;
      const b1 = b0 + n;
      for (let j = 0; j < n; j++) {
        cd[ci + j] += a0 * bd[b0 + j] + a1 * bd[b1 + j];
      }
    }
    if (k < kMax) {
      const a0 = ad[ai + k];
      if (a0 !== 0) {
        const b0 = k * n;
        for (let j = 0; j < n; j++) cd[ci + j] += a0 * bd[b0 + j];
      }
    }
  }
  return c;
}

/** c = a @ b^T, a [m,k], b [n,k]. */
export function matmulTB(a: Mat, b: Mat): Mat {
  if (a.cols !== b.cols) throw new Error("matmulTB shape mismatch");
  const c = mat(a.rows, b.rows);
  const kMax = a.cols;
  const ad = a.data;
  const bd = b.data;
  const cd = c.data;
  const k4 = kMax - (kMax & 3);
  for (let i = 0; i < a.rows; i++) {
    const ai = i * kMax;
    const ci = i * b.rows;
    for (let j = 0; j < b.rows; j++) {
      const bj = j * kMax;
      let s0 = 0;
      let s1 = 0;
      let s2 = 0;
      let s3 = 0;
      let k = 0;
      for (; k < k4; k += 4) {
        s0 += ad[ai + k] * bd[bj + k];
        s1 += ad[ai + k + 1] * bd[bj + k + 1];
        s2 += ad[ai + k + 2] * bd[bj + k + 2];
        s3 += ad[ai + k + 3] * bd[bj + k + 3];
      }
      for (; k < kMax; k++) s0 += ad[ai + k] * bd[bj + k];
      cd[ci + j] = s0 + s1 + s2 + s3;
    }
  }
  return c;
}

/** acc += a^T @ b, a [k,m], b [k,n], acc [m,n] flat.  Sample rows are
 * consumed in pairs so each accumulator row is updated half as often. */
export function addMatmulTA(acc: Float64Array, a: Mat, b: Mat): void {
  if (a.rows !== b.rows) throw new Error("addMatmulTA shape mismatch");
  const m = a.cols;
  const n = b.cols;
  const ad = a.data;
  const bd = b.data;
  const kEven = a.rows - (a.rows & 1);
  let k = 0;
  for (; k < kEven; k += 2) {
    const a0 = k * m;
    const a1 = a0 + m;
    const b0 = k * n;
    const b1 = b0 + n;
    for (let i = 0; i < m; i++) {
      const v0 = ad[a0 + i];
      const v1 = ad[a1 + i];
      if (v0 === 0 && v1 === 0) continue;
      const ci = i * n;
      for (let j = 0; j < n; j++) {
        acc[ci + j] += v0 * bd[b0 + j] + v1 * bd[b1 + j];
      }
    }
  }
  if (k < a.rows) {
    const ak = k * m;
    const bk = k * n;
    for (let i = 0; i < m; i++) {
      const av = ad[ak + i];
      if (av === 0) continue;
      const ci = i * n;
      for (let j = 0; j < n; j++) acc[ci + j] += av * bd[bk + j];
    }
  }
}

export function addInPlace(a: Mat, b: Mat): void {
  for (let i = 0; i < a.data.length; i++) a.data[i] += b.data[i];
}

/** acc += column sums of a (one entry per column). */
export function addColSum(acc: Float64Array, a: Mat): void {
  for (let i = 0; i < a.rows; i++) {
    const ai = i * a.cols;
    for (let j = 0; j < a.cols; j++) acc[j] += a.data[ai + j];
  }
}

export function froundInPlace(a: Mat): void {
  for (let i = 0; i < a.data.length; i++) a.data[i] = Math.fround(a.data[i]);
}
