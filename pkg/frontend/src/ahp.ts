/**
 * Client-side consistency math for instant feedback while judging.
 *
 * Mirrors the server's computation (power iteration, CI/RI/CR, offending
 * triples) so the consistency gauge reacts to every judgment without a
 * round trip. The server stays authoritative: submissions are always
 * re-checked there, and the parity test pins this module to the CLI's
 * output within 1e-6 on the golden corpus.
 */

import { Rational, nearestLegalValue, rationalToNumber } from "./scale.js";

export const CR_LIMIT = 0.1;
const POWER_TOLERANCE = 1e-10;
const POWER_MAX_ITERATIONS = 10_000;

/**
 * Mean consistency index of random judgment matrices by order, mirroring
 * the service's table (500,000 samples per order, seed 7).
 */
export const RI_TABLE: Record<number, number> = {
  1: 0.0,
  2: 0.0,
  3: 0.5251124817702437,
  4: 0.8847432457608214,
  5: 1.1082342278441324,
  6: 1.2493780213721535,
  7: 1.339945141305823,
  8: 1.4040432164163126,
  9: 1.4503835727014187,
  10: 1.4856974755564787,
  11: 1.513550659427974,
  12: 1.5360551819758312,
  13: 1.5546687761005415,
  14: 1.5705200437409903,
  15: 1.583968017281445,
};

export interface OffendingTriple {
  i: number;
  j: number;
  k: number;
  deviation: number;
}

export interface ConsistencyPreview {
  lambdaMax: number;
  ci: number;
  ri: number;
  cr: number;
  consistent: boolean;
  offendingTriples: OffendingTriple[];
}

/** Dominant eigenpair of a positive matrix by power iteration. */
export function dominantEigen(matrix: number[][]): {
  lambda: number;
  vector: number[];
} {
  const n = matrix.length;
  let v = new Array<number>(n).fill(1 / n);
  for (let iteration = 0; iteration < POWER_MAX_ITERATIONS; iteration++) {
    const w = new Array<number>(n).fill(0);
    for (let i = 0; i < n; i++) {
      for (let j = 0; j < n; j++) {
        w[i] += matrix[i][j] * v[j];
      }
    }
    const total = w.reduce((a, b) => a + b, 0);
    for (let i = 0; i < n; i++) {
      w[i] /= total;
    }
    let diff = 0;
    for (let i = 0; i < n; i++) {
      diff = Math.max(diff, Math.abs(w[i] - v[i]));
    }
    v = w;
    if (diff < POWER_TOLERANCE) {
      break;
    }
  }
  let lambda = 0;
  for (let i = 0; i < n; i++) {
    let row = 0;
    for (let j = 0; j < n; j++) {
      row += matrix[i][j] * v[j];
    }
    lambda += row / v[i];
  }
  return { lambda: lambda / n, vector: v };
}

export function offendingTriples(
  matrix: number[][],
  threshold = 2.0,
): OffendingTriple[] {
  const n = matrix.length;
  const found: OffendingTriple[] = [];
  for (let i = 0; i < n; i++) {
    for (let j = i + 1; j < n; j++) {
      for (let k = j + 1; k < n; k++) {
        const ratio = (matrix[i][j] * matrix[j][k]) / matrix[i][k];
        const deviation = ratio >= 1 ? ratio : 1 / ratio;
        if (deviation >= threshold) {
          found.push({ i, j, k, deviation });
        }
      }
    }
  }
  found.sort(
    (a, b) => b.deviation - a.deviation || a.i - b.i || a.j - b.j || a.k - b.k,
  );
  return found;
}

export function consistencyPreview(
  matrix: number[][],
  tripleThreshold = 2.0,
): ConsistencyPreview {
  const n = matrix.length;
  const { lambda } = dominantEigen(matrix);
  const ci = n <= 2 ? 0 : (lambda - n) / (n - 1);
  const ri = RI_TABLE[n];
  if (ri === undefined) {
    throw new Error(`no random index cached for order ${n}`);
  }
  const cr = ri === 0 ? 0 : ci / ri;
  return {
    lambdaMax: lambda,
    ci,
    ri,
    cr,
    consistent: cr <= CR_LIMIT,
    offendingTriples: offendingTriples(matrix, tripleThreshold),
  };
}

export function priorityPreview(matrix: number[][]): number[] {
  return dominantEigen(matrix).vector;
}

/**
 * For a rejected triple (i, j, k): the value of a_jk that would make the
 * triple exactly consistent, and the nearest legal judgment to suggest.
 */
export function suggestedRepair(
  matrix: number[][],
  triple: OffendingTriple,
): { exact: number; suggestion: Rational } {
  const exact = matrix[triple.i][triple.k] / matrix[triple.i][triple.j];
  const suggestion = nearestLegalValue(exact);
  return { exact, suggestion };
}

export function matrixFromRationals(entries: Rational[][]): number[][] {
  return entries.map((row) => row.map(rationalToNumber));
}
