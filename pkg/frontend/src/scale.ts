/**
 * The nine-level verbal judgment scale and its numeric values.
 *
 * Every pairwise judgment in the UI is one of these levels plus a
 * direction; the derived numeric value is the level itself or its
 * reciprocal when the preference points the other way. Values travel as
 * exact [numerator, denominator] pairs so the server-side reciprocity
 * check always holds.
 */

export interface Rational {
  num: number;
  den: number;
}

export interface ScaleLevel {
  /** stable key used in payloads and tests */
  id: string;
  /** verbal anchor shown to the user; intermediates have no anchor */
  label: string;
  value: number;
  intermediate: boolean;
}

/** Ordered strongest-first for display in the selector. */
export const SCALE_LEVELS: readonly ScaleLevel[] = [
  { id: "extreme", label: "Extremely preferred", value: 9, intermediate: false },
  { id: "intermediate8", label: "Between very strong and extreme (8)", value: 8, intermediate: true },
  { id: "very_strong", label: "Very strongly preferred", value: 7, intermediate: false },
  { id: "intermediate6", label: "Between strong and very strong (6)", value: 6, intermediate: true },
  { id: "strong", label: "Strongly preferred", value: 5, intermediate: false },
  { id: "intermediate4", label: "Between moderate and strong (4)", value: 4, intermediate: true },
  { id: "moderate", label: "Moderately preferred", value: 3, intermediate: false },
  { id: "intermediate2", label: "Between equal and moderate (2)", value: 2, intermediate: true },
  { id: "equal", label: "Equally preferred", value: 1, intermediate: false },
];

export function levelById(id: string): ScaleLevel {
  const level = SCALE_LEVELS.find((l) => l.id === id);
  if (!level) {
    throw new Error(`unknown judgment level: ${id}`);
  }
  return level;
}

/** One pair's judgment as selected in the wizard. */
export interface JudgmentControlState {
  /** indices into the attribute list, first < second */
  pair: [number, number];
  levelId: string;
  /** true when the *second* attribute of the pair is the preferred one */
  inverted: boolean;
}

/** Numeric value of a judgment: the level or its reciprocal. */
export function judgmentValue(state: JudgmentControlState): Rational {
  const level = levelById(state.levelId);
  return state.inverted && level.value !== 1
    ? { num: 1, den: level.value }
    : { num: level.value, den: 1 };
}

export function rationalToNumber(r: Rational): number {
  return r.num / r.den;
}

/** All seventeen legal numeric values, ascending (1/9 ... 9). */
export const LEGAL_VALUES: readonly Rational[] = [
  ...[...SCALE_LEVELS]
    .filter((l) => l.value !== 1)
    .map((l) => ({ num: 1, den: l.value }))
    .sort((a, b) => rationalToNumber(a) - rationalToNumber(b)),
  { num: 1, den: 1 },
  ...[...SCALE_LEVELS]
    .filter((l) => l.value !== 1)
    .map((l) => ({ num: l.value, den: 1 }))
    .sort((a, b) => rationalToNumber(a) - rationalToNumber(b)),
];

/** Closest legal judgment to a target ratio (ties go to the smaller). */
export function nearestLegalValue(target: number): Rational {
  let best = LEGAL_VALUES[0];
  let bestDistance = Math.abs(rationalToNumber(best) - target);
  for (const candidate of LEGAL_VALUES.slice(1)) {
    const distance = Math.abs(rationalToNumber(candidate) - target);
    if (distance < bestDistance) {
      best = candidate;
      bestDistance = distance;
    }
  }
  return best;
}

export function formatRational(r: Rational): string {
  return r.den === 1 ? `${r.num}` : `${r.num}/${r.den}`;
}
