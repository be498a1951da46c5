import { describe, expect, it } from "vitest";

import {
  JudgmentControlState,
  LEGAL_VALUES,
  SCALE_LEVELS,
  formatRational,
  judgmentValue,
  levelById,
  nearestLegalValue,
  rationalToNumber,
} from "../src/scale";

describe("verbal scale", () => {
  it("is exhaustive over the nine levels", () => {
    expect(SCALE_LEVELS).toHaveLength(9);
    const values = SCALE_LEVELS.map((l) => l.value).sort((a, b) => a - b);
    expect(values).toEqual([1, 2, 3, 4, 5, 6, 7, 8, 9]);
  });

  it("is exclusive: ids and values are unique", () => {
    expect(new Set(SCALE_LEVELS.map((l) => l.id)).size).toBe(9);
    expect(new Set(SCALE_LEVELS.map((l) => l.value)).size).toBe(9);
  });

  it("maps the verbal anchors to their classic values", () => {
    expect(levelById("extreme").value).toBe(9);
    expect(levelById("very_strong").value).toBe(7);
    expect(levelById("strong").value).toBe(5);
    expect(levelById("moderate").value).toBe(3);
    expect(levelById("equal").value).toBe(1);
  });

  it("marks exactly 2, 4, 6, 8 as intermediate", () => {
    const intermediates = SCALE_LEVELS.filter((l) => l.intermediate).map(
      (l) => l.value,
    );
    expect(intermediates.sort((a, b) => a - b)).toEqual([2, 4, 6, 8]);
  });

  it("rejects unknown level ids", () => {
    expect(() => levelById("overwhelming")).toThrow(/unknown/);
  });
});

describe("judgment values", () => {
  it("derives the level value in the forward direction", () => {
    const state: JudgmentControlState = {
      pair: [0, 1],
      levelId: "very_strong",
      inverted: false,
    };
    expect(judgmentValue(state)).toEqual({ num: 7, den: 1 });
  });

  it("derives the reciprocal when inverted", () => {
    const state: JudgmentControlState = {
      pair: [0, 2],
      levelId: "extreme",
      inverted: true,
    };
    expect(judgmentValue(state)).toEqual({ num: 1, den: 9 });
  });

  it("equal preference has no direction", () => {
    const forward = judgmentValue({ pair: [0, 1], levelId: "equal", inverted: false });
    const backward = judgmentValue({ pair: [0, 1], levelId: "equal", inverted: true });
    expect(forward).toEqual({ num: 1, den: 1 });
    expect(backward).toEqual({ num: 1, den: 1 });
  });
});

describe("legal value set", () => {
  it("has the seventeen values ascending", () => {
    expect(LEGAL_VALUES).toHaveLength(17);
    const numbers = LEGAL_VALUES.map(rationalToNumber);
    for (let i = 1; i < numbers.length; i++) {
      expect(numbers[i]).toBeGreaterThan(numbers[i - 1]);
    }
    expect(LEGAL_VALUES[0]).toEqual({ num: 1, den: 9 });
    expect(LEGAL_VALUES[16]).toEqual({ num: 9, den: 1 });
  });

  it("finds the nearest legal judgment", () => {
    expect(nearestLegalValue(3.4)).toEqual({ num: 3, den: 1 });
    expect(nearestLegalValue(0.1)).toEqual({ num: 1, den: 9 });
    expect(nearestLegalValue(81)).toEqual({ num: 9, den: 1 });
    // exact midpoint resolves to the smaller value
    expect(nearestLegalValue(1.5)).toEqual({ num: 1, den: 1 });
  });

  it("formats rationals for display", () => {
    expect(formatRational({ num: 7, den: 1 })).toBe("7");
    expect(formatRational({ num: 1, den: 7 })).toBe("1/7");
  });
});
