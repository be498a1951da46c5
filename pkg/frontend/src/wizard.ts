/**
 * Guided pairwise judgment entry.
 *
 * The wizard walks exactly one step per unordered attribute pair,
 * n(n-1)/2 for n compared attributes. Attributes marked "don't know" or
 * "don't care" drop out together with their pairs, and the submission
 * carries them as abstentions. After every judgment the consistency
 * preview is recomputed locally, so the gauge and the offending-triple
 * highlights update without a server round trip; on a server-side 422
 * the reported triples map back onto the exact pair controls involved,
 * each with a suggested consistent judgment.
 */

import {
  ConsistencyPreview,
  consistencyPreview,
  matrixFromRationals,
  priorityPreview,
  suggestedRepair,
} from "./ahp.js";
import { ConsistencyDoc, MatrixDoc } from "./api.js";
import {
  JudgmentControlState,
  Rational,
  formatRational,
  judgmentValue,
} from "./scale.js";

export type AbstentionKind = "dont_know" | "dont_care";

export interface PairHighlight {
  pair: [number, number];
  deviation: number;
  /** consistent value for the highlighted pair, rounded to the scale */
  suggestion: Rational;
  suggestionLabel: string;
}

export class PairwiseWizard {
  private judgments = new Map<string, JudgmentControlState>();
  private abstentionKinds = new Map<string, AbstentionKind>();
  private cursor = 0;

  constructor(readonly attributeIds: readonly string[]) {
    if (attributeIds.length < 2) {
      throw new Error("need at least 2 attributes to compare");
    }
  }

  /** Attributes still being compared, in declaration order. */
  activeAttributes(): string[] {
    return this.attributeIds.filter((id) => !this.abstentionKinds.has(id));
  }

  abstentions(): { attribute_id: string; kind: AbstentionKind }[] {
    return this.attributeIds
      .filter((id) => this.abstentionKinds.has(id))
      .map((id) => ({
        attribute_id: id,
        kind: this.abstentionKinds.get(id) as AbstentionKind,
      }));
  }

  /** All unordered pairs among active attributes: exactly n(n-1)/2 steps. */
  pairs(): [number, number][] {
    const active = this.activeAttributes();
    const result: [number, number][] = [];
    for (let i = 0; i < active.length; i++) {
      for (let j = i + 1; j < active.length; j++) {
        result.push([i, j]);
      }
    }
    return result;
  }

  stepCount(): number {
    return this.pairs().length;
  }

  currentStep(): { pair: [number, number]; index: number; total: number } {
    const pairs = this.pairs();
    const index = Math.min(this.cursor, pairs.length - 1);
    return { pair: pairs[index], index, total: pairs.length };
  }

  goTo(index: number): void {
    if (index < 0 || index >= this.stepCount()) {
      throw new Error(`step ${index} out of range`);
    }
    this.cursor = index;
  }

  private key(pair: [number, number]): string {
    return `${pair[0]}:${pair[1]}`;
  }

  setJudgment(state: JudgmentControlState): void {
    const [a, b] = state.pair;
    const n = this.activeAttributes().length;
    if (a >= b || b >= n) {
      throw new Error(`illegal pair (${a}, ${b})`);
    }
    this.judgments.set(this.key(state.pair), state);
    if (this.cursor < this.stepCount() - 1) {
      this.cursor += 1;
    }
  }

  judgmentFor(pair: [number, number]): JudgmentControlState | undefined {
    return this.judgments.get(this.key(pair));
  }

  /** Mark an attribute out of the comparison; its pairs disappear. */
  abstain(attributeId: string, kind: AbstentionKind): void {
    if (!this.attributeIds.includes(attributeId)) {
      throw new Error(`unknown attribute: ${attributeId}`);
    }
    const remaining = this.activeAttributes().filter((id) => id !== attributeId);
    if (remaining.length < 2) {
      throw new Error("abstaining would leave fewer than 2 attributes");
    }
    this.abstentionKinds.set(attributeId, kind);
    // judgments are keyed by active indices, which just shifted
    this.judgments.clear();
    this.cursor = 0;
  }

  reinstate(attributeId: string): void {
    if (this.abstentionKinds.delete(attributeId)) {
      this.judgments.clear();
      this.cursor = 0;
    }
  }

  complete(): boolean {
    return this.pairs().every((pair) => this.judgments.has(this.key(pair)));
  }

  /** Reciprocal matrix over the active attributes; unset pairs default to 1. */
  rationalEntries(): Rational[][] {
    const active = this.activeAttributes();
    const n = active.length;
    // diagonal fixed at 1; unset pairs default to "equally preferred"
    const rows: Rational[][] = Array.from({ length: n }, () =>
      Array.from({ length: n }, () => ({ num: 1, den: 1 })),
    );
    for (const [key, state] of this.judgments) {
      const [i, j] = key.split(":").map(Number);
      const value = judgmentValue(state);
      rows[i][j] = value;
      rows[j][i] = { num: value.den, den: value.num };
    }
    return rows;
  }

  /** Live consistency preview over the current judgments. */
  preview(tripleThreshold = 2.0): ConsistencyPreview {
    return consistencyPreview(
      matrixFromRationals(this.rationalEntries()),
      tripleThreshold,
    );
  }

  priorityEstimate(): { attributeId: string; value: number }[] {
    const active = this.activeAttributes();
    const vector = priorityPreview(matrixFromRationals(this.rationalEntries()));
    return active.map((attributeId, i) => ({ attributeId, value: vector[i] }));
  }

  /** Submission payload in the server's interchange format. */
  matrixDoc(): MatrixDoc {
    const entries: [number, number][] = [];
    for (const row of this.rationalEntries()) {
      for (const cell of row) {
        entries.push([cell.num, cell.den]);
      }
    }
    return { attributes: this.activeAttributes(), entries };
  }

  /**
   * Map rejected triples (local preview or a server 422 report) onto the
   * pair controls involved, each with the suggested consistent judgment.
   */
  highlightsFor(report: ConsistencyDoc | ConsistencyPreview): PairHighlight[] {
    const matrix = matrixFromRationals(this.rationalEntries());
    const triples =
      "offendingTriples" in report
        ? report.offendingTriples
        : report.offending_triples;
    const highlights = new Map<string, PairHighlight>();
    for (const triple of triples) {
      const { suggestion } = suggestedRepair(matrix, triple);
      const pairs: [number, number][] = [
        [triple.i, triple.j],
        [triple.j, triple.k],
        [triple.i, triple.k],
      ];
      for (const pair of pairs) {
        const key = this.key(pair);
        const existing = highlights.get(key);
        if (!existing || existing.deviation < triple.deviation) {
          highlights.set(key, {
            pair,
            deviation: triple.deviation,
            suggestion,
            suggestionLabel: `try ${formatRational(suggestion)} for ${
              this.activeAttributes()[triple.j]
            } vs ${this.activeAttributes()[triple.k]}`,
          });
        }
      }
    }
    return [...highlights.values()].sort((a, b) => b.deviation - a.deviation);
  }
}
