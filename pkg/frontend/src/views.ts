/**
 * Round views: what one participant sees and may do in the current phase.
 *
 * The affordance list is the contract: it names exactly the operations
 * the API would accept for this role in this phase, so the UI renders no
 * dead buttons and hides no legal action.
 */

import { ConcordanceDoc, ConflictDoc, FeedbackBundle, SessionStatus } from "./api.js";
import { CR_LIMIT } from "./ahp.js";

export type Affordance =
  | "submit_matrix"
  | "revise_matrix"
  | "answer_prompts"
  | "post_comment"
  | "suggest_attribute"
  | "declare_dissent"
  | "view_feedback"
  | "delegate"
  | "revoke_delegation"
  | "check_gate"
  | "advance_round"
  | "view_result";

export interface Gauge {
  value: number;
  limit: number;
  /** true when the value is on the acceptable side of the limit */
  ok: boolean;
}

export interface RoundView {
  phase: string;
  banner: string;
  affordances: Affordance[];
  crGauge: Gauge | null;
  concordanceGauge: Gauge | null;
  conflicts: ConflictDoc[];
  rationaleFeed: { author: string; kind: string; prompt: string; body: string }[];
  priorityDistribution: FeedbackBundle["priority_distribution"] | null;
}

const PHASE_BANNERS: Record<string, string> = {
  Elicitation: "Compare the attributes pair by pair",
  Round1: "Round 1 of 3: explain your priorities",
  Round2: "Round 2 of 3: review the group's feedback and revise",
  Round3: "Round 3 of 3: final revision, or stand apart",
  Aggregation: "Aggregating the group's priorities",
  Closed: "Consensus reached: the utility function is final",
};

export function stakeholderAffordances(status: SessionStatus): Affordance[] {
  if (status.read_only) {
    return status.closed ? ["view_result"] : [];
  }
  if (status.delegating) {
    // a delegator has no active participation beyond taking the vote back
    return status.phase === "Closed" ? ["view_result"] : ["revoke_delegation"];
  }
  switch (status.phase) {
    case "Elicitation":
      return ["submit_matrix", "delegate"];
    case "Round1":
      return [
        "answer_prompts",
        "revise_matrix",
        "post_comment",
        "suggest_attribute",
        "delegate",
      ];
    case "Round2":
      return [
        "view_feedback",
        "revise_matrix",
        "post_comment",
        "suggest_attribute",
        "delegate",
      ];
    case "Round3":
      return [
        "view_feedback",
        "revise_matrix",
        "declare_dissent",
        "post_comment",
        "suggest_attribute",
        "delegate",
      ];
    case "Closed":
      return ["view_result"];
    default:
      return [];
  }
}

export function facilitatorAffordances(status: SessionStatus): Affordance[] {
  if (status.closed) {
    return ["view_result"];
  }
  if (status.read_only) {
    return [];
  }
  const all: Affordance[] = ["advance_round"];
  if (status.phase === "Elicitation") {
    all.unshift("check_gate");
  }
  return all;
}

export function crGauge(cr: number): Gauge {
  return { value: cr, limit: CR_LIMIT, ok: cr <= CR_LIMIT };
}

export function concordanceGauge(report: ConcordanceDoc): Gauge {
  return {
    value: report.w_coefficient,
    limit: report.threshold,
    ok: report.agreed,
  };
}

export function buildRoundView(
  status: SessionStatus,
  options: {
    cr?: number | null;
    bundle?: FeedbackBundle | null;
    concordance?: ConcordanceDoc | null;
  } = {},
): RoundView {
  const bundle = options.bundle ?? null;
  const concordance = options.concordance ?? bundle?.concordance ?? null;
  return {
    phase: status.phase,
    banner: PHASE_BANNERS[status.phase] ?? status.phase,
    affordances: stakeholderAffordances(status),
    crGauge: options.cr == null ? null : crGauge(options.cr),
    concordanceGauge: concordance ? concordanceGauge(concordance) : null,
    conflicts: bundle?.conflicts ?? [],
    rationaleFeed: (bundle?.prior_round_rationales ?? []).map((r) => ({
      author: r.author_pseudonym,
      kind: r.kind,
      prompt: r.prompt,
      body: r.body,
    })),
    priorityDistribution: bundle?.priority_distribution ?? null,
  };
}

/** Conflicts where the requester sits on one side, marked for emphasis. */
export function ownConflicts(view: RoundView): ConflictDoc[] {
  return view.conflicts.filter((c) => c.requester_prefers !== null);
}
