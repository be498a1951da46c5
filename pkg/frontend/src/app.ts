/**
 * Browser entry point: connects to a session with a token, polls the
 * session state, and renders the screen for the current phase and role.
 */

import {
  ApiError,
  AttributeDoc,
  FeedbackBundle,
  SessionApi,
  SessionStatus,
} from "./api.js";
import { createPoller, Poller } from "./polling.js";
import { SCALE_LEVELS, formatRational } from "./scale.js";
import {
  Affordance,
  buildRoundView,
  facilitatorAffordances,
  Gauge,
} from "./views.js";
import { PairHighlight, PairwiseWizard } from "./wizard.js";

interface AppState {
  api: SessionApi | null;
  role: "stakeholder" | "facilitator";
  status: SessionStatus | null;
  attributes: AttributeDoc[];
  wizard: PairwiseWizard | null;
  highlights: PairHighlight[];
  bundle: FeedbackBundle | null;
  notice: string;
  poller: Poller | null;
}

const state: AppState = {
  api: null,
  role: "stakeholder",
  status: null,
  attributes: [],
  wizard: null,
  highlights: [],
  bundle: null,
  notice: "",
  poller: null,
};

function el(tag: string, className = "", text = ""): HTMLElement {
  const node = document.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text) {
    node.textContent = text;
  }
  return node;
}

function button(label: string, onClick: () => void, className = ""): HTMLElement {
  const node = el("button", className, label) as HTMLButtonElement;
  node.type = "button";
  node.addEventListener("click", onClick);
  return node;
}

function gaugeNode(title: string, gauge: Gauge, kind: "cr" | "w"): HTMLElement {
  const wrap = el("div", `gauge ${gauge.ok ? "gauge-ok" : "gauge-bad"}`);
  wrap.append(el("span", "gauge-title", title));
  wrap.append(el("span", "gauge-value", gauge.value.toFixed(3)));
  const hint =
    kind === "cr"
      ? `redline ${gauge.limit.toFixed(2)}`
      : `threshold ${gauge.limit.toFixed(2)}`;
  wrap.append(el("span", "gauge-limit", hint));
  return wrap;
}

function notify(message: string): void {
  state.notice = message;
  render();
}

async function guard<T>(work: () => Promise<T>): Promise<T | undefined> {
  try {
    return await work();
  } catch (error) {
    if (error instanceof ApiError) {
      notify(error.message);
    } else {
      notify(`request failed: ${String(error)}`);
    }
    return undefined;
  }
}

// -- connect screen ----------------------------------------------------------

function renderConnect(root: HTMLElement): void {
  const form = el("div", "connect");
  form.append(el("h1", "", "ahpdelphi"));
  const base = el("input") as HTMLInputElement;
  base.placeholder = "service URL, e.g. http://localhost:8080";
  base.value = window.location.origin;
  const sessionId = el("input") as HTMLInputElement;
  sessionId.placeholder = "session id";
  const token = el("input") as HTMLInputElement;
  token.placeholder = "access token";
  const role = el("select") as HTMLSelectElement;
  for (const value of ["stakeholder", "facilitator"]) {
    const option = el("option", "", value) as HTMLOptionElement;
    option.value = value;
    role.append(option);
  }
  form.append(base, sessionId, token, role);
  form.append(
    button("Join session", () => {
      state.role = role.value as AppState["role"];
      state.api = new SessionApi(
        base.value.replace(/\/$/, ""),
        sessionId.value.trim(),
        token.value.trim(),
      );
      void connect();
    }, "primary"),
  );
  root.append(form);
}

async function connect(): Promise<void> {
  const api = state.api;
  if (!api) {
    return;
  }
  const status = await guard(() => api.status());
  if (!status) {
    state.api = null;
    return;
  }
  state.status = status;
  state.attributes = (await guard(() => api.attributes()))?.attributes ?? [];
  state.wizard = new PairwiseWizard(state.attributes.map((a) => a.id));
  state.poller?.stop();
  state.poller = createPoller(
    () => api.status(),
    (snapshot) => {
      const phaseChanged = state.status?.phase !== snapshot.phase;
      state.status = snapshot;
      if (phaseChanged) {
        state.bundle = null;
        state.highlights = [];
        void refreshFeedback();
      }
      render();
    },
    () => undefined,
  );
  state.poller.start();
  void refreshFeedback();
  render();
}

async function refreshFeedback(): Promise<void> {
  const { api, status } = state;
  if (!api || !status || state.role !== "stakeholder") {
    return;
  }
  if (status.phase === "Round2" || status.phase === "Round3") {
    try {
      state.bundle = await api.feedback();
    } catch {
      state.bundle = null;
    }
    render();
  }
}

// -- wizard screen -----------------------------------------------------------

function renderWizard(root: HTMLElement): void {
  const wizard = state.wizard;
  if (!wizard) {
    return;
  }
  const active = wizard.activeAttributes();
  const step = wizard.currentStep();
  const [i, j] = step.pair;
  const left = state.attributes.find((a) => a.id === active[i]);
  const right = state.attributes.find((a) => a.id === active[j]);
  const section = el("section", "wizard");
  section.append(
    el("h2", "", `Pair ${step.index + 1} of ${step.total}: ${left?.name} vs ${right?.name}`),
  );

  const current = wizard.judgmentFor(step.pair);
  const direction = el("div", "direction");
  const towardLeft = button(
    `${left?.name} is preferred`,
    () => {
      if (current) {
        wizard.setJudgment({ ...current, inverted: false });
        render();
      }
    },
    current && !current.inverted ? "selected" : "",
  );
  const towardRight = button(
    `${right?.name} is preferred`,
    () => {
      if (current) {
        wizard.setJudgment({ ...current, inverted: true });
        render();
      }
    },
    current?.inverted ? "selected" : "",
  );
  direction.append(towardLeft, towardRight);

  const selector = el("div", "scale");
  for (const level of SCALE_LEVELS) {
    const chosen = current?.levelId === level.id;
    selector.append(
      button(
        level.label,
        () => {
          wizard.setJudgment({
            pair: step.pair,
            levelId: level.id,
            inverted: current?.inverted ?? false,
          });
          state.highlights = [];
          render();
        },
        `${level.intermediate ? "intermediate" : "anchor"}${chosen ? " selected" : ""}`,
      ),
    );
  }
  section.append(selector, direction);

  // abstentions: mark an attribute out of the comparison entirely
  const abstain = el("div", "abstain");
  for (const attribute of state.attributes) {
    const marked = wizard
      .abstentions()
      .find((a) => a.attribute_id === attribute.id);
    if (marked) {
      abstain.append(
        button(`${attribute.name}: ${marked.kind} (undo)`, () => {
          wizard.reinstate(attribute.id);
          render();
        }),
      );
    } else {
      abstain.append(
        button(`don't know ${attribute.name}`, () => {
          try {
            wizard.abstain(attribute.id, "dont_know");
          } catch (error) {
            notify(String(error));
          }
          render();
        }),
        button(`don't care ${attribute.name}`, () => {
          try {
            wizard.abstain(attribute.id, "dont_care");
          } catch (error) {
            notify(String(error));
          }
          render();
        }),
      );
    }
  }
  section.append(abstain);

  const preview = wizard.preview();
  section.append(gaugeNode("consistency ratio", {
    value: preview.cr,
    limit: 0.1,
    ok: preview.consistent,
  }, "cr"));

  // review grid with highlight marks on offending pairs
  const grid = el("table", "grid");
  const header = el("tr");
  header.append(el("th"));
  for (const id of active) {
    header.append(el("th", "", id));
  }
  grid.append(header);
  const entries = wizard.rationalEntries();
  const flagged = new Set(
    (state.highlights.length
      ? state.highlights
      : wizard.highlightsFor(preview)
    ).map((h) => `${h.pair[0]}:${h.pair[1]}`),
  );
  for (let r = 0; r < active.length; r++) {
    const row = el("tr");
    row.append(el("th", "", active[r]));
    for (let c = 0; c < active.length; c++) {
      const marked =
        flagged.has(`${Math.min(r, c)}:${Math.max(r, c)}`) && r !== c;
      row.append(
        el("td", marked ? "flagged" : "", formatRational(entries[r][c])),
      );
    }
    grid.append(row);
  }
  section.append(grid);

  for (const highlight of state.highlights) {
    section.append(el("p", "hint", highlight.suggestionLabel));
  }

  const estimate = el("p", "estimate");
  estimate.textContent = wizard
    .priorityEstimate()
    .map((p) => `${p.attributeId} ${(p.value * 100).toFixed(1)}%`)
    .join("  ");
  section.append(estimate);

  section.append(
    button(
      "Submit judgments",
      () => void submitWizard(),
      wizard.complete() && preview.consistent ? "primary" : "primary warn",
    ),
  );
  root.append(section);
}

async function submitWizard(): Promise<void> {
  const { api, wizard } = state;
  if (!api || !wizard) {
    return;
  }
  try {
    const accepted = await api.submit(wizard.matrixDoc(), wizard.abstentions());
    state.highlights = [];
    notify(
      `accepted: CR ${accepted.consistency.cr.toFixed(3)}, priorities ${accepted.priorities.values
        .map((v) => v.toFixed(2))
        .join(" / ")}`,
    );
  } catch (error) {
    if (error instanceof ApiError && error.status === 422 && error.consistency) {
      state.highlights = wizard.highlightsFor(error.consistency);
      notify(
        `rejected: CR ${error.consistency.cr.toFixed(3)} over the 0.10 redline; ` +
          "the conflicting pairs are highlighted",
      );
    } else if (error instanceof ApiError) {
      notify(error.message);
    }
  }
  render();
}

// -- negotiation sections ----------------------------------------------------

function renderRationaleForms(root: HTMLElement, affordances: Affordance[]): void {
  const api = state.api;
  if (!api) {
    return;
  }
  const section = el("section", "rationales");
  if (affordances.includes("answer_prompts")) {
    for (const prompt of state.bundle?.prompts ?? state.status?.prompts ?? []) {
      const box = el("textarea") as HTMLTextAreaElement;
      box.placeholder = prompt;
      section.append(
        el("p", "prompt", prompt),
        box,
        button("Send answer", () =>
          void guard(() =>
            api.postRationale({ kind: "answer", body: box.value, prompt }),
          ).then(() => notify("answer recorded")),
        ),
      );
    }
  }
  if (affordances.includes("post_comment")) {
    const comment = el("textarea") as HTMLTextAreaElement;
    comment.placeholder = "comment for the group (anonymous)";
    section.append(
      comment,
      button("Post comment", () =>
        void guard(() =>
          api.postRationale({ kind: "comment", body: comment.value }),
        ).then(() => notify("comment recorded")),
      ),
    );
  }
  if (affordances.includes("suggest_attribute")) {
    const name = el("input") as HTMLInputElement;
    name.placeholder = "new attribute name";
    const why = el("textarea") as HTMLTextAreaElement;
    why.placeholder = "why it matters";
    section.append(
      name,
      why,
      button("Suggest attribute", () =>
        void guard(() =>
          api.postRationale({
            kind: "attribute_suggestion",
            body: why.value,
            proposed_attribute: {
              id: name.value.toLowerCase().replace(/\s+/g, "-"),
              name: name.value,
            },
          }),
        ).then(() => notify("suggestion queued for the facilitator")),
      ),
    );
  }
  if (affordances.includes("declare_dissent")) {
    const reason = el("textarea") as HTMLTextAreaElement;
    reason.placeholder = "why you remain outside the consensus (required)";
    section.append(
      el("p", "dissent-label", "Remain outside the consensus"),
      reason,
      button("Declare dissent", () =>
        void guard(() =>
          api.postRationale({ kind: "dissent", body: reason.value }),
        ).then(() => notify("dissent recorded; you are done for this session")),
        "warn",
      ),
    );
  }
  if (section.childNodes.length) {
    root.append(section);
  }
}

function renderFeedback(root: HTMLElement): void {
  const bundle = state.bundle;
  if (!bundle) {
    return;
  }
  const section = el("section", "feedback");
  section.append(el("h2", "", "Group feedback"));
  section.append(
    gaugeNode("agreement (W)", {
      value: bundle.concordance.w_coefficient,
      limit: bundle.concordance.threshold,
      ok: bundle.concordance.agreed,
    }, "w"),
  );
  if (bundle.conflicts.length) {
    const list = el("ul", "conflicts");
    for (const conflict of bundle.conflicts) {
      const mine = conflict.requester_prefers !== null;
      const item = el("li", mine ? "own-conflict" : "");
      const side =
        conflict.requester_prefers === "a"
          ? ` (you prefer ${conflict.attribute_a})`
          : conflict.requester_prefers === "b"
            ? ` (you prefer ${conflict.attribute_b})`
            : "";
      item.textContent =
        `${conflict.attribute_a} vs ${conflict.attribute_b}: ` +
        `${conflict.prefers_a.join(", ")} against ${conflict.prefers_b.join(", ")}${side}`;
      list.append(item);
    }
    section.append(el("h3", "", "Conflicting rankings"), list);
  }
  if (bundle.prior_round_rationales.length) {
    const feed = el("ul", "feed");
    for (const rationale of bundle.prior_round_rationales) {
      feed.append(
        el(
          "li",
          `kind-${rationale.kind}`,
          `${rationale.author_pseudonym} (${rationale.kind}) ${rationale.prompt ? `re "${rationale.prompt}": ` : ""}${rationale.body}`,
        ),
      );
    }
    section.append(el("h3", "", "What others said last round"), feed);
  }
  const dist = el("table", "distribution");
  const head = el("tr");
  for (const title of ["attribute", "min", "median", "max"]) {
    head.append(el("th", "", title));
  }
  dist.append(head);
  for (const [attributeId, numbers] of Object.entries(
    bundle.priority_distribution,
  )) {
    const row = el("tr");
    row.append(el("td", "", attributeId));
    if (numbers) {
      row.append(
        el("td", "", numbers.min.toFixed(3)),
        el("td", "", numbers.median.toFixed(3)),
        el("td", "", numbers.max.toFixed(3)),
      );
    } else {
      row.append(el("td", "", "-"), el("td", "", "-"), el("td", "", "-"));
    }
    dist.append(row);
  }
  section.append(el("h3", "", "Where priorities stand (anonymous)"), dist);
  root.append(section);
}

function renderDelegation(root: HTMLElement, affordances: Affordance[]): void {
  const api = state.api;
  if (!api) {
    return;
  }
  const section = el("section", "delegation");
  if (affordances.includes("delegate")) {
    const target = el("input") as HTMLInputElement;
    target.placeholder = "stakeholder id to delegate to";
    section.append(
      target,
      button("Delegate my vote", () =>
        void guard(() => api.delegate(target.value.trim())).then(() =>
          notify("vote delegated"),
        ),
      ),
    );
  }
  if (affordances.includes("revoke_delegation")) {
    section.append(
      button("Take my vote back", () =>
        void guard(() => api.revokeDelegation()).then(() =>
          notify("delegation revoked"),
        ),
      ),
    );
  }
  if (section.childNodes.length) {
    root.append(section);
  }
}

async function renderResult(root: HTMLElement): Promise<void> {
  const api = state.api;
  if (!api) {
    return;
  }
  const section = el("section", "result");
  section.append(el("h2", "", "Final utility function"));
  const expression = await guard(() => api.resultExpression());
  if (expression) {
    section.append(el("pre", "expression", expression));
  }
  const result = await guard(() => api.result());
  if (result) {
    const table = el("table", "weights");
    for (let i = 0; i < result.priorities.attributes.length; i++) {
      const row = el("tr");
      row.append(
        el("td", "", result.priorities.attributes[i]),
        el("td", "", result.priorities.values[i].toFixed(3)),
      );
      table.append(row);
    }
    section.append(table);
    for (const dissent of result.dissents) {
      section.append(
        el("p", "dissent", `${dissent.author_pseudonym} stayed outside: ${dissent.body}`),
      );
    }
  }
  root.append(section);
}

// -- facilitator screen ------------------------------------------------------

function renderFacilitator(root: HTMLElement): void {
  const { api, status } = state;
  if (!api || !status) {
    return;
  }
  const section = el("section", "facilitator");
  section.append(el("h2", "", "Facilitator controls"));
  const table = el("table", "participation");
  const head = el("tr");
  for (const title of ["stakeholder", "pseudonym", "weight", "state"]) {
    head.append(el("th", "", title));
  }
  table.append(head);
  for (const participant of status.participants ?? []) {
    const row = el("tr");
    row.append(
      el("td", "", participant.stakeholder_id),
      el("td", "", participant.pseudonym),
      el("td", "", String(participant.weight)),
      el(
        "td",
        "",
        participant.delegating
          ? "delegating"
          : participant.submitted_this_phase
            ? "submitted"
            : "waiting",
      ),
    );
    table.append(row);
  }
  section.append(table);

  const affordances = facilitatorAffordances(status);
  if (affordances.includes("check_gate")) {
    section.append(
      button("Check agreement gate", () =>
        void guard(() => api.checkGate()).then((report) => {
          if (report) {
            notify(
              `W = ${report.concordance.w_coefficient.toFixed(3)}, ` +
                (report.concordance.agreed ? "agreement reached" : "no agreement"),
            );
          }
        }),
      ),
    );
  }
  if (affordances.includes("advance_round")) {
    section.append(
      button("Advance round", () =>
        void guard(() => api.advance()).then((moved) => {
          if (moved) {
            notify(`session is now in ${moved.phase}`);
          }
        }),
        "primary",
      ),
    );
  }
  section.append(
    button("Review attribute suggestions", () =>
      void guard(() => api.suggestions()).then((queue) => {
        if (queue) {
          notify(
            queue.suggestions.length
              ? queue.suggestions
                  .map((s) => `${s.proposed_attribute?.name}: ${s.body}`)
                  .join(" | ")
              : "no suggestions queued",
          );
        }
      }),
    ),
  );
  root.append(section);
}

// -- top-level render --------------------------------------------------------

function render(): void {
  const root = document.getElementById("app");
  if (!root) {
    return;
  }
  root.textContent = "";
  if (!state.api || !state.status) {
    renderConnect(root);
    return;
  }
  const status = state.status;
  const view = buildRoundView(status, {
    cr: state.wizard ? state.wizard.preview().cr : null,
    bundle: state.bundle,
  });

  const banner = el("header", "banner");
  banner.append(el("h1", "", view.banner));
  banner.append(el("span", "phase-tag", status.phase));
  if (status.pseudonym) {
    banner.append(el("span", "pseudonym", `you are ${status.pseudonym}`));
  }
  if (status.read_only) {
    banner.append(el("span", "warn", "session is read-only pending repair"));
  }
  root.append(banner);

  if (state.notice) {
    root.append(el("p", "notice", state.notice));
  }

  if (state.role === "facilitator") {
    renderFacilitator(root);
    if (status.closed) {
      void renderResult(root);
    }
    return;
  }

  const affordances = view.affordances;
  if (affordances.includes("view_feedback")) {
    renderFeedback(root);
  }
  if (
    affordances.includes("submit_matrix") ||
    affordances.includes("revise_matrix")
  ) {
    renderWizard(root);
  }
  renderRationaleForms(root, affordances);
  renderDelegation(root, affordances);
  if (affordances.includes("view_result")) {
    void renderResult(root);
  }
}

document.addEventListener("DOMContentLoaded", () => render());
