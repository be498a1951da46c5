/**
 * Typed client for the /v1 session API. All calls carry the bearer token;
 * 4xx responses surface as ApiError with the server's detail string, and
 * a 422 submission rejection additionally carries the consistency report
 * so the wizard can highlight the offending judgment triples.
 */

export interface AttributeDoc {
  id: string;
  name: string;
  description: string;
  metric_unit: string;
  direction: string;
}

export interface MatrixDoc {
  attributes: string[];
  entries: [number, number][];
}

export interface ConsistencyDoc {
  lambda_max: number;
  ci: number;
  ri: number;
  cr: number;
  consistent: boolean;
  offending_triples: { i: number; j: number; k: number; deviation: number }[];
}

export interface PrioritiesDoc {
  attributes: string[];
  values: number[];
}

export interface ConcordanceDoc {
  w_coefficient: number;
  s: number;
  rank_sums: number[];
  mean_rank_sum: number;
  agreed: boolean;
  threshold: number;
}

export interface ConflictDoc {
  attribute_a: string;
  attribute_b: string;
  prefers_a: string[];
  prefers_b: string[];
  requester_prefers: "a" | "b" | null;
}

export interface RationaleDoc {
  author_pseudonym: string;
  round: string;
  kind: string;
  body: string;
  prompt: string;
  attribute_ids: string[];
  proposed_attribute?: AttributeDoc;
}

export interface FeedbackBundle {
  phase: string;
  prompts: string[];
  prior_round_rationales: RationaleDoc[];
  concordance: ConcordanceDoc;
  conflicts: ConflictDoc[];
  priority_distribution: Record<
    string,
    { min: number; median: number; max: number } | null
  >;
}

export interface SessionStatus {
  session_id: string;
  phase: string;
  attribute_count: number;
  participant_count: number;
  read_only: boolean;
  closed: boolean;
  pseudonym?: string;
  delegating?: boolean;
  submitted_this_phase?: boolean;
  participants?: {
    stakeholder_id: string;
    pseudonym: string;
    weight: number;
    delegating: boolean;
    submitted_this_phase: boolean;
  }[];
  prompts?: string[];
}

export interface SubmissionAccepted {
  accepted: true;
  round: string;
  priorities: PrioritiesDoc;
  consistency: ConsistencyDoc;
}

export interface ResultDoc {
  priorities: PrioritiesDoc;
  utility: unknown;
  dissents: RationaleDoc[];
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
    readonly consistency?: ConsistencyDoc,
  ) {
    super(detail);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class SessionApi {
  constructor(
    private readonly baseUrl: string,
    private readonly sessionId: string,
    private readonly token: string,
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const response = await this.fetchImpl(
      `${this.baseUrl}/v1/sessions/${this.sessionId}${path}`,
      {
        method,
        headers: {
          Authorization: `Bearer ${this.token}`,
          ...(body !== undefined ? { "Content-Type": "application/json" } : {}),
        },
        body: body !== undefined ? JSON.stringify(body) : undefined,
      },
    );
    const text = await response.text();
    const payload = text ? JSON.parse(text) : {};
    if (!response.ok) {
      throw new ApiError(
        response.status,
        payload.detail ?? `request failed with ${response.status}`,
        payload.consistency,
      );
    }
    return payload as T;
  }

  status(): Promise<SessionStatus> {
    return this.request("GET", "");
  }

  attributes(): Promise<{ attributes: AttributeDoc[] }> {
    return this.request("GET", "/attributes");
  }

  submit(
    matrix: MatrixDoc,
    abstentions: { attribute_id: string; kind: string }[] = [],
  ): Promise<SubmissionAccepted> {
    return this.request("POST", "/submissions", { matrix, abstentions });
  }

  mySubmission(): Promise<{ submitted: boolean } & Partial<SubmissionAccepted>> {
    return this.request("GET", "/submissions/mine");
  }

  postRationale(payload: {
    kind: string;
    body: string;
    prompt?: string;
    attribute_ids?: string[];
    proposed_attribute?: Partial<AttributeDoc>;
  }): Promise<{ acknowledged: boolean }> {
    return this.request("POST", "/rationales", payload);
  }

  feedback(): Promise<FeedbackBundle> {
    return this.request("GET", "/feedback");
  }

  concordance(): Promise<{ phase: string; concordance: ConcordanceDoc }> {
    return this.request("GET", "/concordance");
  }

  delegate(delegateId: string): Promise<{ delegated_to: string }> {
    return this.request("POST", "/delegation", { delegate_id: delegateId });
  }

  revokeDelegation(): Promise<{ revoked: boolean }> {
    return this.request("DELETE", "/delegation");
  }

  checkGate(): Promise<{ phase: string; concordance: ConcordanceDoc }> {
    return this.request("POST", "/gate");
  }

  advance(): Promise<{ phase: string }> {
    return this.request("POST", "/advance");
  }

  result(): Promise<ResultDoc> {
    return this.request("GET", "/result");
  }

  resultExpression(): Promise<string> {
    return this.fetchImpl(
      `${this.baseUrl}/v1/sessions/${this.sessionId}/result?format=human_readable_expression`,
      { headers: { Authorization: `Bearer ${this.token}` } },
    ).then(async (response) => {
      if (!response.ok) {
        throw new ApiError(response.status, await response.text());
      }
      return response.text();
    });
  }

  suggestions(): Promise<{ suggestions: RationaleDoc[] }> {
    return this.request("GET", "/suggestions");
  }
}
