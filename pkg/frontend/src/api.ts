/**
 * Typed client for the session service. Every statistic the console
 * shows comes out of one of these payloads; the client never derives
 * numbers of its own.
 */

export interface GridPointDoc {
  label: string;
  x: number[];
  f: number[];
}

export interface ModelDoc {
  family_link: string;
  grid: GridPointDoc[];
  theta_box: { lower: number[]; upper: number[] };
}

export interface SessionState {
  id: string;
  seq: number;
  phase: string;
  model: ModelDoc;
  labels: string[];
  start_points: number[];
  pending_points: number[];
  n: number;
  n_observed: number;
  theta_hat: number[];
  estimator: Record<string, unknown>;
}

export interface SensitivityTable {
  labels: string[];
  d: number[];
  p: number;
  argmax_index: number;
  kw_gap: number;
}

export interface Suggestion {
  index: number;
  label: string;
  n: number;
  theta_hat: number[];
  suggestion_seq: number;
  sensitivity: SensitivityTable;
}

export interface Estimate {
  seq: number;
  n: number;
  n_observed: number;
  theta_hat: number[];
  se: number[];
  converged: boolean | null;
  /** Per-coordinate flags; null until the estimator has run. */
  at_boundary: boolean[] | null;
  logdet: number;
  lambda_min: number;
  kw_gap: number;
}

export interface TrajectoryRow {
  n: number;
  theta_hat: number[];
  logdet: number;
  lambda_min: number;
  kw_gap: number;
  delta_theta: number | null;
}

export interface History {
  seq: number;
  events: { seq: number; kind: string }[];
  trajectory: TrajectoryRow[];
}

export interface SubmitResult {
  state: SessionState;
  estimate: Estimate;
}

export class ApiError extends Error {
  status: number;
  kind: string;
  detail: string;

  constructor(status: number, kind: string, detail: string) {
    super(`${kind}: ${detail}`);
    this.status = status;
    this.kind = kind;
    this.detail = detail;
  }
}

export class StaleSuggestionError extends ApiError {}
export class UnknownSessionError extends ApiError {}

/** The request never reached the service (or the reply never came back). */
export class NetworkError extends Error {}

function classify(status: number, kind: string, detail: string): ApiError {
  if (status === 404 && kind === "unknown session") {
    return new UnknownSessionError(status, kind, detail);
  }
  if (status === 409 && kind === "stale suggestion") {
    return new StaleSuggestionError(status, kind, detail);
  }
  return new ApiError(status, kind, detail);
}

export class ApiClient {
  base: string;
  sessionId: string;

  constructor(base: string, sessionId: string) {
    this.base = base.replace(/\/+$/, "");
    this.sessionId = sessionId;
  }

  private async request(method: string, path: string, body?: unknown): Promise<unknown> {
    let resp: Response;
    try {
      resp = await fetch(`${this.base}${path}`, {
        method,
        headers: body === undefined ? undefined : { "content-type": "application/json" },
        body: body === undefined ? undefined : JSON.stringify(body),
      });
    } catch (err) {
      throw new NetworkError(String(err));
    }
    if (!resp.ok) {
      let kind = "error";
      let detail = `HTTP ${resp.status}`;
      try {
        const doc = (await resp.json()) as { error?: string; detail?: string };
        if (doc.error) kind = doc.error;
        if (doc.detail) detail = doc.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw classify(resp.status, kind, detail);
    }
    if (resp.status === 204) return null;
    return resp.json();
  }

  state(): Promise<SessionState> {
    return this.request("GET", `/sessions/${this.sessionId}`) as Promise<SessionState>;
  }

  suggest(): Promise<Suggestion> {
    return this.request("GET", `/sessions/${this.sessionId}/suggest`) as Promise<Suggestion>;
  }

  estimate(): Promise<Estimate> {
    return this.request("GET", `/sessions/${this.sessionId}/estimate`) as Promise<Estimate>;
  }

  sensitivity(): Promise<SensitivityTable & { seq: number; n: number }> {
    return this.request("GET", `/sessions/${this.sessionId}/sensitivity`) as Promise<
      SensitivityTable & { seq: number; n: number }
    >;
  }

  history(): Promise<History> {
    return this.request("GET", `/sessions/${this.sessionId}/history`) as Promise<History>;
  }

  submit(index: number, y: number, suggestionSeq: number): Promise<SubmitResult> {
    return this.request("POST", `/sessions/${this.sessionId}/observations`, {
      index,
      y,
      suggestion_seq: suggestionSeq,
    }) as Promise<SubmitResult>;
  }
}
