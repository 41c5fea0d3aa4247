/**
 * Typed client for the ask-tell HTTP API.
 *
 * Every mutation can carry the record revision for optimistic concurrency;
 * a stale revision surfaces as an ApiRequestError with code "conflict".
 */

export type DesignValue = number | boolean | string;
export type DesignPoint = Record<string, DesignValue>;

export interface ParamRecord {
  name: string;
  type: "num" | "int" | "pow" | "pow_int" | "step_int" | "int_exponent" | "bool" | "cat";
  lb?: number;
  ub?: number;
  base?: number;
  step?: number;
  categories?: string[];
}

export interface StudySummary {
  id: string;
  owner: string;
  created_at: string;
  updated_at: string;
  revision: number;
  state: "initializing" | "running" | "stopped";
  direction: "maximize" | "minimize";
  n_observations: number;
  n_pending: number;
  best: { x: DesignPoint; y: number; mode: string } | null;
}

export interface StudyDetail extends StudySummary {
  space: ParamRecord[];
  config: Record<string, unknown>;
  pending: DesignPoint[];
}

export interface SlateItem {
  x: DesignPoint;
  score: number;
  mean: number;
  std: number;
}

export interface SlateResponse {
  candidates: SlateItem[];
  revision: number;
}

export interface ObservationRow {
  iteration: number;
  x: DesignPoint;
  y: number;
  source: string;
  recorded_at: string;
}

export interface HistoryResponse {
  observations: ObservationRow[];
  revision: number;
}

export interface CurveResponse {
  iterations: number[];
  y: number[];
  best_so_far: number[];
}

export interface ApiErrorBody {
  code: string;
  message: string;
  detail: Record<string, unknown>;
}

export class ApiRequestError extends Error {
  readonly code: string;
  readonly status: number;

  constructor(status: number, body: ApiErrorBody) {
    super(body.message);
    this.code = body.code;
    this.status = status;
  }

  get isConflict(): boolean {
    return this.code === "conflict";
  }
}

async function request<T>(url: string, init?: RequestInit): Promise<T> {
  const resp = await fetch(url, {
    headers: { "content-type": "application/json" },
    ...init,
  });
  if (!resp.ok) {
    let body: ApiErrorBody = { code: "internal", message: resp.statusText, detail: {} };
    try {
      const parsed = (await resp.json()) as { error?: ApiErrorBody };
      if (parsed.error) body = parsed.error;
    } catch {
      // non-JSON error body: keep the status text
    }
    throw new ApiRequestError(resp.status, body);
  }
  return (await resp.json()) as T;
}

export class SeqboClient {
  constructor(readonly baseUrl: string = "") {}

  private url(path: string): string {
    return `${this.baseUrl}${path}`;
  }

  createStudy(
    space: ParamRecord[],
    config: Record<string, unknown> = {},
    owner = "",
  ): Promise<StudyDetail> {
    return request<StudyDetail>(this.url("/studies"), {
      method: "POST",
      body: JSON.stringify({ space, config, owner }),
    });
  }

  listStudies(): Promise<StudySummary[]> {
    return request<StudySummary[]>(this.url("/studies"));
  }

  getStudy(id: string): Promise<StudyDetail> {
    return request<StudyDetail>(this.url(`/studies/${id}`));
  }

  suggest(id: string, q = 1): Promise<{ points: DesignPoint[]; revision: number }> {
    return request(this.url(`/studies/${id}/suggest`), {
      method: "POST",
      body: JSON.stringify({ q }),
    });
  }

  slate(id: string, k = 5): Promise<SlateResponse> {
    return request<SlateResponse>(this.url(`/studies/${id}/slate?k=${k}`));
  }

  observe(
    id: string,
    x: DesignPoint,
    y: number,
    source: "algorithm" | "human-override" | "initialization" = "algorithm",
    revision?: number,
  ): Promise<StudySummary> {
    return request<StudySummary>(this.url(`/studies/${id}/observe`), {
      method: "POST",
      body: JSON.stringify({ x, y, source, revision: revision ?? null }),
    });
  }

  history(id: string): Promise<HistoryResponse> {
    return request<HistoryResponse>(this.url(`/studies/${id}/history`));
  }

  best(id: string, mode: "observed" | "model" = "observed"):
      Promise<{ x: DesignPoint; y: number; mode: string }> {
    return request(this.url(`/studies/${id}/best?mode=${mode}`));
  }

  stop(id: string): Promise<StudySummary> {
    return request<StudySummary>(this.url(`/studies/${id}/stop`), { method: "POST" });
  }

  curve(id: string): Promise<CurveResponse> {
    return request<CurveResponse>(this.url(`/studies/${id}/curve`));
  }
}
