/**
 * Thin fetch client for the coverage service.
 *
 * Every method returns the parsed response body unchanged. Failures
 * become ApiError carrying the server's own message so the UI can show
 * it inline; nothing is rephrased client-side.
 */

import type {
  AnalyzeRequest,
  AnalyzeResponse,
  CompareRequest,
  CompareResponse,
  FieldError,
  HistResponse,
  Meta,
  SetInfo,
} from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  readonly status: number;
  readonly fields: FieldError[];

  constructor(status: number, message: string, fields: FieldError[] = []) {
    super(message);
    this.name = "ApiError";
    this.status = status;
    this.fields = fields;
  }
}

function isFieldError(value: unknown): value is FieldError {
  return (
    typeof value === "object" &&
    value !== null &&
    typeof (value as FieldError).field === "string" &&
    typeof (value as FieldError).message === "string"
  );
}

// 404/503 send a plain string detail, 400 sends a field list
function describeDetail(status: number, detail: unknown): { message: string; fields: FieldError[] } {
  if (typeof detail === "string" && detail) {
    return { message: detail, fields: [] };
  }
  if (Array.isArray(detail)) {
    const fields = detail.filter(isFieldError);
    const message = fields.map((f) => `${f.field}: ${f.message}`).join("; ");
    if (message) return { message, fields };
  }
  return { message: `request failed (HTTP ${status})`, fields: [] };
}

export class Client {
  constructor(
    private readonly base: string = "",
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: { Accept: "application/json" } };
    if (body !== undefined) {
      init.headers = { ...init.headers, "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const res = await this.fetchFn(this.base + path, init);
    if (!res.ok) {
      let detail: unknown = null;
      try {
        detail = ((await res.json()) as { detail?: unknown }).detail;
      } catch {
        // non-JSON error body; fall through to the generic message
      }
      const { message, fields } = describeDetail(res.status, detail);
      throw new ApiError(res.status, message, fields);
    }
    return (await res.json()) as T;
  }

  sets(): Promise<SetInfo[]> {
    return this.request<SetInfo[]>("GET", "/sets");
  }

  meta(): Promise<Meta> {
    return this.request<Meta>("GET", "/meta");
  }

  analyze(req: AnalyzeRequest): Promise<AnalyzeResponse> {
    return this.request<AnalyzeResponse>("POST", "/analyze", req);
  }

  compare(req: CompareRequest): Promise<CompareResponse> {
    return this.request<CompareResponse>("POST", "/compare", req);
  }

  sviHist(sets: string[]): Promise<HistResponse> {
    return this.request<HistResponse>("POST", "/svi-hist", { sets });
  }
}
