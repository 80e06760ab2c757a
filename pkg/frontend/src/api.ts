/** Typed client for the adjudication HTTP API (the UI's only backend). */

import type {
  ConflictItemPayload,
  ConflictsResponse,
  ExportResponse,
  FineLabel,
  LabelResponse,
  NextItemResponse,
  ProgressResponse,
  ReviewItemPayload,
  Role,
} from "./types.js";

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

async function readDetail(response: Response): Promise<string> {
  try {
    const body = (await response.json()) as { detail?: unknown };
    if (typeof body.detail === "string") return body.detail;
    return JSON.stringify(body.detail ?? body);
  } catch {
    return `HTTP ${response.status}`;
  }
}

export class AdjudicationApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) {
      throw new ApiError(response.status, await readDetail(response));
    }
    return (await response.json()) as T;
  }

  async nextItem(role: Role, reviewer: string): Promise<ReviewItemPayload | null> {
    const query = `role=${encodeURIComponent(role)}&reviewer=${encodeURIComponent(reviewer)}`;
    const body = await this.request<NextItemResponse>(`/items/next?${query}`);
    return body.item;
  }

  async submitLabel(
    reportId: string,
    reviewer: string,
    role: Role,
    fineLabel: FineLabel,
  ): Promise<LabelResponse> {
    return this.request<LabelResponse>(
      `/items/${encodeURIComponent(reportId)}/label`,
      {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify({
          reviewer_id: reviewer,
          role,
          fine_label: fineLabel,
        }),
      },
    );
  }

  async conflicts(): Promise<ConflictItemPayload[]> {
    const body = await this.request<ConflictsResponse>("/conflicts");
    return body.conflicts;
  }

  async exportGold(): Promise<ExportResponse> {
    return this.request<ExportResponse>("/export");
  }

  async progress(): Promise<ProgressResponse> {
    return this.request<ProgressResponse>("/progress");
  }
}
