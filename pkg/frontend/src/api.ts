/** Thin typed client for the triage service; the UI's only write path
 * is postLabel, everything else is a read. */

import type { LabelAck, LabelPost, Stats, TaskDetail, TaskPage } from "./model.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    message: string,
    readonly status: number,
  ) {
    super(message);
  }
}

export class TriageApi {
  constructor(
    private readonly fetchFn: FetchLike,
    private readonly base: string = "",
    private readonly token: string = "",
  ) {}

  private headers(json: boolean): Record<string, string> {
    const headers: Record<string, string> = {};
    if (json) headers["Content-Type"] = "application/json";
    if (this.token) headers["X-Auth-Token"] = this.token;
    return headers;
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.base + path, init);
    if (!response.ok) {
      let detail = `HTTP ${response.status}`;
      try {
        const body = (await response.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        // non-JSON error body; keep the status text
      }
      throw new ApiError(detail, response.status);
    }
    return (await response.json()) as T;
  }

  listTasks(status?: "pending" | "done", limit = 500): Promise<TaskPage> {
    const query = status ? `?status=${status}&limit=${limit}` : `?limit=${limit}`;
    return this.request<TaskPage>(`/api/tasks${query}`, { headers: this.headers(false) });
  }

  getTask(taskId: string): Promise<TaskDetail> {
    return this.request<TaskDetail>(`/api/tasks/${encodeURIComponent(taskId)}`, {
      headers: this.headers(false),
    });
  }

  postLabel(label: LabelPost): Promise<LabelAck> {
    return this.request<LabelAck>("/api/labels", {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify(label),
    });
  }

  getStats(): Promise<Stats> {
    return this.request<Stats>("/api/stats", { headers: this.headers(false) });
  }
}
