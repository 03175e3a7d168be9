/** Thin client over the annotation service's JSON API. */

import type {
  Disagreements,
  Progress,
  Span,
  SubmitRequest,
  SubmitResponse,
  TaskView,
} from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetchImpl(this.baseUrl + path);
    if (!response.ok) {
      throw new Error(`GET ${path} failed: ${response.status}`);
    }
    return (await response.json()) as T;
  }

  /** Lease the next open task; null when the queue is drained. */
  async nextTask(annotator: string): Promise<TaskView | null> {
    const path = `/api/tasks/next?annotator=${encodeURIComponent(annotator)}`;
    const response = await this.fetchImpl(this.baseUrl + path);
    if (response.status === 204) {
      return null;
    }
    if (!response.ok) {
      throw new Error(`GET ${path} failed: ${response.status}`);
    }
    return (await response.json()) as TaskView;
  }

  async task(id: string): Promise<TaskView> {
    return this.get<TaskView>(`/api/tasks/${encodeURIComponent(id)}`);
  }

  async submit(
    taskId: string,
    annotator: string,
    spans: Span[],
    options: { overrideBoundary?: boolean; acceptReconciled?: boolean } = {},
  ): Promise<SubmitResponse> {
    const body: SubmitRequest = {
      annotator,
      spans,
      override_boundary: options.overrideBoundary ?? false,
      accept_reconciled: options.acceptReconciled ?? false,
    };
    const path = `/api/tasks/${encodeURIComponent(taskId)}/annotation`;
    const response = await this.fetchImpl(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) {
      throw new Error(`POST ${path} failed: ${response.status}`);
    }
    return (await response.json()) as SubmitResponse;
  }

  async progress(): Promise<Progress> {
    return this.get<Progress>("/api/progress");
  }

  async disagreements(study?: string): Promise<Disagreements> {
    const suffix = study ? `?study=${encodeURIComponent(study)}` : "";
    return this.get<Disagreements>(`/api/disagreements${suffix}`);
  }

  async adjudicate(taskId: string, annotator: string, reviewer: string): Promise<void> {
    const path = `/api/tasks/${encodeURIComponent(taskId)}/adjudicate`;
    const response = await this.fetchImpl(this.baseUrl + path, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ annotator, reviewer }),
    });
    if (!response.ok) {
      throw new Error(`POST ${path} failed: ${response.status}`);
    }
  }
}
