import type { ApiError, Decision, FeedbackResponse } from "./types";

export class BackendError extends Error {
  constructor(
    public status: number,
    public code: string,
    public detail: string,
  ) {
    super(`${code}: ${detail}`);
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private baseUrl: string,
    private fetchFn: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    const body = await response.json();
    if (!response.ok) {
      const err = body as ApiError;
      throw new BackendError(response.status, err.error ?? "unknown", err.detail ?? "");
    }
    return body as T;
  }

  classify(text: string, platform?: string): Promise<Decision> {
    return this.request<Decision>("/api/classify", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(platform ? { text, platform } : { text }),
    });
  }

  sendFeedback(
    decisionId: string,
    postText: string,
    verdict: "confirmed" | "rejected",
  ): Promise<FeedbackResponse> {
    return this.request<FeedbackResponse>("/api/feedback", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ decision_id: decisionId, post_text: postText, verdict }),
    });
  }
}
