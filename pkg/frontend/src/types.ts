// Mirrors the backend's decision JSON schema; the UI never recomputes any
// of these fields locally.

export type LabelValue = "hate" | "not_hate";

export interface TraceEvent {
  tool: string;
  started_at: number;
  duration: number; // seconds
  outcome: "ok" | "error";
  summary: string;
}

export interface Citation {
  source: string;
  title: string;
  snippet: string;
}

export interface Decision {
  decision_id: string;
  post_id: string;
  label: LabelValue;
  confidence: number;
  explanation: string;
  guideline_citations: Citation[];
  trace: TraceEvent[];
  retries_used: number;
}

export interface FeedbackResponse {
  feedback_id: string;
  post_text: string;
  predicted_label: LabelValue;
  verdict: "confirmed" | "rejected";
  stored_label: LabelValue;
  created_at: string;
}

export interface ApiError {
  error: string;
  detail: string;
}
