// Session state for the moderator console. One classify request in flight
// per tab; feedback is serialized per decision and locks once answered.

import { ApiClient, BackendError } from "./api";
import type { Decision, LabelValue } from "./types";

export type FeedbackState =
  | { kind: "pending" }
  | { kind: "in_flight" }
  | { kind: "answered"; storedLabel: LabelValue }
  | { kind: "already_recorded" }
  | { kind: "error"; message: string };

export interface DecisionView {
  decision: Decision;
  postText: string;
  feedback: FeedbackState;
}

export class ConsoleState {
  views: DecisionView[] = []; // newest first, session-only history
  classifyInFlight = false;
  lastError: string | null = null;
  draft = ""; // current input text, kept here so failed submits preserve it
  private listeners: Array<() => void> = [];

  constructor(private api: ApiClient) {}

  onChange(listener: () => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const listener of this.listeners) listener();
  }

  canSubmit(text: string): boolean {
    return text.trim().length > 0 && !this.classifyInFlight;
  }

  async submitPost(text: string): Promise<void> {
    if (!this.canSubmit(text)) return;
    this.classifyInFlight = true;
    this.lastError = null;
    this.notify();
    try {
      const decision = await this.api.classify(text.trim());
      this.views.unshift({ decision, postText: text.trim(), feedback: { kind: "pending" } });
      this.draft = "";
    } catch (err) {
      this.lastError = describeError(err);
    } finally {
      this.classifyInFlight = false;
      this.notify();
    }
  }

  async sendFeedback(view: DecisionView, verdict: "confirmed" | "rejected"): Promise<void> {
    // lock: only a pending view may send, and only once
    if (view.feedback.kind !== "pending") return;
    view.feedback = { kind: "in_flight" };
    this.notify();
    try {
      const record = await this.api.sendFeedback(
        view.decision.decision_id,
        view.postText,
        verdict,
      );
      // stored label always comes from the server; never flipped locally
      view.feedback = { kind: "answered", storedLabel: record.stored_label };
    } catch (err) {
      if (err instanceof BackendError && err.status === 409) {
        view.feedback = { kind: "already_recorded" };
      } else {
        // network or server failure: re-enable the buttons
        view.feedback = { kind: "pending" };
        this.lastError = describeError(err);
      }
    }
    this.notify();
  }
}

export function describeError(err: unknown): string {
  if (err instanceof BackendError) {
    return err.detail ? `${err.code}: ${err.detail}` : err.code;
  }
  return err instanceof Error ? err.message : String(err);
}
