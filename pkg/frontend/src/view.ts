// DOM rendering for the moderator console. Every view is rebuilt from the
// serialized decision alone; no display state is derived from other state.

import type { ConsoleState, DecisionView } from "./state";
import type { Citation, TraceEvent } from "./types";

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function renderCitations(doc: Document, citations: Citation[]): HTMLElement {
  const container = el(doc, "div", "citations");
  const bySource = new Map<string, Citation[]>();
  for (const citation of citations) {
    const group = bySource.get(citation.source) ?? [];
    group.push(citation);
    bySource.set(citation.source, group);
  }
  for (const [source, group] of bySource) {
    const block = el(doc, "div", "citation-group");
    block.appendChild(el(doc, "h4", "citation-source", source));
    for (const citation of group) {
      const item = el(doc, "div", "citation");
      item.appendChild(el(doc, "strong", "citation-title", citation.title));
      item.appendChild(el(doc, "p", "citation-snippet", citation.snippet));
      block.appendChild(item);
    }
    container.appendChild(block);
  }
  return container;
}

function renderTrace(doc: Document, trace: TraceEvent[]): HTMLElement {
  const details = el(doc, "details", "trace");
  details.appendChild(el(doc, "summary", undefined, `Tool trace (${trace.length})`));
  const list = el(doc, "ul");
  for (const event of trace) {
    const ms = (event.duration * 1000).toFixed(0);
    list.appendChild(
      el(doc, "li", `trace-event trace-${event.outcome}`,
        `${event.tool} — ${ms} ms — ${event.outcome}: ${event.summary}`),
    );
  }
  details.appendChild(list);
  return details;
}

function renderFeedbackControls(
  doc: Document,
  state: ConsoleState,
  view: DecisionView,
): HTMLElement {
  const container = el(doc, "div", "feedback");
  switch (view.feedback.kind) {
    case "answered":
      container.appendChild(
        el(doc, "span", "feedback-stored", `Stored label: ${view.feedback.storedLabel}`),
      );
      return container;
    case "already_recorded":
      container.appendChild(el(doc, "span", "feedback-stored", "already recorded"));
      return container;
    case "error":
      container.appendChild(el(doc, "span", "feedback-error", view.feedback.message));
      return container;
  }
  const confirm = el(doc, "button", "feedback-confirm", "correct");
  const reject = el(doc, "button", "feedback-reject", "incorrect");
  const inFlight = view.feedback.kind === "in_flight";
  confirm.disabled = inFlight;
  reject.disabled = inFlight;
  confirm.addEventListener("click", () => void state.sendFeedback(view, "confirmed"));
  reject.addEventListener("click", () => void state.sendFeedback(view, "rejected"));
  container.appendChild(confirm);
  container.appendChild(reject);
  return container;
}

export function renderDecision(
  doc: Document,
  state: ConsoleState,
  view: DecisionView,
): HTMLElement {
  const card = el(doc, "article", "decision");
  card.appendChild(el(doc, "p", "post-text", view.postText));

  const header = el(doc, "div", "decision-header");
  header.appendChild(
    el(doc, "span", `label-badge label-${view.decision.label}`, view.decision.label),
  );
  header.appendChild(
    el(doc, "span", "confidence", view.decision.confidence.toFixed(2)),
  );
  card.appendChild(header);

  card.appendChild(el(doc, "p", "explanation", view.decision.explanation));
  card.appendChild(renderCitations(doc, view.decision.guideline_citations));
  card.appendChild(renderTrace(doc, view.decision.trace));
  card.appendChild(renderFeedbackControls(doc, state, view));
  return card;
}

export function renderApp(root: HTMLElement, state: ConsoleState): void {
  const doc = root.ownerDocument;
  root.textContent = "";

  const form = el(doc, "form", "submit-form");
  const input = el(doc, "textarea", "post-input");
  input.placeholder = "Paste a post to review";
  input.value = state.draft; // survives error re-renders
  const submit = el(doc, "button", "submit-button", "Analyze");
  submit.type = "submit";
  submit.disabled = !state.canSubmit(state.draft);
  input.addEventListener("input", () => {
    state.draft = input.value;
    submit.disabled = !state.canSubmit(input.value);
  });
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    void state.submitPost(input.value);
  });
  form.appendChild(input);
  form.appendChild(submit);
  root.appendChild(form);

  if (state.classifyInFlight) {
    // the reasoning step dominates latency, so show progress while waiting
    root.appendChild(el(doc, "p", "progress", "Analyzing (reasoning may take a while)…"));
  }
  if (state.lastError) {
    root.appendChild(el(doc, "p", "error-banner", state.lastError));
  }

  const history = el(doc, "section", "history");
  for (const view of state.views) {
    history.appendChild(renderDecision(doc, state, view));
  }
  root.appendChild(history);
}

export function mount(root: HTMLElement, state: ConsoleState): void {
  state.onChange(() => renderApp(root, state));
  renderApp(root, state);
}
