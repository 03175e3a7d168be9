/** Pure selection-state logic, kept apart from the DOM for testability. */

import type { Span, TaskView } from "./types.js";

export interface MarkResult {
  spans: Span[];
  /** Set when the selection straddles an existing span boundary. */
  warning: string | null;
}

function overlaps(a: Span, b: Span): boolean {
  return a[0] < b[1] && b[0] < a[1];
}

function contains(outer: Span, inner: Span): boolean {
  return outer[0] <= inner[0] && inner[1] <= outer[1];
}

function sorted(spans: Span[]): Span[] {
  return [...spans].sort((a, b) => a[0] - b[0] || a[1] - b[1]);
}

/**
 * Apply a token-range selection to the current span list.
 *
 * Selecting an existing span again deselects it; a selection that covers
 * existing spans replaces them; a selection that crosses a span boundary
 * without covering the span is rejected with a warning.
 */
export function markSpan(spans: Span[], selection: Span): MarkResult {
  if (selection[0] >= selection[1]) {
    return { spans, warning: "empty selection" };
  }
  const same = spans.find((s) => s[0] === selection[0] && s[1] === selection[1]);
  if (same) {
    return { spans: spans.filter((s) => s !== same), warning: null };
  }
  const touched = spans.filter((s) => overlaps(s, selection));
  const crossing = touched.filter((s) => !contains(selection, s));
  if (crossing.length > 0) {
    const [a, b] = crossing[0];
    return { spans, warning: `selection crosses the span [${a}, ${b})` };
  }
  const kept = spans.filter((s) => !overlaps(s, selection));
  return { spans: sorted([...kept, selection]), warning: null };
}

/** Grow or shrink the most recent span by one token (keyboard arrows). */
export function nudgeLastSpan(
  spans: Span[],
  direction: "grow" | "shrink",
  limit: number,
): Span[] {
  if (spans.length === 0) {
    return spans;
  }
  const last = spans[spans.length - 1];
  const end = direction === "grow" ? last[1] + 1 : last[1] - 1;
  if (end <= last[0] || end > limit) {
    return spans;
  }
  const next: Span = [last[0], end];
  const rest = spans.slice(0, -1);
  if (rest.some((s) => overlaps(s, next))) {
    return spans;
  }
  return [...rest, next];
}

/** Minimum span count before submission unlocks, by task kind. */
export function requiredSpans(kind: TaskView["kind"]): number {
  switch (kind) {
    case "non-NP-modifier-range":
      return 1;
    case "flat-elements":
      return 3; // two elements plus the braced coordinator
    default:
      return 2;
  }
}

export function canSubmit(task: TaskView, spans: Span[]): boolean {
  return spans.length >= requiredSpans(task.kind);
}

/** Tokens of the sentence that fall inside a span, for display. */
export function spanWords(task: TaskView, span: Span): string {
  return task.tokens
    .filter((t) => t.index >= span[0] && t.index < span[1])
    .map((t) => t.word)
    .join(" ");
}

export function isCoordinatorIndex(task: TaskView, index: number): boolean {
  return task.coordinator_spans.some(([s, e]) => index >= s && index < e);
}
