/** DOM controller: one annotator session over the task API. */

import { ApiClient } from "./api.js";
import {
  canSubmit,
  isCoordinatorIndex,
  markSpan,
  nudgeLastSpan,
  spanWords,
} from "./model.js";
import type { Mismatch, Span, TaskView } from "./types.js";

interface SessionState {
  annotator: string;
  task: TaskView | null;
  spans: Span[];
  pendingSpans: Span[] | null; // spans awaiting boundary confirmation
  dragAnchor: number | null;
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document,
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (className) {
    node.className = className;
  }
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

export function mountApp(root: HTMLElement, client: ApiClient): void {
  const doc = root.ownerDocument;
  const state: SessionState = {
    annotator: "",
    task: null,
    spans: [],
    pendingSpans: null,
    dragAnchor: null,
  };

  root.innerHTML = "";
  const header = el(doc, "div", "header");
  const annotatorInput = el(doc, "input", "annotator-input");
  annotatorInput.setAttribute("placeholder", "annotator id");
  const startButton = el(doc, "button", "start", "Start annotating");
  const reviewButton = el(doc, "button", "review", "Review disagreements");
  header.append(annotatorInput, startButton, reviewButton);

  const status = el(doc, "div", "status");
  const kindBadge = el(doc, "div", "kind");
  const sentence = el(doc, "div", "sentence");
  const suggestions = el(doc, "div", "suggestions");
  const selected = el(doc, "div", "selected-spans");
  const warning = el(doc, "div", "warning");
  const errors = el(doc, "div", "errors");
  const submitButton = el(doc, "button", "submit", "Submit");
  submitButton.setAttribute("disabled", "");

  const dialog = el(doc, "div", "confirm-dialog");
  dialog.style.display = "none";
  const dialogText = el(doc, "div", "confirm-text");
  const confirmButton = el(doc, "button", "confirm", "Confirm extension");
  const editButton = el(doc, "button", "keep-editing", "Keep editing");
  dialog.append(dialogText, confirmButton, editButton);

  const progress = el(doc, "div", "progress");
  const review = el(doc, "div", "review-panel");
  review.style.display = "none";

  root.append(header, status, kindBadge, sentence, suggestions, selected,
              warning, errors, submitButton, dialog, progress, review);

  function setWarning(text: string | null): void {
    warning.textContent = text ?? "";
  }

  function applySelection(selection: Span): void {
    const result = markSpan(state.spans, selection);
    state.spans = result.spans;
    setWarning(result.warning);
    renderTask();
  }

  function renderTask(): void {
    const task = state.task;
    sentence.innerHTML = "";
    suggestions.innerHTML = "";
    selected.innerHTML = "";
    if (!task) {
      kindBadge.textContent = "";
      submitButton.setAttribute("disabled", "");
      return;
    }
    kindBadge.textContent = task.kind;
    const [phraseStart, phraseEnd] = task.phrase_span;
    for (const token of task.tokens) {
      if (token.index === phraseStart) {
        sentence.append(el(doc, "span", "boundary open", "("));
      }
      const chip = el(doc, "span", "token", token.word);
      chip.dataset.index = String(token.index);
      if (isCoordinatorIndex(task, token.index)) {
        chip.classList.add("coordinator");
        chip.textContent = `{${token.word}}`;
      }
      if (state.spans.some(([s, e]) => token.index >= s && token.index < e)) {
        chip.classList.add("in-span");
      }
      chip.addEventListener("mousedown", () => {
        state.dragAnchor = token.index;
      });
      chip.addEventListener("mouseup", () => {
        const anchor = state.dragAnchor ?? token.index;
        state.dragAnchor = null;
        const lo = Math.min(anchor, token.index);
        const hi = Math.max(anchor, token.index) + 1;
        applySelection([lo, hi]);
      });
      sentence.append(chip);
      if (token.index === phraseEnd - 1) {
        sentence.append(el(doc, "span", "boundary close", ")"));
      }
    }
    task.suggested_spans.forEach((span, i) => {
      const button = el(
        doc, "button", "suggestion",
        `${i + 1}: ${spanWords(task, span)}`);
      button.dataset.span = JSON.stringify(span);
      button.addEventListener("click", () => applySelection(span));
      suggestions.append(button);
    });
    for (const span of state.spans) {
      const entry = el(doc, "span", "span-entry",
                       `[${span[0]}, ${span[1]}) ${spanWords(task, span)}`);
      entry.dataset.span = JSON.stringify(span);
      selected.append(entry);
    }
    if (canSubmit(task, state.spans)) {
      submitButton.removeAttribute("disabled");
    } else {
      submitButton.setAttribute("disabled", "");
    }
  }

  async function refreshProgress(): Promise<void> {
    try {
      const p = await client.progress();
      progress.textContent =
        `open ${p.open} | leased ${p.leased} | submitted ${p.submitted} | ` +
        `adjudicated ${p.adjudicated}`;
    } catch {
      progress.textContent = "";
    }
  }

  async function leaseNext(): Promise<void> {
    errors.textContent = "";
    setWarning(null);
    state.spans = [];
    state.pendingSpans = null;
    const task = await client.nextTask(state.annotator);
    state.task = task;
    status.textContent = task
      ? `Task ${task.id}`
      : "No open tasks. Well done.";
    renderTask();
    await refreshProgress();
  }

  function showMismatchDialog(mismatches: Mismatch[]): void {
    const task = state.task;
    if (!task) {
      return;
    }
    const lines = mismatches.map(
      (m) =>
        `"${spanWords(task, m.proposed)}" extends to ` +
        `"${spanWords(task, m.reconciled)}" [${m.reconciled[0]}, ${m.reconciled[1]})`,
    );
    dialogText.textContent =
      "Span boundaries were adjusted to the treebank:\n" + lines.join("\n");
    dialog.style.display = "";
  }

  async function submit(acceptReconciled: boolean): Promise<void> {
    const task = state.task;
    if (!task) {
      return;
    }
    const spans = state.pendingSpans ?? state.spans;
    let response;
    try {
      response = await client.submit(task.id, state.annotator, spans, {
        acceptReconciled,
      });
    } catch (err) {
      errors.textContent = `network failure, try again (${String(err)})`;
      return;
    }
    if (response.accepted) {
      dialog.style.display = "none";
      state.pendingSpans = null;
      await leaseNext();
      return;
    }
    if (response.needs_confirmation) {
      state.pendingSpans = spans;
      showMismatchDialog(response.mismatches);
      return;
    }
    errors.textContent = response.errors.join("; ");
  }

  startButton.addEventListener("click", () => {
    state.annotator = annotatorInput.value.trim() || "anonymous";
    void leaseNext();
  });
  submitButton.addEventListener("click", () => void submit(false));
  confirmButton.addEventListener("click", () => void submit(true));
  editButton.addEventListener("click", () => {
    dialog.style.display = "none";
    state.pendingSpans = null;
  });

  doc.addEventListener("keydown", (event) => {
    const task = state.task;
    if (!task || dialog.style.display !== "none") {
      return;
    }
    const key = (event as KeyboardEvent).key;
    if (key >= "1" && key <= "9") {
      const i = Number(key) - 1;
      if (i < task.suggested_spans.length) {
        applySelection(task.suggested_spans[i]);
      }
    } else if (key === "ArrowRight") {
      state.spans = nudgeLastSpan(state.spans, "grow", task.tokens.length
        ? task.tokens[task.tokens.length - 1].index + 1 : 0);
      renderTask();
    } else if (key === "ArrowLeft") {
      state.spans = nudgeLastSpan(state.spans, "shrink", 0);
      renderTask();
    } else if (key === "Enter" && canSubmit(task, state.spans)) {
      void submit(false);
    }
  });

  reviewButton.addEventListener("click", () => {
    void (async () => {
      review.innerHTML = "";
      review.style.display = "";
      let payload;
      try {
        payload = await client.disagreements();
      } catch (err) {
        review.append(el(doc, "div", "review-error",
                         `no agreement study running (${String(err)})`));
        return;
      }
      review.append(el(
        doc, "div", "review-head",
        `study ${payload.study}${payload.partial ? " (incomplete)" : ""}`));
      for (const item of payload.items) {
        const card = el(doc, "div", "review-item");
        card.append(el(doc, "div", "review-sentence", item.task.rendered));
        for (const annotation of item.annotations) {
          const row = el(doc, "div", "review-annotation");
          row.append(el(doc, "span", "review-annotator", annotation.annotator));
          for (const span of annotation.spans) {
            row.append(el(doc, "span", "review-span",
                          `[${span[0]}, ${span[1]}) ${spanWords(item.task, span)}`));
          }
          const pick = el(doc, "button", "adjudicate", "Adopt this reading");
          pick.addEventListener("click", () => {
            void client
              .adjudicate(item.task.id, annotation.annotator, state.annotator)
              .then(() => card.classList.add("adjudicated"));
          });
          row.append(pick);
          card.append(row);
        }
        review.append(card);
      }
    })();
  });
}
