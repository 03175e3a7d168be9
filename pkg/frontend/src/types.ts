/** Wire types, mirroring the annotation service's JSON schemas. */

/** Half-open token index range [start, end). */
export type Span = [number, number];

export interface TokenOut {
  index: number;
  word: string;
}

export interface TaskView {
  id: string;
  tree_id: string;
  path: number[];
  kind: "flat-elements" | "conjunct-marking" | "non-NP-modifier-range";
  status: string;
  rendered: string;
  tokens: TokenOut[];
  phrase_span: Span;
  coordinator_spans: Span[];
  suggested_spans: Span[];
}

export interface Mismatch {
  proposed: Span;
  reconciled: Span;
}

export interface SubmitResponse {
  accepted: boolean;
  needs_confirmation: boolean;
  errors: string[];
  mismatches: Mismatch[];
  reconciled_spans: Span[] | null;
}

export interface SubmitRequest {
  annotator: string;
  spans: Span[];
  override_boundary: boolean;
  accept_reconciled: boolean;
}

export interface Progress {
  open: number;
  leased: number;
  submitted: number;
  adjudicated: number;
}

export interface DisagreementAnnotation {
  annotator: string;
  spans: Span[];
  submitted_at: number;
}

export interface DisagreementItem {
  task: TaskView;
  annotations: DisagreementAnnotation[];
}

export interface Disagreements {
  study: string;
  partial: boolean;
  items: DisagreementItem[];
}
