/** Per-token label state and its conversion to/from service span payloads.
 *
 * Selections snap to token boundaries and carry exactly one kind per
 * token; a new selection overwrites whatever kind the covered tokens had.
 * Payload spans are the maximal runs of same-kind adjacent tokens,
 * expressed as character offsets, so they satisfy the service's
 * non-overlap validation by construction. */

import { Kind } from "./palette";
import { Token } from "./tokens";

/** token index -> assigned kind */
export type TokenLabels = Map<number, Kind>;

export interface SpanPayload {
  start: number;
  end: number;
  kind: Kind;
}

export function applySelection(
  labels: TokenLabels,
  firstToken: number,
  lastToken: number,
  kind: Kind,
): TokenLabels {
  const next = new Map(labels);
  for (let i = firstToken; i <= lastToken; i++) next.set(i, kind);
  return next;
}

export function clearSelection(
  labels: TokenLabels,
  firstToken: number,
  lastToken: number,
): TokenLabels {
  const next = new Map(labels);
  for (let i = firstToken; i <= lastToken; i++) next.delete(i);
  return next;
}

/** Maximal same-kind token runs, converted to character-offset spans. */
export function toSpans(labels: TokenLabels, tokens: Token[]): SpanPayload[] {
  const spans: SpanPayload[] = [];
  let run: SpanPayload | null = null;
  tokens.forEach((token, i) => {
    const kind = labels.get(i);
    if (kind !== undefined && run !== null && run.kind === kind) {
      run.end = token.end;
      return;
    }
    if (run !== null) spans.push(run);
    run = kind === undefined ? null : { start: token.start, end: token.end, kind };
  });
  if (run !== null) spans.push(run);
  return spans;
}

/** Re-import spans (e.g. from an export) into token labels.  A token
 * belongs to a span when its start offset falls inside the span. */
export function fromSpans(spans: SpanPayload[], tokens: Token[]): TokenLabels {
  const labels: TokenLabels = new Map();
  tokens.forEach((token, i) => {
    for (const span of spans) {
      if (span.start <= token.start && token.start < span.end) {
        labels.set(i, span.kind);
        break;
      }
    }
  });
  return labels;
}
