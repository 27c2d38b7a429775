/** Pure span helpers: diff-highlighted token rendering and the mapping
 * between displayed text offsets and template (base-text) offsets. */

import type { DiffSpan, FixedAssignment, Placeholder } from "./types.js";

export interface TextPiece {
  text: string;
  highlight: "insert" | "replace" | null;
  /** char offset of this piece in the full displayed text */
  displayStart: number;
  /** true for a zero-width marker where parent tokens were deleted */
  deletion?: boolean;
}

/** Char ranges of the whitespace-delimited tokens of ``text``. */
export function tokenBoundaries(text: string): Array<{ start: number; end: number }> {
  const out: Array<{ start: number; end: number }> = [];
  for (const match of text.matchAll(/\S+/g)) {
    out.push({ start: match.index!, end: match.index! + match[0].length });
  }
  return out;
}

/**
 * Split a prompt into pieces carrying the diff highlighting for its
 * changed token ranges (child side of the spans). The pieces concatenate
 * back to the original text exactly, whitespace included, so DOM offsets
 * map one-to-one onto the record text.
 */
export function diffPieces(text: string, spans: DiffSpan[]): TextPiece[] {
  const tokens = tokenBoundaries(text);
  const pieces: TextPiece[] = [];
  let cursor = 0;
  const push = (until: number, highlight: TextPiece["highlight"]) => {
    if (until > cursor) {
      pieces.push({ text: text.slice(cursor, until), highlight, displayStart: cursor });
      cursor = until;
    }
  };
  for (const span of spans) {
    if (span.kind === "delete") {
      const at = span.child_start < tokens.length
        ? tokens[span.child_start].start
        : text.length;
      push(at, null);
      pieces.push({ text: "", highlight: null, displayStart: cursor, deletion: true });
      continue;
    }
    push(tokens[span.child_start].start, null);
    push(tokens[span.child_end - 1].end, span.kind);
  }
  push(text.length, null);
  return pieces;
}

interface Segment {
  displayStart: number;
  displayEnd: number;
  baseStart: number;
  baseEnd: number;
  /** substituted segments (fixed values) cannot host a new dimension */
  substituted: boolean;
}

/** Piecewise mapping between the displayed text (fixed assignments
 * substituted) and the immutable base template the API's spans address. */
export function displaySegments(baseText: string, fixed: FixedAssignment[]): Segment[] {
  const sorted = [...fixed].sort((a, b) => a.start - b.start);
  const segments: Segment[] = [];
  let basePos = 0;
  let displayPos = 0;
  for (const f of sorted) {
    if (f.start > basePos) {
      const len = f.start - basePos;
      segments.push({
        displayStart: displayPos,
        displayEnd: displayPos + len,
        baseStart: basePos,
        baseEnd: f.start,
        substituted: false,
      });
      displayPos += len;
    }
    segments.push({
      displayStart: displayPos,
      displayEnd: displayPos + f.value.length,
      baseStart: f.start,
      baseEnd: f.end,
      substituted: true,
    });
    displayPos += f.value.length;
    basePos = f.end;
  }
  if (basePos < baseText.length) {
    segments.push({
      displayStart: displayPos,
      displayEnd: displayPos + (baseText.length - basePos),
      baseStart: basePos,
      baseEnd: baseText.length,
      substituted: false,
    });
  }
  return segments;
}

/**
 * Map a selection in the displayed text to base-template offsets.
 * Returns null when the selection touches a substituted (fixed) segment,
 * since those spans are no longer free.
 */
export function displayToBase(
  baseText: string,
  fixed: FixedAssignment[],
  displayStart: number,
  displayEnd: number,
): { start: number; end: number } | null {
  if (displayEnd <= displayStart) return null;
  for (const seg of displaySegments(baseText, fixed)) {
    if (displayStart >= seg.displayStart && displayEnd <= seg.displayEnd) {
      if (seg.substituted) return null;
      const delta = seg.baseStart - seg.displayStart;
      return { start: displayStart + delta, end: displayEnd + delta };
    }
  }
  return null; // crosses a segment boundary
}

/** True when [start, end) overlaps an existing placeholder or fixed span. */
export function overlapsExisting(
  start: number,
  end: number,
  placeholders: Placeholder[],
  fixed: FixedAssignment[],
): boolean {
  const taken = [
    ...placeholders.map((p) => [p.start, p.end] as const),
    ...fixed.map((f) => [f.start, f.end] as const),
  ];
  return taken.some(([s, e]) => start < e && s < end);
}
