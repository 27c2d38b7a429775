"""Token-level prompt diffing.

Prompts are compared as whitespace-delimited token lists. The edit script
is derived from a longest common subsequence; runs of adjacent edits
collapse into single spans so a word substitution reads as one "replace"
rather than a delete/insert pair.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import _kernels


@dataclass(frozen=True)
class DiffSpan:
    """One edit region. Ranges are half-open token-index intervals."""

    kind: str  # "insert" | "delete" | "replace"
    parent_start: int
    parent_end: int
    child_start: int
    child_end: int


def tokenize(text: str) -> list[str]:
    return text.split()


def diff_prompts(parent_text: str, child_text: str) -> list[DiffSpan]:
    """Minimal token edit script turning ``parent_text`` into ``child_text``."""
    p = tokenize(parent_text)
    c = tokenize(child_text)
    # Anchoring on the common prefix/suffix keeps single-token substitutions
    # contiguous even when the new token also occurs next to the edit.
    pre = 0
    limit = min(len(p), len(c))
    while pre < limit and p[pre] == c[pre]:
        pre += 1
    suf = 0
    while suf < limit - pre and p[len(p) - 1 - suf] == c[len(c) - 1 - suf]:
        suf += 1
    mid_p = p[pre:len(p) - suf]
    mid_c = c[pre:len(c) - suf]

    ids: dict[str, int] = {}
    a = [ids.setdefault(t, len(ids)) for t in mid_p]
    b = [ids.setdefault(t, len(ids)) for t in mid_c]
    pairs = _kernels.lcs_match_pairs(a, b)

    spans: list[DiffSpan] = []
    pi = pj = 0
    for i, j in [*pairs, (len(mid_p), len(mid_c))]:
        if i > pi and j > pj:
            kind = "replace"
        elif i > pi:
            kind = "delete"
        elif j > pj:
            kind = "insert"
        else:
            pi, pj = i + 1, j + 1
            continue
        spans.append(DiffSpan(kind, pre + pi, pre + i, pre + pj, pre + j))
        pi, pj = i + 1, j + 1
    return spans


def apply_spans(parent_tokens: list[str], child_tokens: list[str], spans: list[DiffSpan]) -> list[str]:
    """Splice the spans' child ranges into the parent token list.

    For a sound edit script the result equals ``child_tokens`` exactly.
    """
    out: list[str] = []
    pi = 0
    for s in spans:
        out.extend(parent_tokens[pi:s.parent_start])
        out.extend(child_tokens[s.child_start:s.child_end])
        pi = s.parent_end
    out.extend(parent_tokens[pi:])
    return out


def span_to_dict(span: DiffSpan) -> dict:
    return {
        "kind": span.kind,
        "parent_start": span.parent_start,
        "parent_end": span.parent_end,
        "child_start": span.child_start,
        "child_end": span.child_end,
    }


def span_from_dict(d: dict) -> DiffSpan:
    return DiffSpan(
        kind=d["kind"],
        parent_start=d["parent_start"],
        parent_end=d["parent_end"],
        child_start=d["child_start"],
        child_end=d["child_end"],
    )
