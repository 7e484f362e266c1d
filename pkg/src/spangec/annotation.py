"""Numbered span markers: rendering, parsing and merging corrections back.

An annotated sentence looks like

    The law 's spirit <s1> also include the fairness . </s1>

and a corrector answers with marker-wrapped replacements only, e.g.

    <s1> also includes fairness . </s1>

Markers <s1>..</s64> are reserved tokens; text containing them literally is
rejected at ingestion so parsing is unambiguous.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Optional, Sequence

from .alignment import EditSpan, TokenSeq, detokenize, tokenize, validate_spans
from .errors import (
    MalformedMarkersError,
    MissingSpanError,
    OverlapError,
    ReservedTokenError,
)

MAX_SPANS = 64

_OPEN_RE = re.compile(r"^<s([1-9][0-9]?)>$")
_CLOSE_RE = re.compile(r"^</s([1-9][0-9]?)>$")


def open_marker(k: int) -> str:
    return f"<s{k}>"


def close_marker(k: int) -> str:
    return f"</s{k}>"


def _marker_number(token: str) -> tuple[Optional[int], bool]:
    """Return (span number, is_close) or (None, False) for a normal token."""
    m = _OPEN_RE.match(token)
    if m and int(m.group(1)) <= MAX_SPANS:
        return int(m.group(1)), False
    m = _CLOSE_RE.match(token)
    if m and int(m.group(1)) <= MAX_SPANS:
        return int(m.group(1)), True
    return None, False


def check_no_reserved(tokens: Sequence[str]) -> None:
    """Reject text that uses a reserved marker token literally."""
    for tok in tokens:
        num, _ = _marker_number(tok)
        if num is not None:
            raise ReservedTokenError(f"token {tok!r} is a reserved span marker")


@dataclass(frozen=True)
class AnnotatedSentence:
    """Source tokens plus spans, with the marker-bearing rendering."""

    source: TokenSeq
    spans: tuple[EditSpan, ...]
    rendered: TokenSeq


@dataclass(frozen=True)
class CorrectionOutput:
    """Ordered (span number, replacement tokens) segments."""

    segments: tuple[tuple[int, TokenSeq], ...]


def annotate(source: Sequence[str], spans: Sequence[EditSpan]) -> AnnotatedSentence:
    """Insert open/close marker tokens around each span, K numbered from 1."""
    src = tuple(source)
    check_no_reserved(src)
    try:
        validate_spans(spans, len(src))
    except OverlapError:
        raise
    if len(spans) > MAX_SPANS:
        raise OverlapError(f"at most {MAX_SPANS} spans per sentence")
    rendered: list[str] = []
    cursor = 0
    for k, span in enumerate(spans, start=1):
        rendered.extend(src[cursor : span.src_start])
        rendered.append(open_marker(k))
        rendered.extend(src[span.src_start : span.src_end])
        rendered.append(close_marker(k))
        cursor = span.src_end
    rendered.extend(src[cursor:])
    return AnnotatedSentence(source=src, spans=tuple(spans), rendered=tuple(rendered))


def parse_annotation(rendered: Sequence[str]) -> AnnotatedSentence:
    """Inverse of annotate: recover source tokens and span ranges.

    Markers must be non-nested, balanced and numbered 1..n left to right.
    """
    source: list[str] = []
    spans: list[EditSpan] = []
    open_num: Optional[int] = None
    span_start = 0
    expected = 1
    for tok in rendered:
        num, is_close = _marker_number(tok)
        if num is None:
            source.append(tok)
            continue
        if not is_close:
            if open_num is not None:
                raise MalformedMarkersError(f"nested marker {tok!r}")
            if num != expected:
                raise MalformedMarkersError(
                    f"expected marker <s{expected}>, found {tok!r}"
                )
            open_num = num
            span_start = len(source)
        else:
            if open_num != num:
                raise MalformedMarkersError(f"unbalanced close marker {tok!r}")
            if len(source) == span_start:
                raise MalformedMarkersError(f"empty span {num}")
            spans.append(EditSpan(span_start, len(source)))
            open_num = None
            expected = num + 1
    if open_num is not None:
        raise MalformedMarkersError(f"marker <s{open_num}> never closed")
    return AnnotatedSentence(
        source=tuple(source), spans=tuple(spans), rendered=tuple(rendered)
    )


def parse_correction(output_tokens: Sequence[str]) -> CorrectionOutput:
    """Extract marker-wrapped segments from a corrector's raw token output.

    Text outside any marker pair is ignored (a learned model may emit noise).
    A duplicated span number keeps its first occurrence.
    """
    segments: dict[int, TokenSeq] = {}
    open_num: Optional[int] = None
    buffer: list[str] = []
    for tok in output_tokens:
        num, is_close = _marker_number(tok)
        if num is None:
            if open_num is not None:
                buffer.append(tok)
            continue
        if not is_close:
            if open_num is not None:
                raise MalformedMarkersError(f"nested marker {tok!r}")
            open_num = num
            buffer = []
        else:
            if open_num != num:
                raise MalformedMarkersError(f"unbalanced close marker {tok!r}")
            segments.setdefault(num, tuple(buffer))
            open_num = None
    if open_num is not None:
        raise MalformedMarkersError(f"marker <s{open_num}> never closed")
    ordered = tuple(sorted(segments.items()))
    return CorrectionOutput(segments=ordered)


def render_correction(corr: CorrectionOutput) -> TokenSeq:
    """Serialize a correction back to its marker-wrapped token form."""
    out: list[str] = []
    for k, repl in corr.segments:
        out.append(open_marker(k))
        out.extend(repl)
        out.append(close_marker(k))
    return tuple(out)


def merge_corrections(
    annotated: AnnotatedSentence,
    corr: CorrectionOutput,
    missing: str = "copy",
) -> TokenSeq:
    """Substitute each span's tokens by its correction segment.

    missing="copy" leaves a span without a segment unchanged (no-op
    correction); missing="error" raises MissingSpanError instead.
    """
    if missing not in ("copy", "error"):
        raise ValueError("missing policy must be 'copy' or 'error'")
    by_number = dict(corr.segments)
    out: list[str] = []
    cursor = 0
    for k, span in enumerate(annotated.spans, start=1):
        out.extend(annotated.source[cursor : span.src_start])
        if k in by_number:
            out.extend(by_number[k])
        elif missing == "copy":
            out.extend(annotated.source[span.src_start : span.src_end])
        else:
            raise MissingSpanError(k)
        cursor = span.src_end
    out.extend(annotated.source[cursor:])
    return tuple(out)


def to_json_record(
    annotated: AnnotatedSentence, correction: Optional[CorrectionOutput] = None
) -> str:
    """One JSONL record: {"source", "rendered", "spans", "correction"}."""
    record = {
        "source": detokenize(annotated.source),
        "rendered": detokenize(annotated.rendered),
        "spans": [[s.src_start, s.src_end] for s in annotated.spans],
        "correction": (
            detokenize(render_correction(correction)) if correction is not None else None
        ),
    }
    return json.dumps(record, ensure_ascii=False)


def from_json_record(line: str) -> tuple[AnnotatedSentence, Optional[CorrectionOutput]]:
    record = json.loads(line)
    annotated = parse_annotation(tokenize(record["rendered"]))
    correction = None
    if record.get("correction") is not None:
        correction = parse_correction(tokenize(record["correction"]))
    return annotated, correction
