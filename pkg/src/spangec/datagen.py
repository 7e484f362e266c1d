"""Training-data generation for the detector and the corrector.

Three flavours of instances come out of a parallel (source, target) pair:

* detector instances: per-token 0/1 tags marking edited spans;
* gold corrector instances: the true edit spans with their replacements;
* sampled corrector instances: random spans with geometric lengths under a
  coverage budget, each paired with its target-side projection, so the
  corrector also learns to copy text the detector flagged by mistake.

A separate corruption routine fabricates noisy sources from clean text.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .alignment import (
    INSERT,
    MATCH,
    SUBST,
    AlignmentPath,
    EditSpan,
    TokenSeq,
    align,
    extract_edits,
)
from .annotation import AnnotatedSentence, CorrectionOutput, annotate


@dataclass(frozen=True)
class EsdInstance:
    """A tagged sentence: tags[i] is 1 iff token i lies in an edited span."""

    tokens: TokenSeq
    tags: tuple[int, ...]

    def __post_init__(self):
        if len(self.tokens) != len(self.tags):
            raise ValueError("tokens and tags must have equal length")


@dataclass(frozen=True)
class EscInstance:
    """An annotated sentence plus the gold replacements for its spans."""

    annotated: AnnotatedSentence
    correction: CorrectionOutput


@dataclass(frozen=True)
class SpanSampleConfig:
    """Random-span sampling knobs (geometric lengths, coverage budget)."""

    geometric_p: float = 0.2
    max_span_len: int = 10
    coverage_budget: float = 0.15

    def __post_init__(self):
        if not (0 < self.geometric_p <= 1):
            raise ValueError("geometric_p must be in (0, 1]")
        if self.max_span_len < 1:
            raise ValueError("max_span_len must be >= 1")
        if not (0 <= self.coverage_budget < 1):
            raise ValueError("coverage_budget must be in [0, 1)")


@dataclass(frozen=True)
class CorruptConfig:
    """Per-token corruption probabilities and the vocabulary to draw from."""

    p_insert: float = 0.0
    p_delete: float = 0.0
    p_replace: float = 0.0
    p_swap: float = 0.0
    vocab: tuple[str, ...] = field(default_factory=tuple)
    seed: int = 0

    def __post_init__(self):
        for name in ("p_insert", "p_delete", "p_replace", "p_swap"):
            p = getattr(self, name)
            if not (0 <= p <= 1):
                raise ValueError(f"{name} must be in [0, 1]")
        total = self.p_insert + self.p_delete + self.p_replace + self.p_swap
        if total > 1 + 1e-12:
            raise ValueError("corruption probabilities must sum to at most 1")
        if (self.p_insert > 0 or self.p_replace > 0) and not self.vocab:
            raise ValueError("insert/replace corruption needs a non-empty vocab")


def gold_spans(source: Sequence[str], target: Sequence[str]) -> list[EditSpan]:
    return extract_edits(align(source, target))


def make_esd_instance(source: Sequence[str], target: Sequence[str]) -> EsdInstance:
    """Tag source tokens: 1 inside any gold edit span, 0 elsewhere."""
    src = tuple(source)
    tags = [0] * len(src)
    for span in gold_spans(src, tuple(target)):
        for i in range(span.src_start, span.src_end):
            tags[i] = 1
    return EsdInstance(tokens=src, tags=tuple(tags))


def project_replacement(path: AlignmentPath, span: EditSpan) -> TokenSeq:
    """Target-side projection of a source span under an alignment path.

    Collects, in path order, the target tokens of MATCH/SUBST ops whose
    source index falls in the span, plus INSERT ops whose insertion point
    belongs to the span: an insert between tokens p-1 and p goes with the
    span containing p-1 (insertions at position 0 go with a span starting
    at 0). A span containing no edits therefore projects to itself.
    """
    out: list[str] = []
    point = 0
    for op in path.ops:
        if op.kind == INSERT:
            anchor = point - 1 if point > 0 else 0
            if span.src_start <= anchor < span.src_end:
                out.append(path.target[op.tgt_index])
            continue
        if op.src_index is not None:
            point = op.src_index + 1
        if op.kind in (MATCH, SUBST) and span.src_start <= op.src_index < span.src_end:
            out.append(path.target[op.tgt_index])
    return tuple(out)


def make_esc_from_spans(
    source: Sequence[str],
    target: Sequence[str],
    spans: Sequence[EditSpan],
    path: Optional[AlignmentPath] = None,
) -> EscInstance:
    """Build a corrector instance for the given spans with projected replacements."""
    if path is None:
        path = align(source, target)
    annotated = annotate(source, spans)
    segments = tuple(
        (k, project_replacement(path, span)) for k, span in enumerate(spans, start=1)
    )
    return EscInstance(annotated=annotated, correction=CorrectionOutput(segments))


def make_esc_gold(source: Sequence[str], target: Sequence[str]) -> EscInstance:
    """Corrector instance over the gold edit spans."""
    path = align(source, target)
    return make_esc_from_spans(source, target, extract_edits(path), path=path)


def sample_spans(
    tokens: Sequence[str], cfg: SpanSampleConfig, rng: random.Random
) -> list[EditSpan]:
    """Draw non-overlapping random spans until the coverage budget is met.

    Lengths are geometric(geometric_p) clipped to max_span_len, starts are
    uniform; overlapping draws are rejected, and sampling stops after the
    budget is reached or 50 rejections. Deterministic given the rng state.
    Spans carry no replacement.
    """
    n = len(tokens)
    if n < 1:
        raise ValueError("cannot sample spans from an empty sentence")
    target_cover = cfg.coverage_budget * n
    occupied = [False] * n
    covered = 0
    rejections = 0
    spans: list[EditSpan] = []
    while covered < target_cover and rejections < 50:
        length = 1
        while length < cfg.max_span_len and rng.random() >= cfg.geometric_p:
            length += 1
        length = min(length, n)
        start = rng.randrange(0, n - length + 1)
        if any(occupied[start : start + length]):
            rejections += 1
            continue
        for i in range(start, start + length):
            occupied[i] = True
        covered += length
        spans.append(EditSpan(start, start + length))
    spans.sort(key=lambda s: s.src_start)
    return spans


def make_esc_sampled(
    source: Sequence[str],
    target: Sequence[str],
    cfg: SpanSampleConfig,
    rng: random.Random,
) -> EscInstance:
    """Corrector instance over randomly sampled spans (robustness training)."""
    path = align(source, target)
    spans = sample_spans(source, cfg, rng)
    return make_esc_from_spans(source, target, spans, path=path)


def corrupt(
    sentence: Sequence[str], cfg: CorruptConfig, rng: random.Random
) -> TokenSeq:
    """Randomly insert, delete, replace and swap adjacent tokens.

    One categorical draw per token picks at most one operation; a swap at
    the last position is skipped. Deterministic given the rng state.
    """
    if len(sentence) < 1:
        raise ValueError("cannot corrupt an empty sentence")
    out: list[str] = []
    tokens = list(sentence)
    i = 0
    t_ins = cfg.p_insert
    t_del = t_ins + cfg.p_delete
    t_rep = t_del + cfg.p_replace
    t_swp = t_rep + cfg.p_swap
    while i < len(tokens):
        u = rng.random()
        if u < t_ins:
            out.append(tokens[i])
            out.append(rng.choice(cfg.vocab))
        elif u < t_del:
            pass
        elif u < t_rep:
            out.append(rng.choice(cfg.vocab))
        elif u < t_swp and i + 1 < len(tokens):
            out.append(tokens[i + 1])
            out.append(tokens[i])
            i += 2
            continue
        else:
            out.append(tokens[i])
        i += 1
    return tuple(out)


def sentence_rng(seed: int, index: int) -> random.Random:
    """Per-sentence RNG so corpus generation parallelizes deterministically."""
    return random.Random(seed ^ index)
