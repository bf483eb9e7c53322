"""Free-text suggestions to constraints.

A small template bank (templates.json, editable without touching code) pairs
each constraint variant with one or more utterance patterns.  Parsing is
deliberately transparent: extract entities (tactic references, feature names,
ranges, counts, directions), then score every template by keyword overlap and
input coverage, and build the constraint from the best template above a fixed
threshold.  No statistical model, so behaviour is reproducible and the bank
can be audited line by line.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from statistics import median
from typing import Optional

from .constraints import (
    Constraint,
    DeleteTactic,
    ExpandTactic,
    FeatureImportance,
    IndexRange,
    LengthRange,
    MergeTactics,
    SpecifyFeature,
    SplitByFeature,
    TrimTactic,
)

# Weighting of the two score components.  Keywords dominate so that a short
# command ("merge tactic 1 and tactic 2") is not penalized for its brevity;
# coverage breaks ties toward templates that explain more of the input.
KEYWORD_WEIGHT = 0.6
COVERAGE_WEIGHT = 0.4

# Importance magnitude attached to "pay attention to" style suggestions.
# The sign comes from the template; the user never states a number.
IMPORTANCE_STEP = 0.5


class ParseError(Exception):
    """Raised when an utterance cannot be turned into a constraint.

    code is UNPARSED when no template clears the threshold (nearest holds up
    to three canonical utterances to echo back), VALIDATION when the text
    references a tactic or feature the session does not have.
    """

    def __init__(self, message: str, *, code: str = "UNPARSED", nearest: tuple[str, ...] = ()):
        super().__init__(message)
        self.message = message
        self.code = code
        self.nearest = nearest


@dataclass(frozen=True)
class SuggestionContext:
    """What the parser knows about the session it is parsing for."""

    tactic_ids: tuple[int, ...] = ()
    feature_names: tuple[str, ...] = ()
    selected_ids: tuple[int, ...] = ()
    typical_length: int = 2
    serve_window: int = 4


@dataclass(frozen=True)
class ParsedSuggestion:
    constraint: Constraint
    confidence: float
    raw_text: str
    template: str
    slot_spans: dict[str, tuple[tuple[int, int], ...]] = field(default_factory=dict)


@dataclass(frozen=True)
class Template:
    variant: str
    pattern: str
    canonical: str
    slots: tuple[str, ...]
    params: dict
    keywords: frozenset[str]


@dataclass(frozen=True)
class TemplateBank:
    templates: tuple[Template, ...]
    synonyms: dict[str, str]
    stopwords: frozenset[str]
    directions: dict[str, frozenset[str]]
    threshold: float


_BANK_CACHE: dict[tuple[str, float], TemplateBank] = {}


def _normalize(word: str, synonyms: dict[str, str]) -> str:
    return synonyms.get(word, word)


def _pattern_keywords(pattern: str, synonyms: dict[str, str], stopwords: frozenset[str]) -> frozenset[str]:
    words = re.findall(r"[a-z]+", re.sub(r"\{[A-Z_]+\}", " ", pattern).lower())
    return frozenset(_normalize(w, synonyms) for w in words if w not in stopwords)


def load_bank(path: Optional[str] = None) -> TemplateBank:
    """Load the template bank, re-reading the file when it changes on disk."""
    if path is None:
        source = resources.files("tacmine").joinpath("templates.json")
        file_path = Path(str(source))
    else:
        file_path = Path(path)
    key = (str(file_path), file_path.stat().st_mtime)
    cached = _BANK_CACHE.get(key)
    if cached is not None:
        return cached
    doc = json.loads(file_path.read_text())
    synonyms = dict(doc.get("synonyms", {}))
    stopwords = frozenset(doc.get("stopwords", ()))
    directions = {
        name: frozenset(words) for name, words in doc.get("directions", {}).items()
    }
    templates = tuple(
        Template(
            variant=t["variant"],
            pattern=t["pattern"],
            canonical=t["canonical"],
            slots=tuple(t.get("slots", ())),
            params=dict(t.get("params", {})),
            keywords=_pattern_keywords(t["pattern"], synonyms, stopwords),
        )
        for t in doc["templates"]
    )
    bank = TemplateBank(templates, synonyms, stopwords, directions, float(doc.get("threshold", 0.6)))
    _BANK_CACHE.clear()
    _BANK_CACHE[key] = bank
    return bank


# ---------------------------------------------------------------------------
# Entity extraction


@dataclass
class _Span:
    start: int
    end: int


@dataclass
class _Entities:
    tactic_ids: list[int] = field(default_factory=list)
    tactic_spans: list[tuple[int, int]] = field(default_factory=list)
    features: list[int] = field(default_factory=list)
    feature_spans: list[tuple[int, int]] = field(default_factory=list)
    index_range: Optional[tuple[int, int]] = None
    index_span: Optional[tuple[int, int]] = None
    length_range: Optional[tuple[int, Optional[int]]] = None
    length_span: Optional[tuple[int, int]] = None
    serving_span: Optional[tuple[int, int]] = None
    direction: Optional[str] = None
    direction_span: Optional[tuple[int, int]] = None
    ints: list[int] = field(default_factory=list)
    int_spans: list[tuple[int, int]] = field(default_factory=list)

    reserved: list[tuple[int, int]] = field(default_factory=list)

    def reserve(self, start: int, end: int) -> bool:
        for lo, hi in self.reserved:
            if start < hi and lo < end:
                return False
        self.reserved.append((start, end))
        return True


_TACTIC_REF = re.compile(
    r"\btactics?\s+((?:#?\d+)(?:\s*(?:,|and|&|\+)\s*(?:tactics?\s+)?#?\d+)*)"
)
_SELECTED_REF = re.compile(
    r"\b(?:the\s+)?(?:currently\s+)?(?:selected|highlighted|chosen)(?:\s+tactics?)?\b"
    r"|\bthis\s+tactic\b|\bthese\s+tactics?\b"
)
_SERVING = re.compile(r"\b(?:serving|serves?|service)\b")

_INDEX_PATTERNS = (
    re.compile(
        r"\bstart(?:ing|s|ed)?\s+(?:between\s+)?hit\s+(\d+)\s+(?:and|to|through|-)\s*(?:hit\s+)?(\d+)"
    ),
    re.compile(r"\bbetween\s+hit\s+(\d+)\s+and\s+(?:hit\s+)?(\d+)"),
    re.compile(r"\bbetween\s+(?:the\s+)?(\d+)(?:st|nd|rd|th)?\s+and\s+(?:the\s+)?(\d+)(?:st|nd|rd|th)?\s+hits?"),
    re.compile(r"\bstart(?:ing|s|ed)?\s+(?:at|from|with)\s+hit\s+(\d+)(?:\s+(?:to|through|until)\s+(?:hit\s+)?(\d+))?"),
    re.compile(r"\bhits?\s+(\d+)\s*(?:-|to|through)\s*(\d+)"),
)
_INDEX_FIRST_N = re.compile(
    r"\b(?:within|in|during)\s+the\s+first\s+(\d+)\s+(?:hits?|shots?|strokes?|events?|steps?)"
)

_LENGTH_PATTERNS: tuple[tuple[re.Pattern, str], ...] = (
    (re.compile(r"\bat\s+least\s+(\d+)\s+(?:hits?|shots?|strokes?|events?|steps?)"), "min"),
    (re.compile(r"\b(\d+)\s+or\s+more\s+(?:hits?|shots?|strokes?|events?|steps?)"), "min"),
    (re.compile(r"\b(?:longer|deeper)\s+than\s+(\d+)\s+(?:hits?|shots?|strokes?|events?|steps?)"), "gt"),
    (re.compile(r"\bat\s+most\s+(\d+)\s+(?:hits?|shots?|strokes?|events?|steps?)"), "max"),
    (re.compile(r"\b(\d+)\s+or\s+fewer\s+(?:hits?|shots?|strokes?|events?|steps?)"), "max"),
    (re.compile(r"\bshorter\s+than\s+(\d+)\s+(?:hits?|shots?|strokes?|events?|steps?)"), "lt"),
    (re.compile(r"\bexactly\s+(\d+)\s+(?:hits?|shots?|strokes?|events?|steps?)"), "eq"),
    (re.compile(r"\bbetween\s+(\d+)\s+and\s+(\d+)\s+(?:hits?|shots?|strokes?|events?|steps?)\s+long"), "pair"),
    (re.compile(r"\b(\d+)\s+to\s+(\d+)\s+(?:hits?|shots?|strokes?|events?|steps?)\s+long"), "pair"),
)

_NUMBER = re.compile(r"\b\d+\b")
_TOKEN = re.compile(r"[a-z0-9]+")


def _feature_tokens(name: str) -> tuple[str, ...]:
    return tuple(re.findall(r"[a-z0-9]+", name.lower()))


def _extract(text: str, context: SuggestionContext, bank: TemplateBank) -> _Entities:
    ents = _Entities()

    for m in _TACTIC_REF.finditer(text):
        if not ents.reserve(m.start(), m.end()):
            continue
        ids = [int(x) for x in re.findall(r"\d+", m.group(1))]
        for tid in ids:
            if context.tactic_ids and tid not in context.tactic_ids:
                raise ParseError(f"unknown tactic reference: tactic {tid}", code="VALIDATION")
        ents.tactic_ids.extend(ids)
        ents.tactic_spans.append((m.start(), m.end()))

    for m in _SELECTED_REF.finditer(text):
        if not ents.reserve(m.start(), m.end()):
            continue
        if not context.selected_ids:
            raise ParseError(
                "the suggestion refers to a selection but no tactics are selected",
                code="VALIDATION",
            )
        for tid in context.selected_ids:
            if tid not in ents.tactic_ids:
                ents.tactic_ids.append(tid)
        ents.tactic_spans.append((m.start(), m.end()))

    m = _SERVING.search(text)
    if m is not None and ents.reserve(m.start(), m.end()):
        ents.serving_span = (m.start(), m.end())

    for pat in _INDEX_PATTERNS:
        m = pat.search(text)
        if m is None:
            continue
        if not ents.reserve(m.start(), m.end()):
            continue
        lo = int(m.group(1))
        hi = int(m.group(2)) if m.lastindex and m.lastindex >= 2 and m.group(2) else lo
        ents.index_range = (min(lo, hi), max(lo, hi))
        ents.index_span = (m.start(), m.end())
        break
    if ents.index_range is None:
        m = _INDEX_FIRST_N.search(text)
        if m is not None and ents.reserve(m.start(), m.end()):
            ents.index_range = (1, int(m.group(1)))
            ents.index_span = (m.start(), m.end())

    for pat, kind in _LENGTH_PATTERNS:
        m = pat.search(text)
        if m is None:
            continue
        if not ents.reserve(m.start(), m.end()):
            continue
        a = int(m.group(1))
        if kind == "min":
            rng: tuple[int, Optional[int]] = (a, None)
        elif kind == "gt":
            rng = (a + 1, None)
        elif kind == "max":
            rng = (1, a)
        elif kind == "lt":
            rng = (1, max(a - 1, 1))
        elif kind == "eq":
            rng = (a, a)
        else:
            b = int(m.group(2))
            rng = (min(a, b), max(a, b))
        ents.length_range = rng
        ents.length_span = (m.start(), m.end())
        break

    # Feature names from the session schema, longest first so "ball position
    # x" beats "ball position" when both exist.
    tokens = [(m.group(0), m.start(), m.end()) for m in _TOKEN.finditer(text)]
    names = sorted(
        enumerate(context.feature_names),
        key=lambda kv: -len(_feature_tokens(kv[1])),
    )
    for fid, name in names:
        want = _feature_tokens(name)
        if not want:
            continue
        n = len(want)
        for i in range(len(tokens) - n + 1):
            words = tuple(tok[0] for tok in tokens[i : i + n])
            if words != want:
                continue
            start, end = tokens[i][1], tokens[i + n - 1][2]
            if not ents.reserve(start, end):
                continue
            ents.features.append(fid)
            ents.feature_spans.append((start, end))
            break

    for word, start, end in tokens:
        if word.isdigit():
            continue
        norm = _normalize(word, bank.synonyms)
        for direction, cues in bank.directions.items():
            if word in cues or norm in cues:
                if ents.direction is None and ents.reserve(start, end):
                    # reserving is best-effort; direction words may sit inside
                    # a range span, in which case the range owns them
                    ents.direction = direction
                    ents.direction_span = (start, end)
                break
        if ents.direction is not None:
            break

    for m in _NUMBER.finditer(text):
        if not ents.reserve(m.start(), m.end()):
            continue
        ents.ints.append(int(m.group(0)))
        ents.int_spans.append((m.start(), m.end()))

    return ents


# ---------------------------------------------------------------------------
# Template scoring


def _slot_available(slot: str, ents: _Entities) -> bool:
    if slot == "TACTICS":
        return bool(ents.tactic_ids)
    if slot in ("FEATURE", "FEATURES"):
        return bool(ents.features)
    if slot == "INDEX_RANGE":
        return ents.index_range is not None
    if slot == "LENGTH_RANGE":
        return ents.length_range is not None
    if slot == "SERVING":
        return ents.serving_span is not None
    if slot == "DIRECTION":
        return ents.direction is not None
    if slot == "INT":
        return bool(ents.ints)
    return False


def _slot_spans(template: Template, ents: _Entities) -> dict[str, tuple[tuple[int, int], ...]]:
    spans: dict[str, tuple[tuple[int, int], ...]] = {}
    for slot in template.slots:
        if slot == "TACTICS":
            spans[slot] = tuple(ents.tactic_spans)
        elif slot in ("FEATURE", "FEATURES"):
            spans[slot] = tuple(ents.feature_spans)
        elif slot == "INDEX_RANGE" and ents.index_span:
            spans[slot] = (ents.index_span,)
        elif slot == "LENGTH_RANGE" and ents.length_span:
            spans[slot] = (ents.length_span,)
        elif slot == "SERVING" and ents.serving_span:
            spans[slot] = (ents.serving_span,)
        elif slot == "DIRECTION" and ents.direction_span:
            spans[slot] = (ents.direction_span,)
        elif slot == "INT" and ents.int_spans:
            spans[slot] = (ents.int_spans[0],)
    return spans


def _covered_by_slots(template: Template, ents: _Entities) -> list[tuple[int, int]]:
    spans: list[tuple[int, int]] = []
    slots = set(template.slots)
    if "TACTICS" in slots:
        spans.extend(ents.tactic_spans)
    if slots & {"FEATURE", "FEATURES"}:
        spans.extend(ents.feature_spans)
    if "INDEX_RANGE" in slots and ents.index_span:
        spans.append(ents.index_span)
    if "LENGTH_RANGE" in slots and ents.length_span:
        spans.append(ents.length_span)
    if "SERVING" in slots and ents.serving_span:
        spans.append(ents.serving_span)
    if "DIRECTION" in slots and ents.direction_span:
        spans.append(ents.direction_span)
    # plain counts ride along with whichever template wins
    spans.extend(ents.int_spans)
    if ents.direction_span:
        spans.append(ents.direction_span)
    return spans


def _score(template: Template, tokens: list[tuple[str, int, int]], ents: _Entities, bank: TemplateBank) -> float:
    if template.keywords:
        matched = set()
        for word, _, _ in tokens:
            norm = _normalize(word, bank.synonyms)
            if norm in template.keywords:
                matched.add(norm)
        keyword_score = len(matched) / len(template.keywords)
    else:
        keyword_score = 1.0

    slot_spans = _covered_by_slots(template, ents)
    explained = 0
    total = 0
    for word, start, end in tokens:
        if word in bank.stopwords:
            continue
        total += 1
        norm = _normalize(word, bank.synonyms)
        if norm in template.keywords:
            explained += 1
            continue
        if any(start >= lo and end <= hi for lo, hi in slot_spans):
            explained += 1
    coverage = explained / total if total else 1.0
    return KEYWORD_WEIGHT * keyword_score + COVERAGE_WEIGHT * coverage


# ---------------------------------------------------------------------------
# Constraint construction


def _build(template: Template, ents: _Entities, context: SuggestionContext) -> Constraint:
    v = template.variant
    p = template.params
    if v == "IndexRange":
        if p.get("serving"):
            return IndexRange(1, context.serve_window)
        if p.get("first_n"):
            return IndexRange(1, ents.ints[0])
        lo, hi = ents.index_range  # type: ignore[misc]
        return IndexRange(lo, hi)
    if v == "LengthRange":
        mode = p.get("mode")
        if mode == "longer":
            return LengthRange(context.typical_length + 1, None)
        if mode == "shorter":
            return LengthRange(1, max(context.typical_length - 1, 1))
        lo, hi = ents.length_range  # type: ignore[misc]
        return LengthRange(lo, hi)
    if v == "FeatureImportance":
        polarity = p.get("polarity", 1)
        return FeatureImportance(ents.features[0], polarity * IMPORTANCE_STEP)
    if v == "SplitByFeature":
        return SplitByFeature(tuple(ents.tactic_ids), ents.features[0])
    if v == "SpecifyFeature":
        return SpecifyFeature(tuple(ents.tactic_ids), tuple(ents.features))
    if v == "MergeTactics":
        return MergeTactics(tuple(ents.tactic_ids))
    if v == "ExpandTactic":
        direction = p.get("direction") or ents.direction or "back"
        hits = ents.ints[0] if ents.ints else 1
        return ExpandTactic(ents.tactic_ids[0], direction, hits)
    if v == "TrimTactic":
        direction = p.get("direction") or ents.direction or "back"
        hits = ents.ints[0] if ents.ints else 1
        return TrimTactic(ents.tactic_ids[0], direction, hits)
    if v == "DeleteTactic":
        return DeleteTactic(tuple(ents.tactic_ids))
    raise ParseError(f"template variant {v} is not supported", code="VALIDATION")


_BY_MARKER = re.compile(r"\b(?:by|based\s+on|using|according\s+to)\s+([a-z][a-z ]*?)\s*$")


def _unknown_feature_tail(text: str, ents: _Entities, bank: TemplateBank) -> Optional[str]:
    m = _BY_MARKER.search(text.rstrip(" .!?"))
    if m is None:
        return None
    tail = m.group(1).strip()
    if not tail:
        return None
    for lo, hi in ents.feature_spans:
        if m.start(1) < hi and lo < m.end(1):
            return None
    return tail


def parse(text: str, context: SuggestionContext, *, bank: Optional[TemplateBank] = None) -> ParsedSuggestion:
    """Turn one free-text suggestion into a constraint.

    Raises ParseError (code UNPARSED) when nothing clears the confidence
    threshold, and ParseError (code VALIDATION) for references to tactics or
    features the session does not know about.
    """
    if bank is None:
        bank = load_bank()
    lowered = text.lower()
    ents = _extract(lowered, context, bank)
    tokens = [(m.group(0), m.start(), m.end()) for m in _TOKEN.finditer(lowered)]

    scored: list[tuple[float, int, Template]] = []
    eligible: list[tuple[float, int, Template]] = []
    for pos, template in enumerate(bank.templates):
        s = _score(template, tokens, ents, bank)
        scored.append((s, pos, template))
        if all(_slot_available(slot, ents) for slot in template.slots):
            eligible.append((s, pos, template))

    eligible.sort(key=lambda item: (-item[0], item[1]))
    if eligible and eligible[0][0] >= bank.threshold:
        score, _, best = eligible[0]
        constraint = _build(best, ents, context)
        return ParsedSuggestion(
            constraint=constraint,
            confidence=round(score, 4),
            raw_text=text,
            template=best.pattern,
            slot_spans=_slot_spans(best, ents),
        )

    tail = _unknown_feature_tail(lowered, ents, bank)
    if tail is not None and not ents.features:
        raise ParseError(f"unknown feature reference: '{tail}'", code="VALIDATION")

    scored.sort(key=lambda item: (-item[0], item[1]))
    nearest = []
    seen = set()
    for _, _, template in scored:
        if template.canonical in seen:
            continue
        seen.add(template.canonical)
        nearest.append(template.canonical)
        if len(nearest) == 3:
            break
    raise ParseError(
        "could not understand the suggestion; closest supported phrasings: "
        + "; ".join(repr(n) for n in nearest),
        nearest=tuple(nearest),
    )


def context_from_session(session, selected_ids: tuple[int, ...] = ()) -> SuggestionContext:
    """Snapshot the parsing context for a live analysis session."""
    lengths = [len(t) for t in session.tactics]
    typical = int(median(lengths)) if lengths else 2
    return SuggestionContext(
        tactic_ids=tuple(t.id for t in session.tactics),
        feature_names=tuple(f.name for f in session.dataset.schema.features),
        selected_ids=tuple(selected_ids),
        typical_length=max(typical, 1),
        serve_window=4,
    )
