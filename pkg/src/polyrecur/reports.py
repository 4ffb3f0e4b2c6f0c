"""Rule-based extraction of polyp features from colonoscopy report text.

The extraction is a three-stage pure pipeline:

1. ``lex`` turns raw text into a token stream, resolving digit strings and
   number words ("three", "twenty-one") to numeric values and recognizing
   the size units "mm" and "cm".
2. ``parse_report`` scans the tokens for colonic locations from a controlled
   vocabulary, decides for every number whether it is a polyp size or a
   polyp count (a unit token close behind the number means size), and folds
   the features into an ordered list of :class:`PolypMention`.
3. ``aggregate_visit`` reduces the mentions of one visit to a
   :class:`VisitSummary` (total count, count-weighted mean size, max size,
   per-location tallies).

All sizes are normalized to millimeters at parse time.
"""

from __future__ import annotations

import datetime as _dt
import re
from dataclasses import dataclass, field
from enum import Enum


class ColonSite(Enum):
    """Controlled vocabulary of colonic locations."""

    TRANSVERSE = "transverse"
    SIGMOID = "sigmoid"
    ILEUM_CECUM = "ileum_cecum"
    ANUS = "anus"
    ASCENDING = "ascending"
    DESCENDING = "descending"
    HEPATIC = "hepatic"
    RECTUM = "rectum"
    ILEOCECAL = "ileocecal"
    SPLENIC = "splenic"


class TokenKind(Enum):
    WORD = "word"
    NUMBER = "number"
    UNIT = "unit"
    PUNCT = "punct"


class SizeUnit(Enum):
    MM = "mm"
    CM = "cm"


@dataclass(frozen=True)
class Token:
    kind: TokenKind
    lexeme: str
    span: tuple[int, int]
    value: float | None = None      # set for NUMBER tokens
    unit: SizeUnit | None = None    # set for UNIT tokens


@dataclass(frozen=True)
class PolypMention:
    """One polyp description discovered in the text, in discovery order."""

    location: ColonSite | None = None
    size_min_mm: float | None = None
    size_max_mm: float | None = None
    count: int = 1


@dataclass
class VisitExtraction:
    mentions: list[PolypMention] = field(default_factory=list)
    unparsed_numbers: list[Token] = field(default_factory=list)


@dataclass
class VisitSummary:
    """Per-visit aggregate of the extracted polyp mentions."""

    polyp_count: int = 0
    mean_size_mm: float | None = None
    max_size_mm: float | None = None
    location_counts: dict[ColonSite, int] = field(default_factory=dict)


@dataclass(frozen=True)
class ColonoscopyReport:
    patient_id: str
    visit_date: _dt.date
    text: str


@dataclass(frozen=True)
class ParserConfig:
    """Knobs of the rule-based parser.

    unit_window: how many tokens after a number a unit may trail and still
        mark the number as a size.
    count_cap: counts above this are considered implausible (dates, record
        numbers) and are routed to ``unparsed_numbers``.
    range_markers: lexemes accepted between two size numbers as a range.
    """

    unit_window: int = 2
    count_cap: int = 50
    range_markers: tuple[str, ...] = ("-", "to")


_ONES = {
    "zero": 0, "one": 1, "two": 2, "three": 3, "four": 4,
    "five": 5, "six": 6, "seven": 7, "eight": 8, "nine": 9,
}
_TEENS = {
    "ten": 10, "eleven": 11, "twelve": 12, "thirteen": 13, "fourteen": 14,
    "fifteen": 15, "sixteen": 16, "seventeen": 17, "eighteen": 18,
    "nineteen": 19,
}
_TENS = {
    "twenty": 20, "thirty": 30, "forty": 40, "fifty": 50,
    "sixty": 60, "seventy": 70, "eighty": 80, "ninety": 90,
}
NUMBER_WORDS: dict[str, int] = {**_ONES, **_TEENS, **_TENS}

_UNIT_WORDS = {"mm": SizeUnit.MM, "cm": SizeUnit.CM}

# Two-word vocabulary entries are matched before single-word ones.
_SITE_PAIRS: dict[tuple[str, str], ColonSite] = {
    ("ileum", "cecum"): ColonSite.ILEUM_CECUM,
}
_SITE_SINGLES: dict[str, ColonSite] = {
    "transverse": ColonSite.TRANSVERSE,
    "sigmoid": ColonSite.SIGMOID,
    "anus": ColonSite.ANUS,
    "ascending": ColonSite.ASCENDING,
    "descending": ColonSite.DESCENDING,
    "hepatic": ColonSite.HEPATIC,
    "rectum": ColonSite.RECTUM,
    "ileocecal": ColonSite.ILEOCECAL,
    "splenic": ColonSite.SPLENIC,
}

_SCANNER = re.compile(r"\d+(?:\.\d+)?|[A-Za-z]+|[^\sA-Za-z0-9]")


def lex(text: str) -> list[Token]:
    """Tokenize report text.

    Digit runs (with optional decimal point) and number words become NUMBER
    tokens carrying their resolved value; "mm"/"cm" become UNIT tokens;
    other alphabetic runs become WORD tokens; every remaining non-space
    character is a single PUNCT token.  Compound number words joined by a
    hyphen or a space ("twenty-one", "twenty one") merge into one NUMBER
    token.  Unrecognized input degrades to WORD tokens, never an error.
    """
    raw: list[Token] = []
    for m in _SCANNER.finditer(text):
        lexeme = m.group(0)
        span = (m.start(), m.end())
        if lexeme[0].isdigit():
            raw.append(Token(TokenKind.NUMBER, lexeme, span, value=float(lexeme)))
        elif lexeme[0].isalpha():
            low = lexeme.lower()
            if low in _UNIT_WORDS:
                raw.append(Token(TokenKind.UNIT, lexeme, span, unit=_UNIT_WORDS[low]))
            elif low in NUMBER_WORDS:
                raw.append(Token(TokenKind.NUMBER, lexeme, span,
                                 value=float(NUMBER_WORDS[low])))
            else:
                raw.append(Token(TokenKind.WORD, lexeme, span))
        else:
            raw.append(Token(TokenKind.PUNCT, lexeme, span))

    return _merge_compound_numbers(raw, text)


def _merge_compound_numbers(tokens: list[Token], text: str) -> list[Token]:
    """Merge tens-word [hyphen] ones-word sequences into single numbers."""
    out: list[Token] = []
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok.kind is TokenKind.NUMBER and tok.lexeme.lower() in _TENS:
            tens = _TENS[tok.lexeme.lower()]
            j = i + 1
            if (j < len(tokens) and tokens[j].kind is TokenKind.PUNCT
                    and tokens[j].lexeme == "-"):
                j += 1
            if (j < len(tokens) and tokens[j].kind is TokenKind.NUMBER
                    and tokens[j].lexeme.lower() in _ONES
                    and _ONES[tokens[j].lexeme.lower()] > 0):
                span = (tok.span[0], tokens[j].span[1])
                value = float(tens + _ONES[tokens[j].lexeme.lower()])
                out.append(Token(TokenKind.NUMBER, text[span[0]:span[1]],
                                 span, value=value))
                i = j + 1
                continue
        out.append(tok)
        i += 1
    return out


class NumberRole(Enum):
    SIZE = "size"
    COUNT = "count"


def classify_number(tokens: list[Token], index: int,
                    config: ParserConfig = ParserConfig()) -> NumberRole:
    """Decide whether the NUMBER at ``index`` is a polyp size or a count.

    A unit token within the next ``config.unit_window`` tokens, with no
    other number in between, marks the number as a size.
    """
    if tokens[index].kind is not TokenKind.NUMBER:
        raise ValueError("classify_number expects a NUMBER token index")
    for tok in tokens[index + 1: index + 1 + config.unit_window]:
        if tok.kind is TokenKind.UNIT:
            return NumberRole.SIZE
        if tok.kind is TokenKind.NUMBER:
            break
    return NumberRole.COUNT


def _trailing_unit(tokens: list[Token], index: int,
                   config: ParserConfig) -> SizeUnit | None:
    """Unit of the size number at ``index`` (first unit in its window)."""
    for tok in tokens[index + 1: index + 1 + config.unit_window]:
        if tok.kind is TokenKind.UNIT:
            return tok.unit
        if tok.kind is TokenKind.NUMBER:
            break
    return None


def _to_mm(value: float, unit: SizeUnit | None) -> float:
    if unit is SizeUnit.CM:
        return value * 10.0
    return value


class _Draft:
    """Mutable mention under construction."""

    __slots__ = ("location", "count", "size")

    def __init__(self, location: ColonSite | None = None,
                 count: int | None = None,
                 size: tuple[float, float] | None = None):
        self.location = location
        self.count = count
        self.size = size

    def freeze(self) -> PolypMention:
        lo, hi = self.size if self.size is not None else (None, None)
        return PolypMention(location=self.location, size_min_mm=lo,
                            size_max_mm=hi,
                            count=self.count if self.count is not None else 1)


def _is_range_marker(tok: Token, config: ParserConfig) -> bool:
    return tok.lexeme.lower() in config.range_markers


def parse_report(report: ColonoscopyReport,
                 config: ParserConfig = ParserConfig()) -> VisitExtraction:
    """Extract polyp mentions from one report.

    Counts and sizes accumulate into a pending mention; a vocabulary site
    name anchors the pending mention (or opens a fresh one when nothing is
    pending).  A second count or a second size starts a new mention, so
    "two 5 mm polyps in the sigmoid and one 10 mm polyp in the rectum"
    yields two mentions in text order.  Malformed fragments never raise:
    implausible counts land in ``unparsed_numbers``.
    """
    tokens = lex(report.text)
    extraction = VisitExtraction()
    drafts: list[_Draft] = []
    current: _Draft | None = None

    def open_draft(**kw) -> _Draft:
        draft = _Draft(**kw)
        drafts.append(draft)
        return draft

    def on_site(site: ColonSite) -> None:
        nonlocal current
        if current is not None and current.location is None:
            current.location = site
            current = None
        else:
            current = open_draft(location=site)

    def on_count(tok: Token) -> None:
        nonlocal current
        n = tok.value
        if n is None or n <= 0 or n != int(n) or n > config.count_cap:
            extraction.unparsed_numbers.append(tok)
            return
        n = int(n)
        if current is None or current.count is not None:
            current = open_draft(count=n)
        else:
            current.count = n

    def on_size(lo_mm: float, hi_mm: float) -> None:
        nonlocal current
        bounds = (min(lo_mm, hi_mm), max(lo_mm, hi_mm))
        if current is None or current.size is not None:
            current = open_draft(size=bounds)
        else:
            current.size = bounds

    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok.kind is TokenKind.WORD:
            low = tok.lexeme.lower()
            nxt = tokens[i + 1] if i + 1 < len(tokens) else None
            if (nxt is not None and nxt.kind is TokenKind.WORD
                    and (low, nxt.lexeme.lower()) in _SITE_PAIRS):
                on_site(_SITE_PAIRS[(low, nxt.lexeme.lower())])
                i += 2
                continue
            if low in _SITE_SINGLES:
                on_site(_SITE_SINGLES[low])
            i += 1
            continue
        if tok.kind is TokenKind.NUMBER:
            # Range "a - b" / "a to b": a size range when the second number
            # classifies as a size; both bounds share the trailing unit.
            if (i + 2 < len(tokens) and _is_range_marker(tokens[i + 1], config)
                    and tokens[i + 2].kind is TokenKind.NUMBER
                    and classify_number(tokens, i + 2, config) is NumberRole.SIZE):
                unit = _trailing_unit(tokens, i + 2, config)
                on_size(_to_mm(tok.value, unit), _to_mm(tokens[i + 2].value, unit))
                i += 3
                continue
            if classify_number(tokens, i, config) is NumberRole.SIZE:
                unit = _trailing_unit(tokens, i, config)
                mm = _to_mm(tok.value, unit)
                on_size(mm, mm)
            else:
                on_count(tok)
            i += 1
            continue
        i += 1

    extraction.mentions = [d.freeze() for d in drafts]
    return extraction


def aggregate_visit(extraction: VisitExtraction) -> VisitSummary:
    """Fold mentions into the per-visit summary.

    The mean size is the count-weighted mean of per-mention midpoints over
    mentions that carry a size; unsized mentions contribute to the polyp
    count and location tallies only.
    """
    summary = VisitSummary()
    sized_weight = 0
    sized_sum = 0.0
    for mention in extraction.mentions:
        summary.polyp_count += mention.count
        if mention.location is not None:
            summary.location_counts[mention.location] = (
                summary.location_counts.get(mention.location, 0) + mention.count)
        if mention.size_min_mm is not None:
            midpoint = (mention.size_min_mm + mention.size_max_mm) / 2.0
            sized_sum += mention.count * midpoint
            sized_weight += mention.count
            if (summary.max_size_mm is None
                    or mention.size_max_mm > summary.max_size_mm):
                summary.max_size_mm = mention.size_max_mm
    if sized_weight > 0:
        summary.mean_size_mm = sized_sum / sized_weight
    return summary


def parse_and_summarize(report: ColonoscopyReport,
                        config: ParserConfig = ParserConfig()) -> VisitSummary:
    """Convenience composition of ``parse_report`` and ``aggregate_visit``."""
    return aggregate_visit(parse_report(report, config))
