"""The ten SERP features used by the scholar/non-scholar classifier.

Binary indicators use the inverted encoding the reference model was fit
under: 0 when the thing is present on the SERP, 1 when it is absent.
"""

from __future__ import annotations

from dataclasses import astuple, dataclass, fields
from typing import Iterable, Literal, Sequence

from serpscope.errors import (
    DuplicateVertical,
    EmptyResults,
    EmptyTitles,
    RangeViolation,
    TooFewVerticals,
)
from serpscope.serp import SerpRecord

PRESENT, ABSENT = 0, 1

NON_HTML_TYPES = frozenset(
    {"pdf", "ppt", "pptx", "doc", "docx", "txt", "dot", "dox", "dotx", "rtf", "pps", "dotm", "pdfx"}
)

N_VERTICALS = 8
N_PERMUTATIONS = 8 * 7 * 6  # 336
MAX_RANK = N_PERMUTATIONS - 1

FEATURE_NAMES = ("f1", "f2", "f3", "f4", "f5", "f6", "f7", "f8", "f9", "f10")
BINARY_FEATURES = ("f1", "f2", "f3", "f7")
INTEGER_FEATURES = ("f6", "f10")
REAL_FEATURES = ("f4", "f5", "f8", "f9")


@dataclass(frozen=True)
class FeatureVector:
    """Feature values f1..f10, in that order; construction checks domains."""

    f1_knowledge: int
    f2_images: int
    f3_scholar: int
    f4_ad_ratio: float
    f5_nonhtml_rate: float
    f6_vertical_rank: int
    f7_wikipedia: int
    f8_com_rate: float
    f9_max_title_dissim: float
    f10_max_title_overlap: int

    def __post_init__(self):
        for f, short in zip(fields(self), FEATURE_NAMES):
            value = getattr(self, f.name)
            if short in REAL_FEATURES:
                value = float(value)
            else:
                if isinstance(value, float) and not value.is_integer():
                    raise RangeViolation(f"{short}={value!r} must be an integer", column=short)
                value = int(value)
            object.__setattr__(self, f.name, value)
        problems = self.violations()
        if problems:
            raise RangeViolation("; ".join(problems), column=problems[0].split("=", 1)[0])

    def violations(self) -> list[str]:
        out = []
        for short, value in zip(FEATURE_NAMES, astuple(self)):
            if short in BINARY_FEATURES and value not in (0, 1):
                out.append(f"{short}={value} not in {{0,1}}")
            elif short in REAL_FEATURES and not (0.0 <= value <= 1.0):
                out.append(f"{short}={value} not in [0,1]")
            elif short == "f6" and not 0 <= value <= MAX_RANK:
                out.append(f"{short}={value} not in [0,{MAX_RANK}]")
            elif short == "f10" and value < 0:
                out.append(f"{short}={value} is negative")
        return out

    def as_tuple(self) -> tuple:
        return astuple(self)

    @classmethod
    def from_sequence(cls, values: Sequence[float]) -> "FeatureVector":
        if len(values) != 10:
            raise ValueError(f"expected 10 feature values, got {len(values)}")
        return cls(*values)


# ---------------------------------------------------------------------------
# per-feature operations

PresenceKind = Literal["knowledge", "images", "scholar", "wikipedia"]


def extract_presence(record: SerpRecord, kind: PresenceKind) -> int:
    if kind == "knowledge":
        present = record.has_knowledge_panel
    elif kind == "images":
        present = record.has_images_block
    elif kind == "scholar":
        present = any(e.is_scholar_citation for e in record.entries)
    elif kind == "wikipedia":
        present = record.has_wikipedia_link
    else:
        raise ValueError(f"unknown presence indicator {kind!r}")
    return PRESENT if present else ABSENT


def ad_ratio(record: SerpRecord) -> float:
    """Fraction of all entries (ads included) that are ads."""
    if not record.entries:
        raise EmptyResults("ad ratio: SERP has no entries")
    return sum(e.is_ad for e in record.entries) / len(record.entries)


def non_html_rate(record: SerpRecord) -> float:
    if not record.entries:
        raise EmptyResults("non-html rate: SERP has no entries")
    hits = sum(e.mime_hint.lower() in NON_HTML_TYPES for e in record.entries)
    return hits / len(record.entries)


def com_rate(record: SerpRecord) -> float:
    """Fraction of organic (non-ad) links whose TLD is "com"."""
    organic = record.organic
    if not organic:
        raise EmptyResults("com rate: SERP has no organic entries")
    return sum(e.tld == "com" for e in organic) / len(organic)


def vertical_permutation_rank(verticals: Sequence[int]) -> int:
    """Lexicographic rank of the first three vertical codes among all 8P3 orderings.

    >>> vertical_permutation_rank([6, 3, 7])
    275
    """
    codes = [int(v) for v in verticals]
    if len(set(codes)) != len(codes):
        raise DuplicateVertical(f"duplicate vertical in {codes}")
    if len(codes) < 3:
        raise TooFewVerticals(f"need at least 3 verticals, got {len(codes)}")
    a, b, c = codes[:3]
    for x in (a, b, c):
        if not 0 <= x < N_VERTICALS:
            raise ValueError(f"vertical code {x} out of range")
    b_idx = b - (a < b)
    c_idx = c - (a < c) - (b < c)
    return a * 42 + b_idx * 6 + c_idx


def vertical_permutation_unrank(rank: int) -> tuple[int, int, int]:
    if not 0 <= rank <= MAX_RANK:
        raise ValueError(f"rank {rank} out of range [0,{MAX_RANK}]")
    remaining = list(range(N_VERTICALS))
    out = []
    for radix in (42, 6, 1):
        idx, rank = divmod(rank, radix)
        out.append(remaining.pop(idx))
    return tuple(out)


def levenshtein(a: str, b: str) -> int:
    """Unit-cost edit distance over code points."""
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return len(a)
    prev = list(range(len(b) + 1))
    for i, ca in enumerate(a, 1):
        cur = [i]
        for j, cb in enumerate(b, 1):
            cur.append(min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (ca != cb)))
        prev = cur
    return prev[-1]


def title_dissimilarity(query: str, title: str) -> float:
    """Case-folded edit distance normalized by the title's own length, capped at 1."""
    q, t = query.lower(), title.lower()
    if not t:
        return 1.0 if q else 0.0
    return min(1.0, levenshtein(q, t) / len(t))


def max_title_dissimilarity(query: str, titles: Iterable[str]) -> float:
    titles = list(titles)
    if not titles:
        raise EmptyTitles("no titles to compare against")
    return max(title_dissimilarity(query, t) for t in titles)


def tokenize(text: str) -> frozenset[str]:
    # punctuation stays attached: "Wikipedia," -> "wikipedia,"
    return frozenset(text.lower().split())


def title_overlap(query: str, title: str) -> int:
    return len(tokenize(query) & tokenize(title))


def max_title_overlap(query: str, titles: Iterable[str]) -> int:
    titles = list(titles)
    if not titles:
        raise EmptyTitles("no titles to compare against")
    q = tokenize(query)
    return max(len(q & tokenize(t)) for t in titles)


def extract_all(query: str, record: SerpRecord) -> FeatureVector:
    """Compute the full feature vector for ``query`` and its SERP.

    f4 and f5 count every entry; f8, f9 and f10 only look at organic results.
    """
    if not record.entries:
        raise EmptyResults("SERP has no entries")
    titles = [e.title for e in record.organic]
    return FeatureVector(
        f1_knowledge=extract_presence(record, "knowledge"),
        f2_images=extract_presence(record, "images"),
        f3_scholar=extract_presence(record, "scholar"),
        f4_ad_ratio=ad_ratio(record),
        f5_nonhtml_rate=non_html_rate(record),
        f6_vertical_rank=vertical_permutation_rank(record.verticals),
        f7_wikipedia=extract_presence(record, "wikipedia"),
        f8_com_rate=com_rate(record),
        f9_max_title_dissim=max_title_dissimilarity(query, titles),
        f10_max_title_overlap=max_title_overlap(query, titles),
    )
