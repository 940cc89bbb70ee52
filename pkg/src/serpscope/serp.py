"""SERP documents -> :class:`SerpRecord`.

HTML is only an adapter: every markup lookup goes through a
:class:`SelectorProfile`, and the normalized JSON document is the canonical
interchange form.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import IntEnum
from importlib import resources
from pathlib import Path
from typing import Any, Iterable
from urllib.parse import parse_qs, urljoin, urlsplit

import jsonschema
from bs4 import BeautifulSoup, Tag

from serpscope.errors import EmptyDocument, ProfileMismatch, SchemaViolation

logger = logging.getLogger(__name__)

HTML_PARSE = "html-parse"
JSON_INGEST = "json-ingest"

SLOTS = (
    "result-block",
    "title",
    "url",
    "ad-marker",
    "mime-tag",
    "scholar-citation-marker",
    "knowledge-panel",
    "images-block",
    "vertical-tab",
)

DEFAULT_PROFILE = "google-2016"


class VerticalKind(IntEnum):
    """The eight custom vertical pages, coded by alphabetical position."""

    Apps = 0
    Books = 1
    Flights = 2
    Images = 3
    Maps = 4
    News = 5
    Shopping = 6
    Videos = 7

    @classmethod
    def from_name(cls, name: str) -> "VerticalKind":
        return cls[name.strip().capitalize()]


def hostname(url: str) -> str:
    return (urlsplit(url).hostname or "").lower()


def tld_of(url: str) -> str:
    """Last dot-separated label of the hostname ("co.uk" yields "uk")."""
    host = hostname(url).rstrip(".")
    return host.rsplit(".", 1)[-1] if host else ""


def is_absolute_url(url: str) -> bool:
    parts = urlsplit(url)
    return bool(parts.scheme and parts.netloc)


@dataclass(frozen=True)
class ResultEntry:
    title: str
    url: str
    rank: int
    mime_hint: str = ""
    is_ad: bool = False
    is_scholar_citation: bool = False
    tld: str = ""

    def __post_init__(self):
        object.__setattr__(self, "mime_hint", self.mime_hint.strip().lower())
        if not self.tld:
            object.__setattr__(self, "tld", tld_of(self.url))

    @property
    def hostname(self) -> str:
        return hostname(self.url)


@dataclass(frozen=True)
class SerpRecord:
    query: str
    entries: tuple[ResultEntry, ...]
    verticals: tuple[VerticalKind, ...]
    has_knowledge_panel: bool
    has_images_block: bool
    retrieved_at: datetime
    # provenance only; a re-ingested record compares equal to its source
    source: str = field(default=HTML_PARSE, compare=False)

    @property
    def has_wikipedia_link(self) -> bool:
        return any(_is_wikipedia(e.hostname) for e in self.entries)

    @property
    def organic(self) -> tuple[ResultEntry, ...]:
        return tuple(e for e in self.entries if not e.is_ad)


def _is_wikipedia(host: str) -> bool:
    return host == "wikipedia.org" or host.endswith(".wikipedia.org")


# ---------------------------------------------------------------------------
# selector profiles


_PROFILE_SCHEMA = {
    "type": "object",
    "required": ["name", "version", "slots"],
    "additionalProperties": False,
    "properties": {
        "name": {"type": "string", "minLength": 1},
        "version": {"type": "string", "minLength": 1},
        "slots": {
            "type": "object",
            "required": list(SLOTS),
            "additionalProperties": False,
            "properties": {s: {"type": "string", "minLength": 1, "pattern": r"\S"} for s in SLOTS},
        },
    },
}


@dataclass(frozen=True)
class SelectorProfile:
    """Maps the nine semantic SERP slots to CSS selectors."""

    profile_name: str
    version: str
    slots: dict[str, str]

    def __post_init__(self):
        _check(_PROFILE_SCHEMA, self.to_dict(), "selector profile")

    def __getitem__(self, slot: str) -> str:
        return self.slots[slot]

    def to_dict(self) -> dict:
        return {"name": self.profile_name, "version": self.version, "slots": dict(self.slots)}

    @classmethod
    def from_dict(cls, obj: Any) -> "SelectorProfile":
        _check(_PROFILE_SCHEMA, obj, "selector profile")
        return cls(obj["name"], obj["version"], dict(obj["slots"]))


def load_profile(source: str | Path = DEFAULT_PROFILE) -> SelectorProfile:
    """Load a profile from a JSON file path or by bundled profile name."""
    path = Path(source)
    if path.suffix == ".json" or path.exists():
        text = path.read_text(encoding="utf-8-sig")
    else:
        text = resources.files("serpscope.profiles").joinpath(f"{source}.json").read_text("utf-8")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"selector profile: invalid JSON ({exc})") from exc
    return SelectorProfile.from_dict(obj)


# ---------------------------------------------------------------------------
# HTML adapter


def _matches(tag: Tag, selector: str) -> bool:
    """True when ``tag`` itself or any descendant matches ``selector``."""
    return tag.css.match(selector) or tag.select_one(selector) is not None


def _resolve_href(href: str, base_url: str) -> str:
    href = href.strip()
    url = urljoin(base_url, href)
    parts = urlsplit(url)
    # unwrap redirect links of the form /url?q=<target>&sa=...
    if parts.path == "/url" and hostname(url) == hostname(base_url):
        target = parse_qs(parts.query).get("q") or parse_qs(parts.query).get("url")
        if target and is_absolute_url(target[0]):
            return target[0]
    return url


def _element_url(el: Tag, base_url: str) -> str | None:
    href = el.get("href")
    if href is None:
        a = el.find("a", href=True)
        href = a.get("href") if a else None
    if href is None:
        text = el.get_text(" ", strip=True).split(" ")[0]
        href = text if "://" in text else None
    return _resolve_href(href, base_url) if href else None


def _mime_from_tag(text: str) -> str:
    return text.strip().strip("[]()").strip().lower()


def _outermost(blocks: Iterable[Tag]) -> list[Tag]:
    kept: list[Tag] = []
    seen: set[int] = set()
    for b in blocks:
        if any(id(p) in seen for p in b.parents):
            continue
        seen.add(id(b))
        kept.append(b)
    return kept


def parse_html(
    html: str | bytes,
    profile: SelectorProfile,
    *,
    query: str | None = None,
    retrieved_at: datetime | None = None,
    base_url: str = "https://www.google.com/",
) -> SerpRecord:
    """Parse a raw SERP into a record using ``profile``'s selectors.

    Result blocks come back in document order; nested matches are collapsed
    into their outermost block. ``query`` defaults to the value of the page's
    ``q`` input when present.
    """
    if isinstance(html, bytes):
        html = html.decode("utf-8", errors="replace")
    if not html.strip():
        raise EmptyDocument("empty SERP document")

    soup = BeautifulSoup(html, "lxml")
    blocks = _outermost(soup.select(profile["result-block"]))
    if not blocks:
        raise ProfileMismatch(
            f"profile {profile.profile_name}@{profile.version}: "
            f"no result blocks matched {profile['result-block']!r}"
        )

    entries: list[ResultEntry] = []
    for block in blocks:
        title_el = block.select_one(profile["title"])
        url_el = block.select_one(profile["url"])
        url = _element_url(url_el, base_url) if url_el is not None else None
        if title_el is None or not url or not is_absolute_url(url):
            logger.debug("skipping result block without title/url: %.80s", block)
            continue
        mime_el = block.select_one(profile["mime-tag"])
        entries.append(
            ResultEntry(
                title=title_el.get_text(" ", strip=True),
                url=url,
                rank=len(entries) + 1,
                mime_hint=_mime_from_tag(mime_el.get_text()) if mime_el else "",
                is_ad=_matches(block, profile["ad-marker"]),
                is_scholar_citation=_matches(block, profile["scholar-citation-marker"]),
            )
        )
    if not entries:
        raise ProfileMismatch(
            f"profile {profile.profile_name}@{profile.version}: "
            f"{len(blocks)} result blocks matched but none had a title and url"
        )

    verticals: list[VerticalKind] = []
    for tab in soup.select(profile["vertical-tab"]):
        name = tab.get_text(" ", strip=True)
        try:
            kind = VerticalKind.from_name(name)
        except KeyError:
            continue  # "All", "More", "Search tools", ...
        if kind not in verticals:
            verticals.append(kind)

    if query is None:
        box = soup.select_one("input[name=q]")
        query = box.get("value", "") if box is not None else ""

    return SerpRecord(
        query=query,
        entries=tuple(entries),
        verticals=tuple(verticals),
        has_knowledge_panel=soup.select_one(profile["knowledge-panel"]) is not None,
        has_images_block=soup.select_one(profile["images-block"]) is not None,
        retrieved_at=retrieved_at or datetime.now(timezone.utc).replace(microsecond=0),
        source=HTML_PARSE,
    )


# ---------------------------------------------------------------------------
# normalized JSON

SERP_SCHEMA = {
    "type": "object",
    "required": ["query", "retrieved_at", "verticals", "knowledge_panel", "images_block", "entries"],
    "additionalProperties": False,
    "properties": {
        "query": {"type": "string"},
        "retrieved_at": {"type": "string"},
        "verticals": {"type": "array", "items": {"enum": [v.name for v in VerticalKind]}},
        "knowledge_panel": {"type": "boolean"},
        "images_block": {"type": "boolean"},
        "entries": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["title", "url", "mime_hint", "ad", "scholar_citation"],
                "additionalProperties": False,
                "properties": {
                    "title": {"type": "string"},
                    "url": {"type": "string"},
                    "mime_hint": {"type": "string"},
                    "ad": {"type": "boolean"},
                    "scholar_citation": {"type": "boolean"},
                },
            },
        },
    },
}


def _check(schema: dict, obj: Any, what: str) -> None:
    err = jsonschema.exceptions.best_match(jsonschema.Draft202012Validator(schema).iter_errors(obj))
    if err is not None:
        where = "/".join(str(p) for p in err.absolute_path) or "<root>"
        raise SchemaViolation(f"{what}: {where}: {err.message}")


def format_timestamp(ts: datetime) -> str:
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    text = ts.isoformat()
    return text[:-6] + "Z" if text.endswith("+00:00") else text


def parse_timestamp(text: str) -> datetime:
    """Parse an RFC 3339 timestamp; an explicit offset is required."""
    raw = text.strip()
    if raw[-1:] in ("Z", "z"):
        raw = raw[:-1] + "+00:00"
    ts = datetime.fromisoformat(raw)
    if ts.tzinfo is None:
        raise ValueError(f"timestamp without UTC offset: {text!r}")
    return ts


def record_to_dict(record: SerpRecord) -> dict:
    return {
        "query": record.query,
        "retrieved_at": format_timestamp(record.retrieved_at),
        "verticals": [v.name for v in record.verticals],
        "knowledge_panel": record.has_knowledge_panel,
        "images_block": record.has_images_block,
        "entries": [
            {
                "title": e.title,
                "url": e.url,
                "mime_hint": e.mime_hint,
                "ad": e.is_ad,
                "scholar_citation": e.is_scholar_citation,
            }
            for e in record.entries
        ],
    }


def serialize_record(record: SerpRecord, indent: int | None = 2) -> bytes:
    return json.dumps(record_to_dict(record), indent=indent, ensure_ascii=False).encode("utf-8")


def record_from_dict(obj: Any) -> SerpRecord:
    _check(SERP_SCHEMA, obj, "SERP document")
    try:
        retrieved_at = parse_timestamp(obj["retrieved_at"])
    except ValueError as exc:
        raise SchemaViolation(f"SERP document: retrieved_at: {exc}") from exc
    entries = []
    for i, e in enumerate(obj["entries"], start=1):
        if not is_absolute_url(e["url"]):
            raise SchemaViolation(f"SERP document: entries/{i - 1}/url: not an absolute URL: {e['url']!r}")
        entries.append(
            ResultEntry(
                title=e["title"],
                url=e["url"],
                rank=i,
                mime_hint=e["mime_hint"],
                is_ad=e["ad"],
                is_scholar_citation=e["scholar_citation"],
            )
        )
    return SerpRecord(
        query=obj["query"],
        entries=tuple(entries),
        verticals=tuple(VerticalKind[v] for v in obj["verticals"]),
        has_knowledge_panel=obj["knowledge_panel"],
        has_images_block=obj["images_block"],
        retrieved_at=retrieved_at,
        source=JSON_INGEST,
    )


def ingest_json(data: bytes | str) -> SerpRecord:
    """Decode a normalized SERP JSON document (UTF-8, BOM tolerated)."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8-sig")
        except UnicodeDecodeError as exc:
            raise SchemaViolation(f"SERP document: not UTF-8 ({exc})") from exc
    try:
        obj = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"SERP document: invalid JSON ({exc})") from exc
    return record_from_dict(obj)


def load_serp(path: str | Path, profile: SelectorProfile | None = None, **kwargs) -> SerpRecord:
    """Read a SERP file: ``.json`` is ingested, anything else parsed as HTML."""
    path = Path(path)
    data = path.read_bytes()
    if path.suffix.lower() == ".json":
        return ingest_json(data)
    return parse_html(data, profile or load_profile(), **kwargs)


# ---------------------------------------------------------------------------
# validation


def validate(record: SerpRecord, *, for_features: bool = False) -> list[str]:
    """Return invariant violations as "field: rule" strings; empty when valid.

    ``for_features`` adds the extra requirements of feature extraction
    (non-empty entries, at least three verticals).
    """
    problems = []
    ranks = [e.rank for e in record.entries]
    if len(set(ranks)) != len(ranks):
        dupes = sorted({r for r in ranks if ranks.count(r) > 1})
        problems.append(f"entries.rank: rank uniqueness violated (duplicates {dupes})")
    for e in record.entries:
        if e.rank < 1:
            problems.append(f"entries[{e.rank}].rank: rank must be >= 1")
        if not is_absolute_url(e.url):
            problems.append(f"entries[{e.rank}].url: not an absolute URL: {e.url!r}")
        if e.mime_hint != e.mime_hint.lower():
            problems.append(f"entries[{e.rank}].mime_hint: must be lowercase")
        if e.tld != tld_of(e.url):
            problems.append(f"entries[{e.rank}].tld: does not match URL hostname")
    if len(set(record.verticals)) != len(record.verticals):
        problems.append("verticals: verticals duplicate")
    if any(not isinstance(v, VerticalKind) for v in record.verticals):
        problems.append("verticals: unknown vertical kind")
    if record.retrieved_at.tzinfo is None:
        problems.append("retrieved_at: timestamp lacks UTC offset")
    if for_features:
        if not record.entries:
            problems.append("entries: must be non-empty for feature extraction")
        if len(record.verticals) < 3:
            problems.append("verticals: at least 3 required for vertical permutation")
    return problems
