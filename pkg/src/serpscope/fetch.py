"""Offline-first SERP download with an on-disk cache and a request-rate gate."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import tempfile
import threading
import time
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Literal, Protocol
from urllib.parse import quote_plus

from serpscope.errors import OfflineMiss, SchemaViolation, TransportError
from serpscope.serp import format_timestamp, parse_timestamp

logger = logging.getLogger(__name__)

CACHE_ENV = "SERPSCOPE_CACHE"
MODES = ("offline", "cache-first", "network")
DEFAULT_TEMPLATE = "https://www.google.com/search?q={query}&hl=en"


class Clock(Protocol):
    def monotonic(self) -> float: ...
    def sleep(self, seconds: float) -> None: ...
    def now(self) -> datetime: ...


class SystemClock:
    def monotonic(self) -> float:
        return time.monotonic()

    def sleep(self, seconds: float) -> None:
        time.sleep(seconds)

    def now(self) -> datetime:
        return datetime.now(timezone.utc).replace(microsecond=0)


Transport = Callable[[str], bytes]


def http_transport(url: str, timeout: float = 30.0) -> bytes:
    import httpx

    headers = {"User-Agent": "Mozilla/5.0 (X11; Linux x86_64) serpscope/0.1"}
    try:
        resp = httpx.get(url, headers=headers, timeout=timeout, follow_redirects=True)
    except httpx.HTTPError as exc:
        raise TransportError(f"GET {url}: {exc}") from exc
    if resp.status_code != 200:
        raise TransportError(f"GET {url}: HTTP {resp.status_code}", status=resp.status_code)
    return resp.content


@dataclass(frozen=True)
class FetchConfig:
    endpoint_template: str = DEFAULT_TEMPLATE
    min_interval: float = 2.0
    cache_dir: Path = field(default_factory=lambda: Path(".serpscope-cache"))
    mode: Literal["offline", "cache-first", "network"] = "cache-first"

    def __post_init__(self):
        object.__setattr__(self, "cache_dir", Path(self.cache_dir))
        if "{query}" not in self.endpoint_template:
            raise ValueError("endpoint_template must contain a {query} placeholder")
        if self.min_interval < 0:
            raise ValueError("min_interval must be >= 0")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")

    @classmethod
    def from_dict(cls, obj: dict) -> "FetchConfig":
        unknown = set(obj) - {"endpoint_template", "min_interval", "cache_dir", "mode"}
        if unknown:
            raise SchemaViolation(f"fetch config: unknown keys {sorted(unknown)}")
        try:
            cfg = cls(**obj)
        except (TypeError, ValueError) as exc:
            raise SchemaViolation(f"fetch config: {exc}") from exc
        if os.environ.get(CACHE_ENV):
            cfg = replace(cfg, cache_dir=Path(os.environ[CACHE_ENV]))
        return cfg

    @classmethod
    def load(cls, path: str | Path) -> "FetchConfig":
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8-sig"))
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"fetch config: invalid JSON ({exc})") from exc
        if not isinstance(obj, dict):
            raise SchemaViolation("fetch config: expected a JSON object")
        return cls.from_dict(obj)


@dataclass(frozen=True)
class FetchResult:
    raw_html: bytes
    retrieved_at: datetime
    from_cache: bool


def encode_query(query: str) -> str:
    return quote_plus(query)


def build_url(template: str, query: str) -> str:
    return template.replace("{query}", encode_query(query))


def cache_key(template: str, query: str) -> str:
    return hashlib.sha256(f"{template}\n{encode_query(query)}".encode("utf-8")).hexdigest()


def cache_paths(cache_dir: Path, key: str) -> tuple[Path, Path]:
    d = Path(cache_dir) / key[:2]
    return d / f"{key}.html", d / f"{key}.meta.json"


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".tmp-", suffix=path.suffix)
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


class Fetcher:
    """Fetches SERPs through a cache; all outbound requests share one rate gate."""

    def __init__(self, config: FetchConfig, transport: Transport | None = None, clock: Clock | None = None):
        self.config = config
        self.transport = transport or http_transport
        self.clock = clock or SystemClock()
        self._gate = threading.Lock()
        self._last_request: float | None = None

    def paths(self, query: str) -> tuple[Path, Path]:
        return cache_paths(self.config.cache_dir, cache_key(self.config.endpoint_template, query))

    def read_cache(self, query: str) -> FetchResult | None:
        html_path, meta_path = self.paths(query)
        if not html_path.exists():
            return None
        retrieved_at = datetime.fromtimestamp(html_path.stat().st_mtime, timezone.utc).replace(microsecond=0)
        if meta_path.exists():
            try:
                retrieved_at = parse_timestamp(json.loads(meta_path.read_text("utf-8"))["retrieved_at"])
            except (ValueError, KeyError):
                logger.warning("ignoring unreadable cache sidecar %s", meta_path)
        return FetchResult(html_path.read_bytes(), retrieved_at, True)

    def write_cache(self, query: str, raw_html: bytes, retrieved_at: datetime) -> None:
        html_path, meta_path = self.paths(query)
        meta = {
            "query": query,
            "url": build_url(self.config.endpoint_template, query),
            "retrieved_at": format_timestamp(retrieved_at),
        }
        # sidecar first: a present .html file means the entry is complete
        _atomic_write(meta_path, json.dumps(meta, indent=2).encode("utf-8"))
        _atomic_write(html_path, raw_html)

    def _request(self, url: str) -> bytes:
        with self._gate:
            if self._last_request is not None:
                wait = self._last_request + self.config.min_interval - self.clock.monotonic()
                if wait > 0:
                    self.clock.sleep(wait)
            self._last_request = self.clock.monotonic()
            return self.transport(url)

    def fetch(self, query: str) -> FetchResult:
        if not query.strip():
            raise ValueError("query must be non-empty")
        mode = self.config.mode
        if mode != "network":
            cached = self.read_cache(query)
            if cached is not None:
                return cached
            if mode == "offline":
                raise OfflineMiss(f"no cached SERP for {query!r} in {self.config.cache_dir}")
        url = build_url(self.config.endpoint_template, query)
        raw = self._request(url)
        retrieved_at = self.clock.now()
        self.write_cache(query, raw, retrieved_at)
        return FetchResult(raw, retrieved_at, False)


def fetch(query: str, config: FetchConfig, transport: Transport | None = None, clock: Clock | None = None):
    return Fetcher(config, transport, clock).fetch(query)
