"""Bibliographic metadata lookup with caching, throttling and retries.

Metadata comes either from a live HTTP registry (``base_url``) or from
a directory of JSON fixtures laid out the same way (``fixture_dir``),
so tests and offline analysis use the exact code path of production
lookups minus the socket. Lookups are polite (token bucket), patient
(bounded retries with exponential backoff) and cached, with a shorter
TTL for misses than for hits.
"""
from __future__ import annotations

import csv
import fnmatch
import json
import threading
import time
import urllib.parse
from concurrent.futures import Future
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Callable, Optional, Union

from .dates import MalformedDateError, PartialDate
from .doi import Doi
from .errors import CrociError

__all__ = [
    "Category",
    "EntityMetadata",
    "RegistryClient",
    "RegistryUnavailableError",
    "TypeCategoryMap",
    "map_type_to_category",
]


class RegistryUnavailableError(CrociError):
    """The registry could not answer; distinct from a definitive miss."""


class Category(str, Enum):
    JOURNAL = "journal"
    BOOK = "book"
    PROCEEDINGS = "proceedings"
    DATASET = "dataset"
    OTHER = "other"


@dataclass(frozen=True)
class EntityMetadata:
    """What the registry knows about one DOI."""

    doi: Doi
    entity_type: Optional[str]
    category: Category
    issued: Optional[PartialDate]
    referenced_by_count: int
    publisher: Optional[str]


class TypeCategoryMap:
    """Ordered glob patterns mapping raw registry types to categories.

    First matching pattern wins; anything unmatched is ``other``. The
    default map ships as package data so deployments can swap it out
    without touching code.
    """

    def __init__(self, patterns: list[tuple[str, Category]]):
        self._patterns = list(patterns)

    @classmethod
    def from_csv(cls, path: Union[str, Path]) -> "TypeCategoryMap":
        with open(path, encoding="utf-8", newline="") as handle:
            return cls._parse(handle)

    @classmethod
    def default(cls) -> "TypeCategoryMap":
        source = resources.files("croci_engine.data").joinpath("type_categories.csv")
        with source.open("r", encoding="utf-8") as handle:
            return cls._parse(handle)

    @classmethod
    def _parse(cls, handle) -> "TypeCategoryMap":
        reader = csv.DictReader(handle)
        patterns = [
            (row["pattern"].strip(), Category(row["category"].strip()))
            for row in reader
        ]
        return cls(patterns)

    def categorize(self, entity_type: Optional[str]) -> Category:
        if entity_type:
            needle = entity_type.strip().lower()
            for pattern, category in self._patterns:
                if fnmatch.fnmatchcase(needle, pattern):
                    return category
        return Category.OTHER


def map_type_to_category(
    entity_type: Optional[str], mapping: Optional[TypeCategoryMap] = None
) -> Category:
    """Categorize a raw registry type string (None-safe)."""
    return (mapping or _default_map()).categorize(entity_type)


_DEFAULT_MAP: Optional[TypeCategoryMap] = None


def _default_map() -> TypeCategoryMap:
    global _DEFAULT_MAP
    if _DEFAULT_MAP is None:
        _DEFAULT_MAP = TypeCategoryMap.default()
    return _DEFAULT_MAP


class _TokenBucket:
    """Simple token bucket: ``rate`` requests per second, burst ``rate``."""

    def __init__(self, rate: float, clock: Callable[[], float], sleep):
        self._rate = rate
        self._capacity = max(rate, 1.0)
        self._tokens = self._capacity
        self._clock = clock
        self._sleep = sleep
        self._last = clock()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        with self._lock:
            now = self._clock()
            self._tokens = min(
                self._capacity, self._tokens + (now - self._last) * self._rate
            )
            self._last = now
            if self._tokens >= 1.0:
                self._tokens -= 1.0
                return
            wait = (1.0 - self._tokens) / self._rate
            self._tokens = 0.0
            self._last = now + wait
        self._sleep(wait)


class RegistryClient:
    """Cached, throttled client for a works/prefixes metadata registry.

    Exactly one of ``base_url`` and ``fixture_dir`` must be given. A
    definitive miss returns ``None`` (and is cached briefly); registry
    trouble that outlasts the retries raises
    :class:`RegistryUnavailableError` and is never cached.
    """

    POSITIVE_TTL = 86400.0
    NEGATIVE_TTL = 300.0

    def __init__(
        self,
        base_url: Optional[str] = None,
        fixture_dir: Optional[Union[str, Path]] = None,
        rate_limit: float = 5.0,
        max_retries: int = 3,
        backoff_base: float = 1.0,
        category_map: Optional[TypeCategoryMap] = None,
        session=None,
        clock: Callable[[], float] = time.monotonic,
        sleep=time.sleep,
    ):
        if (base_url is None) == (fixture_dir is None):
            raise ValueError("exactly one of base_url and fixture_dir is required")
        self._base_url = base_url.rstrip("/") if base_url else None
        self._fixture_dir = Path(fixture_dir) if fixture_dir else None
        self._max_retries = max_retries
        self._backoff_base = backoff_base
        self._category_map = category_map or _default_map()
        self._session = session
        self._clock = clock
        self._sleep = sleep
        self._bucket = _TokenBucket(rate_limit, clock, sleep)
        self._cache: dict[str, tuple[float, object]] = {}
        self._in_flight: dict[str, Future] = {}
        self._lock = threading.Lock()
        self.request_count = 0
        self.cache_hits = 0

    # -- public lookups -----------------------------------------------

    def fetch_entity_metadata(self, doi: Doi) -> Optional[EntityMetadata]:
        """Metadata for one DOI, or None when the registry has no entry."""
        key = "works/" + urllib.parse.quote(doi.canonical, safe="")
        message = self._cached_fetch(key)
        if message is None:
            return None
        return self._build_metadata(doi, message)

    def lookup_publisher(self, prefix: str) -> Optional[str]:
        """Publisher name registered for a DOI prefix, if any."""
        key = "prefixes/" + prefix
        message = self._cached_fetch(key)
        if message is None:
            return None
        name = message.get("name")
        return name if isinstance(name, str) and name else None

    # -- caching and deduplication --------------------------------------

    def _cached_fetch(self, key: str) -> Optional[dict]:
        while True:
            with self._lock:
                cached = self._cache.get(key)
                if cached is not None:
                    expires_at, value = cached
                    if self._clock() < expires_at:
                        self.cache_hits += 1
                        return value
                    del self._cache[key]
                future = self._in_flight.get(key)
                if future is None:
                    future = Future()
                    self._in_flight[key] = future
                    owner = True
                else:
                    owner = False
            if not owner:
                return future.result()
            try:
                value = self._fetch(key)
            except BaseException as exc:
                with self._lock:
                    del self._in_flight[key]
                future.set_exception(exc)
                raise
            ttl = self.POSITIVE_TTL if value is not None else self.NEGATIVE_TTL
            with self._lock:
                self._cache[key] = (self._clock() + ttl, value)
                del self._in_flight[key]
            future.set_result(value)
            return value

    # -- transport ------------------------------------------------------

    def _fetch(self, key: str) -> Optional[dict]:
        self.request_count += 1
        if self._fixture_dir is not None:
            return self._fetch_fixture(key)
        return self._fetch_http(key)

    def _fetch_fixture(self, key: str) -> Optional[dict]:
        path = self._fixture_dir / (key + ".json")
        if not path.exists():
            return None
        try:
            body = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise RegistryUnavailableError(f"bad fixture {path}: {exc}") from exc
        return self._unwrap(body, key)

    def _fetch_http(self, key: str) -> Optional[dict]:
        import requests

        session = self._session or requests
        url = f"{self._base_url}/{key}"
        last_trouble = "no attempts made"
        for attempt in range(self._max_retries + 1):
            if attempt:
                self._sleep(self._backoff_base * (2 ** (attempt - 1)))
            self._bucket.acquire()
            try:
                response = session.get(url, timeout=30)
            except requests.RequestException as exc:
                last_trouble = f"network error: {exc}"
                continue
            if response.status_code == 404:
                return None
            if response.status_code == 429 or response.status_code >= 500:
                last_trouble = f"status {response.status_code}"
                continue
            if response.status_code != 200:
                raise RegistryUnavailableError(
                    f"unexpected status {response.status_code} for {url}"
                )
            try:
                body = response.json()
            except ValueError as exc:
                raise RegistryUnavailableError(f"bad JSON from {url}: {exc}") from exc
            return self._unwrap(body, key)
        raise RegistryUnavailableError(
            f"registry unavailable after {self._max_retries + 1} attempts"
            f" ({last_trouble}): {url}"
        )

    @staticmethod
    def _unwrap(body: object, key: str) -> dict:
        if not isinstance(body, dict) or not isinstance(body.get("message"), dict):
            raise RegistryUnavailableError(f"malformed registry body for {key}")
        return body["message"]

    # -- response shaping -----------------------------------------------

    def _build_metadata(self, doi: Doi, message: dict) -> EntityMetadata:
        entity_type = message.get("type")
        if not isinstance(entity_type, str):
            entity_type = None
        count = message.get("is-referenced-by-count", 0)
        if not isinstance(count, int) or count < 0:
            count = 0
        publisher = message.get("publisher")
        if not isinstance(publisher, str) or not publisher:
            publisher = None
        return EntityMetadata(
            doi=doi,
            entity_type=entity_type,
            category=self._category_map.categorize(entity_type),
            issued=_issued_date(message.get("issued")),
            referenced_by_count=count,
            publisher=publisher,
        )


def _issued_date(issued: object) -> Optional[PartialDate]:
    """Read an {'date-parts': [[y, m, d]]} structure, tolerating gaps."""
    if not isinstance(issued, dict):
        return None
    parts = issued.get("date-parts")
    if not isinstance(parts, list) or not parts or not isinstance(parts[0], list):
        return None
    head = parts[0]
    values: list[int] = []
    for piece in head[:3]:
        if not isinstance(piece, int):
            break
        values.append(piece)
    if not values:
        return None
    try:
        return PartialDate(*values)
    except MalformedDateError:
        return None
