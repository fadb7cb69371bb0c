"""LMFDB classical-modular-forms client with an on-disk coefficient cache.

One-dimensional newforms are read from ``mf_newforms`` (the ``traces`` field
is a_1, a_2, ... for a rational form).  Higher-dimensional forms need an
embedding, which is read from ``mf_hecke_cc`` (``an_normalized`` holds
a_n / n^{(k-1)/2} as [re, im] pairs).

Cached coefficient files are named ``<label>__<tier>.json`` where the tier is
the power of two at or above the requested coefficient count.
"""

from __future__ import annotations

import json
import logging
import os
import re
import tempfile
import threading
import time
from dataclasses import dataclass
from datetime import timedelta
from pathlib import Path

import httpx
import platformdirs

from .errors import (
    InsufficientDataError,
    NetworkError,
    NotFoundError,
    ParseError,
    SchemaError,
    ValidationFailed,
)
from .newform import NewformDescriptor, dumps, loads, validate

__all__ = [
    "FetchRequest",
    "CacheEntry",
    "LmfdbClient",
    "RateLimiter",
    "DEFAULT_BASE_URL",
    "tier_for",
    "default_cache_dir",
]

log = logging.getLogger(__name__)

DEFAULT_BASE_URL = "https://www.lmfdb.org/api"
DEFAULT_MAX_AGE = timedelta(days=30)
MIN_TIER = 64
# Rules that concern the request size rather than the data; verify reports them.
_SIZE_RULES = {"coefficient count"}


def tier_for(count: int) -> int:
    return max(MIN_TIER, 1 << (count - 1).bit_length())


def default_cache_dir() -> Path:
    env = os.environ.get("PERIODPOLY_CACHE")
    if env:
        return Path(env)
    return Path(platformdirs.user_cache_dir("periodpoly"))


@dataclass(frozen=True)
class FetchRequest:
    label: str
    min_coefficients: int = 200
    offline_only: bool = False

    def __post_init__(self):
        if self.min_coefficients < 1:
            raise ValueError("min_coefficients must be >= 1")


@dataclass(frozen=True)
class CacheEntry:
    label: str
    fetched_at: float
    payload: dict
    path: Path

    @property
    def num_coefficients(self) -> int:
        return len(self.payload["coeffs"])


class RateLimiter:
    """Spaces calls at least ``1 / rate`` seconds apart across threads."""

    def __init__(self, rate: float = 1.0, clock=time.monotonic, sleep=time.sleep):
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.interval = 1.0 / rate
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._next = None

    def __enter__(self):
        self._lock.acquire()
        now = self._clock()
        if self._next is not None and now < self._next:
            self._sleep(self._next - now)
            now = self._clock()
        self._next = now + self.interval
        return self

    def __exit__(self, *exc):
        self._lock.release()


_SAFE = re.compile(r"[^A-Za-z0-9._-]")


class LmfdbClient:
    def __init__(
        self,
        base_url: str | None = None,
        cache_dir=None,
        transport: httpx.BaseTransport | None = None,
        rate: float = 1.0,
        max_age: timedelta = DEFAULT_MAX_AGE,
        embedding: str = "1.1",
        timeout: float = 30.0,
        clock=time.monotonic,
        sleep=time.sleep,
        wall_clock=time.time,
    ):
        self.base_url = (base_url or os.environ.get("LMFDB_BASE_URL") or DEFAULT_BASE_URL).rstrip("/")
        self.cache_dir = Path(cache_dir) if cache_dir is not None else default_cache_dir()
        self.max_age = max_age
        self.embedding = embedding
        self.requests_made = 0
        self._limiter = RateLimiter(rate, clock, sleep)
        self._now = wall_clock
        self._http = httpx.Client(transport=transport, timeout=timeout)

    def close(self):
        self._http.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()

    # -- cache -------------------------------------------------------------

    def _path(self, label: str, tier: int) -> Path:
        return self.cache_dir / f"{_SAFE.sub('_', label)}__{tier}.json"

    def cache_entries(self, label: str | None = None) -> list:
        if not self.cache_dir.is_dir():
            return []
        pattern = f"{_SAFE.sub('_', label)}__*.json" if label else "*__*.json"
        out = []
        for path in sorted(self.cache_dir.glob(pattern)):
            try:
                payload = json.loads(path.read_text(encoding="utf-8"))
                fetched = path.stat().st_mtime
            except (OSError, ValueError):
                continue
            if label is not None and payload.get("label") != label:
                continue
            out.append(CacheEntry(payload.get("label", ""), fetched, payload, path))
        return out

    def _cached(self, req: FetchRequest):
        """Largest cached entry with enough coefficients, or None."""
        usable = [
            e for e in self.cache_entries(req.label) if e.num_coefficients >= req.min_coefficients
        ]
        return max(usable, key=lambda e: e.num_coefficients, default=None)

    def _fresh(self, entry: CacheEntry) -> bool:
        return self._now() - entry.fetched_at <= self.max_age.total_seconds()

    def store(self, descriptor: NewformDescriptor, tier: int | None = None) -> Path:
        """Write a coefficient file atomically (temp file, then rename)."""
        tier = tier or tier_for(descriptor.num_coefficients)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        path = self._path(descriptor.label, tier)
        fd, tmp = tempfile.mkstemp(dir=self.cache_dir, prefix=".tmp-", suffix=".json")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(dumps(descriptor))
            os.replace(tmp, path)
        except BaseException:
            Path(tmp).unlink(missing_ok=True)
            raise
        return path

    def purge_cache(self, older_than) -> int:
        """Remove entries at least ``older_than`` old (timedelta or seconds)."""
        seconds = older_than.total_seconds() if isinstance(older_than, timedelta) else older_than
        now = self._now()
        removed = 0
        for entry in self.cache_entries():
            if now - entry.fetched_at >= seconds:
                entry.path.unlink(missing_ok=True)
                removed += 1
        return removed

    # -- network -----------------------------------------------------------

    def _get(self, collection: str, params: dict) -> list:
        url = f"{self.base_url}/{collection}/"
        with self._limiter:
            self.requests_made += 1
            try:
                resp = self._http.get(url, params={**params, "_format": "json"})
            except httpx.HTTPError as exc:
                raise NetworkError(f"{url}: {exc}") from exc
        if resp.status_code == 404:
            return []
        if resp.status_code >= 400:
            raise NetworkError(f"{url}: HTTP {resp.status_code}")
        try:
            body = resp.json()
        except ValueError as exc:
            raise ParseError(f"{url}: response is not JSON") from exc
        data = body.get("data") if isinstance(body, dict) else None
        if not isinstance(data, list):
            raise ParseError(f"{url}: response has no 'data' list")
        return data

    def _download(self, req: FetchRequest) -> NewformDescriptor:
        rows = self._get("mf_newforms", {"label": req.label})
        if not rows:
            raise NotFoundError(f"no newform with label {req.label!r}")
        row = rows[0]
        try:
            level, weight = int(row["level"]), int(row["weight"])
            dim = int(row.get("dim", 1))
            char = f"{level}.{row['char_orbit_label']}"
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"{req.label}: unexpected mf_newforms record ({exc})") from exc
        eps = row.get("root_number")
        if dim == 1:
            values = row.get("traces")
            if not isinstance(values, list):
                raise ParseError(f"{req.label}: mf_newforms record has no traces")
        else:
            emb = f"{req.label}.{self.embedding}"
            cc = self._get("mf_hecke_cc", {"label": emb})
            if not cc:
                raise NotFoundError(f"no embedding {emb!r}")
            normalized = cc[0].get("an_normalized")
            if not isinstance(normalized, list):
                raise ParseError(f"{emb}: record has no an_normalized")
            scale = (weight - 1) / 2
            try:
                values = [
                    complex(re_, im) * (n**scale)
                    for n, (re_, im) in enumerate(normalized, start=1)
                ]
            except (TypeError, ValueError) as exc:
                raise ParseError(f"{emb}: malformed an_normalized") from exc
            # embeddings of rational coefficients come back as floats; round the exact ones
            values = [
                (round(v.real), round(v.imag))
                if abs(v - complex(round(v.real), round(v.imag))) < 1e-6
                else (v.real, v.imag)
                for v in values
            ]
        if len(values) < req.min_coefficients:
            raise InsufficientDataError(
                f"{req.label}: LMFDB stores {len(values)} coefficients, {req.min_coefficients} requested"
            )
        try:
            descriptor = NewformDescriptor.from_values(
                req.label, level, weight, char, values, root_number=eps
            )
            # round-trip through the file schema so cached and fresh results agree bit for bit
            descriptor = loads(dumps(descriptor))
        except (SchemaError, TypeError, ValueError) as exc:
            raise ParseError(f"{req.label}: {exc}") from exc
        return descriptor

    def _checked(self, descriptor: NewformDescriptor) -> NewformDescriptor:
        report = validate(descriptor)
        real = tuple(v for v in report.violations if v.rule not in _SIZE_RULES)
        if real:
            raise ValidationFailed(type(report)(real))
        return descriptor

    def fetch_newform(self, req: FetchRequest) -> NewformDescriptor:
        entry = self._cached(req)
        if entry is not None and (req.offline_only or self._fresh(entry)):
            return self._checked(loads(json.dumps(entry.payload, separators=(",", ":"))))
        if req.offline_only:
            raise NetworkError(f"{req.label}: offline and not in cache")
        try:
            descriptor = self._download(req)
        except NetworkError:
            if entry is not None:
                log.warning("network failure for %s; using stale cache %s", req.label, entry.path)
                return self._checked(loads(json.dumps(entry.payload, separators=(",", ":"))))
            raise
        self._checked(descriptor)
        self.store(descriptor, tier_for(max(req.min_coefficients, descriptor.num_coefficients)))
        return descriptor
