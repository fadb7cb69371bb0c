import json
import os
from datetime import timedelta

import httpx
import pytest

from periodpoly.corpus import corpus_form
from periodpoly.errors import (
    InsufficientDataError,
    NetworkError,
    NotFoundError,
    ParseError,
    ValidationFailed,
)
from periodpoly.lmfdb_client import (
    DEFAULT_BASE_URL,
    FetchRequest,
    LmfdbClient,
    RateLimiter,
    default_cache_dir,
    tier_for,
)
from periodpoly.mockapi import corpus_transport
from periodpoly.newform import dumps

WEIGHT7 = "11.7.b.a"


def _client(tmp_path, handler, **kw):
    return LmfdbClient(base_url="https://lmfdb.test/api", cache_dir=tmp_path / "c",
                       transport=httpx.MockTransport(handler), sleep=lambda s: None, **kw)


def _json(body, status=200):
    return lambda request: httpx.Response(status, content=json.dumps(body).encode())


class TestHelpers:
    @pytest.mark.parametrize("count, tier", [(1, 64), (64, 64), (65, 128), (200, 256), (1024, 1024)])
    def test_tier(self, count, tier):
        assert tier_for(count) == tier

    def test_request_validation(self):
        with pytest.raises(ValueError):
            FetchRequest("x", 0)

    def test_cache_dir_env(self, monkeypatch, tmp_path):
        monkeypatch.setenv("PERIODPOLY_CACHE", str(tmp_path))
        assert default_cache_dir() == tmp_path
        monkeypatch.delenv("PERIODPOLY_CACHE")
        assert "periodpoly" in str(default_cache_dir())

    def test_base_url_env(self, monkeypatch, tmp_path):
        monkeypatch.setenv("LMFDB_BASE_URL", "https://mirror.test/api/")
        assert LmfdbClient(cache_dir=tmp_path).base_url == "https://mirror.test/api"
        monkeypatch.delenv("LMFDB_BASE_URL")
        assert LmfdbClient(cache_dir=tmp_path).base_url == DEFAULT_BASE_URL


class TestFetch:
    def test_weight7(self, client):
        d = client.fetch_newform(FetchRequest(WEIGHT7, 200))
        assert (d.level, d.weight) == (11, 7)
        assert d.num_coefficients >= 200
        assert [c for c, _ in d.coefficients[:5]] == [1, 0, 10, 64, 74]
        assert d.epsilon == 1

    def test_matches_corpus(self, client):
        for label in (WEIGHT7, "5.4.a.a", "tw.3.6.a.a.chi5"):
            d = client.fetch_newform(FetchRequest(label, 300))
            ref = corpus_form(label, d.num_coefficients)
            assert d.coefficients == ref.coefficients

    def test_complex_form_via_embedding(self, client, request_log):
        d = client.fetch_newform(FetchRequest("tw.3.6.a.a.chi5", 100))
        assert not d.is_real
        assert [r.url.path for r in request_log] == ["/api/mf_newforms/", "/api/mf_hecke_cc/"]
        assert request_log[1].url.params["label"] == "tw.3.6.a.a.chi5.1.1"

    def test_missing_embedding(self, tmp_path):
        c = LmfdbClient(base_url="https://lmfdb.test/api", cache_dir=tmp_path,
                        transport=corpus_transport(embedding="2.1"), embedding="1.1",
                        sleep=lambda s: None)
        with pytest.raises(NotFoundError):
            c.fetch_newform(FetchRequest("tw.3.6.a.a.chi5", 100))

    def test_not_found(self, client):
        with pytest.raises(NotFoundError):
            client.fetch_newform(FetchRequest("999.99.z.z", 10))

    def test_insufficient(self, client):
        with pytest.raises(InsufficientDataError):
            client.fetch_newform(FetchRequest(WEIGHT7, 513))

    def test_offline_warm_cache(self, client, request_log):
        client.fetch_newform(FetchRequest(WEIGHT7, 200))
        before = len(request_log)
        again = client.fetch_newform(FetchRequest(WEIGHT7, 200, offline_only=True))
        assert len(request_log) == before
        assert again.label == WEIGHT7

    def test_fresh_cache_skips_network(self, client):
        client.fetch_newform(FetchRequest(WEIGHT7, 200))
        n = client.requests_made
        client.fetch_newform(FetchRequest(WEIGHT7, 100))
        assert client.requests_made == n

    def test_larger_request_refetches(self, client):
        client.store(corpus_form(WEIGHT7, 100))
        n = client.requests_made
        d = client.fetch_newform(FetchRequest(WEIGHT7, 300))
        assert client.requests_made == n + 1
        assert d.num_coefficients >= 300

    def test_offline_cold_cache(self, client):
        with pytest.raises(NetworkError):
            client.fetch_newform(FetchRequest(WEIGHT7, 50, offline_only=True))
        assert client.requests_made == 0

    def test_bit_identical_refetch(self, client, tmp_path):
        first = client.fetch_newform(FetchRequest(WEIGHT7, 200))
        cached = client.fetch_newform(FetchRequest(WEIGHT7, 200, offline_only=True))
        other = LmfdbClient(base_url="https://lmfdb.test/api", cache_dir=tmp_path / "other",
                            transport=corpus_transport(stored=512), sleep=lambda s: None)
        fresh = other.fetch_newform(FetchRequest(WEIGHT7, 200))
        assert dumps(first) == dumps(cached) == dumps(fresh)

    def test_stale_fallback(self, tmp_path, caplog):
        now = [1e9]
        down = {"flag": False}
        good = corpus_transport(stored=256)

        def handler(request):
            if down["flag"]:
                raise httpx.ConnectError("down", request=request)
            return good.handle_request(request)

        c = _client(tmp_path, handler, wall_clock=lambda: now[0], max_age=timedelta(days=1))
        c.fetch_newform(FetchRequest(WEIGHT7, 100))
        entry = c.cache_entries(WEIGHT7)[0]
        os.utime(entry.path, (now[0], now[0]))
        now[0] += 3 * 86400
        down["flag"] = True
        with caplog.at_level("WARNING"):
            d = c.fetch_newform(FetchRequest(WEIGHT7, 100))
        assert d.label == WEIGHT7
        assert "stale" in caplog.text

    def test_network_error_without_cache(self, tmp_path):
        def handler(request):
            raise httpx.ConnectError("down", request=request)

        with pytest.raises(NetworkError):
            _client(tmp_path, handler).fetch_newform(FetchRequest(WEIGHT7, 10))

    def test_server_error(self, tmp_path):
        with pytest.raises(NetworkError):
            _client(tmp_path, _json({}, 503)).fetch_newform(FetchRequest(WEIGHT7, 10))

    @pytest.mark.parametrize(
        "handler",
        [
            lambda r: httpx.Response(200, content=b"<html>"),
            _json({"rows": []}),
            _json({"data": [{"label": WEIGHT7, "weight": 7}]}),
            _json({"data": [{"label": WEIGHT7, "level": 11, "weight": 7, "char_orbit_label": "b",
                             "dim": 1}]}),
            _json({"data": [{"label": WEIGHT7, "level": 11, "weight": 7, "char_orbit_label": "b",
                             "dim": 1, "traces": ["a"] * 20}]}),
        ],
    )
    def test_parse_errors(self, tmp_path, handler):
        with pytest.raises(ParseError):
            _client(tmp_path, handler).fetch_newform(FetchRequest(WEIGHT7, 10))

    def test_validation_failure(self, tmp_path):
        traces = [c for c, _ in corpus_form(WEIGHT7, 100).coefficients]
        traces[1] = 10**6  # breaks the Deligne bound at p = 2
        row = {"label": WEIGHT7, "level": 11, "weight": 7, "char_orbit_label": "b", "dim": 1,
               "traces": traces}
        c = _client(tmp_path, _json({"data": [row]}))
        with pytest.raises(ValidationFailed):
            c.fetch_newform(FetchRequest(WEIGHT7, 50))
        assert c.cache_entries() == []


class TestRateLimit:
    def test_spacing(self, client, clock):
        for label in (WEIGHT7, "5.4.a.a", "3.6.a.a"):
            client.fetch_newform(FetchRequest(label, 50))
        assert client.requests_made == 3
        assert clock.sleeps == [1.0, 1.0]

    def test_no_sleep_after_gap(self, clock):
        limiter = RateLimiter(2.0, clock, clock.sleep)
        with limiter:
            pass
        clock.now += 5
        with limiter:
            pass
        assert clock.sleeps == []

    def test_bad_rate(self):
        with pytest.raises(ValueError):
            RateLimiter(0)


class TestCache:
    def test_file_name_and_tier(self, client):
        client.fetch_newform(FetchRequest(WEIGHT7, 200))
        (entry,) = client.cache_entries(WEIGHT7)
        # the tier follows the number of coefficients the server returned
        assert entry.path.name == "11.7.b.a__512.json"
        assert entry.num_coefficients == 512
        client.store(corpus_form(WEIGHT7, 200))
        assert client.cache_entries(WEIGHT7)[0].path.name == "11.7.b.a__256.json"

    def test_purge_empty(self, client):
        assert client.purge_cache(timedelta(0)) == 0

    def test_purge(self, client):
        client.fetch_newform(FetchRequest(WEIGHT7, 50))
        assert client.purge_cache(float("inf")) == 0
        assert client.purge_cache(timedelta(0)) == 1
        assert client.cache_entries() == []

    def test_atomic_store(self, client, monkeypatch):
        d = corpus_form(WEIGHT7, 64)
        client.store(d)

        def boom(*a, **k):
            raise OSError("disk full")

        monkeypatch.setattr(os, "replace", boom)
        with pytest.raises(OSError):
            client.store(corpus_form(WEIGHT7, 64).truncated(10), 64)
        files = sorted(p.name for p in client.cache_dir.iterdir())
        assert files == ["11.7.b.a__64.json"]
        assert client.cache_entries(WEIGHT7)[0].num_coefficients == 64

    def test_corrupt_file_ignored(self, client):
        client.cache_dir.mkdir(parents=True)
        (client.cache_dir / "11.7.b.a__64.json").write_text("{not json")
        assert client.cache_entries(WEIGHT7) == []
