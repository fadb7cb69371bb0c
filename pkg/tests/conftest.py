import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from periodpoly.corpus import corpus_form, corpus_labels  # noqa: E402
from periodpoly.lmfdb_client import LmfdbClient  # noqa: E402
from periodpoly.lvalues import build_lambda_table  # noqa: E402
from periodpoly.mockapi import corpus_transport  # noqa: E402

WEIGHT7 = "11.7.b.a"

REFERENCE_ROOTS = [
    complex(-0.294570496142963, -0.0643219535709181),
    complex(-0.204098252273756, 0.221930156418385),
    complex(0.0, 0.301511344577764),
    complex(0.204098252273756, 0.221930156418385),
    complex(0.294570496142963, -0.0643219535709181),
]


@pytest.fixture(scope="session")
def corpus_tables():
    return {label: build_lambda_table(corpus_form(label)) for label in corpus_labels()}


@pytest.fixture(scope="session")
def weight7_table(corpus_tables):
    return corpus_tables[WEIGHT7]


class FakeClock:
    def __init__(self):
        self.now = 0.0
        self.sleeps = []

    def __call__(self):
        return self.now

    def sleep(self, seconds):
        self.sleeps.append(seconds)
        self.now += seconds


@pytest.fixture
def clock():
    return FakeClock()


@pytest.fixture
def request_log():
    return []


@pytest.fixture
def client(tmp_path, clock, request_log):
    c = LmfdbClient(
        base_url="https://lmfdb.test/api",
        cache_dir=tmp_path / "cache",
        transport=corpus_transport(stored=512, log=request_log),
        clock=clock,
        sleep=clock.sleep,
    )
    yield c
    c.close()
