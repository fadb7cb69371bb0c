"""An httpx transport that answers LMFDB-style queries from the built-in corpus.

Used for hermetic tests and for running the tool where the real API is not
reachable.  Rational forms are served as ``mf_newforms`` records with
``traces``; forms with non-real coefficients are served as two-dimensional
records whose embedding lives in ``mf_hecke_cc``.
"""

from __future__ import annotations

import json
from urllib.parse import urlparse

import httpx

from .corpus import CORPUS
from .newform import NewformDescriptor

__all__ = ["corpus_transport", "DEFAULT_STORED"]

DEFAULT_STORED = 2048


def _char_orbit(entry):
    prefix = f"{entry.level}."
    return entry.char[len(prefix):] if entry.char.startswith(prefix) else entry.char


def _records(label, stored, embedding):
    entry = CORPUS.get(label)
    if entry is None:
        return None, None
    values = NewformDescriptor.from_values(label, entry.level, entry.weight, entry.char,
                                          entry.build(stored)).coefficients
    complex_coeffs = any(im != 0 for _, im in values)
    row = {
        "label": label,
        "level": entry.level,
        "weight": entry.weight,
        "char_orbit_label": _char_orbit(entry),
        "dim": 2 if complex_coeffs else 1,
    }
    if entry.root_number is not None:
        row["root_number"] = list(entry.root_number)
    if not complex_coeffs:
        row["traces"] = [re for re, _ in values]
        return row, None
    scale = (entry.weight - 1) / 2
    cc = {
        "label": f"{label}.{embedding}",
        "an_normalized": [[re / n**scale, im / n**scale] for n, (re, im) in enumerate(values, 1)],
    }
    return row, cc


def corpus_transport(stored: int = DEFAULT_STORED, embedding: str = "1.1", log: list | None = None):
    """MockTransport serving ``stored`` coefficients per corpus form.

    Every handled request is appended to ``log`` when one is given.
    """

    def handler(request: httpx.Request) -> httpx.Response:
        if log is not None:
            log.append(request)
        path = urlparse(str(request.url)).path.rstrip("/")
        collection = path.rsplit("/", 1)[-1]
        label = request.url.params.get("label", "")
        data = []
        if collection == "mf_newforms":
            row, _ = _records(label, stored, embedding)
            data = [row] if row else []
        elif collection == "mf_hecke_cc":
            base, _, emb = label.rpartition(".")
            base, _, first = base.rpartition(".")
            if f"{first}.{emb}" == embedding:
                _, cc = _records(base, stored, embedding)
                data = [cc] if cc else []
        else:
            return httpx.Response(404)
        body = json.dumps({"data": data}).encode()
        return httpx.Response(200, content=body, headers={"content-type": "application/json"})

    return httpx.MockTransport(handler)
