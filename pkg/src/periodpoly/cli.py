"""Command-line entry point: ``periodpoly <command> ...``.

Exit codes
----------
 0  success (every checked form has all roots on the circle)
 1  a form failed the circle check
 2  unknown label
 3  network failure, or --offline with a cold cache
 4  precision budget not met (too few coefficients, truncation cap)
 5  malformed input file or API response
 6  descriptor failed validation
 7  numerical failure (no convergence, theorem check violated, branch error)
 8  the data source stores fewer coefficients than requested
 9  argument outside the mathematical domain
64  command-line usage error
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import re
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .bounds import (
    Parity,
    exceptional_table,
    in_exceptional_set,
    weight5_minimal_level,
)
from .errors import (
    BranchError,
    ConvergenceError,
    DomainError,
    IllConditionedError,
    InsufficientDataError,
    MatchingError,
    MonotonicityViolation,
    NetworkError,
    NotFoundError,
    ParseError,
    PeriodPolyError,
    PrecisionError,
    ValidationFailed,
)
from .lmfdb_client import FetchRequest, LmfdbClient
from .lvalues import LambdaTable, build_lambda_table, truncation_length
from .newform import NewformDescriptor, load_from_file, validate
from .period import (
    DEFAULT_CIRCLE_TOL,
    build_period_polynomial,
    build_unit_circle_form,
    circle_report,
    equidistribution_report,
    find_roots,
    qf_decomposition,
    sign_certificate,
    theta_predictions,
)

log = logging.getLogger("periodpoly")

SCHEMA = "periodpoly.report/1"
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 64

# Checked in order, so subclasses come before their bases.
EXIT_CODES = (
    (NotFoundError, 2),
    (NetworkError, 3),
    (PrecisionError, 4),
    (ParseError, 5),
    (ValidationFailed, 6),
    (ConvergenceError, 7),
    (IllConditionedError, 7),
    (MonotonicityViolation, 7),
    (BranchError, 7),
    (MatchingError, 7),
    (OverflowError, 7),
    (InsufficientDataError, 8),
    (DomainError, 9),
)


def exit_code_for(exc: BaseException) -> int:
    for cls, code in EXIT_CODES:
        if isinstance(exc, cls):
            return code
    return 7


# --------------------------------------------------------------------------
# pipeline


@dataclass
class VerificationRecord:
    label: str
    level: int
    weight: int
    epsilon: list
    epsilon_source: str
    passed: bool
    tolerance: float
    max_deviation: float
    roots: list
    certificate: str
    certificate_margin: float
    equidistribution_max_deviation: float | None
    phase_offset: float | None
    antipodal_deviation: float | None
    qf_margin: float | None
    exceptional: bool
    truncation_length: int
    fe_residual: float
    tool_version: str = __version__
    timing: float = field(default=0.0, compare=False)

    def to_dict(self) -> dict:
        out = asdict(self)
        out.pop("timing")
        return out

    def csv_row(self) -> dict:
        row = self.to_dict()
        row["epsilon"] = _complex_text(complex(*self.epsilon))
        row["roots"] = " ".join(_complex_text(complex(*r)) for r in self.roots)
        return row


def _complex_text(z: complex) -> str:
    # adding 0.0 turns a negative zero into +0 so it prints without a sign
    return f"{z.real + 0.0:.15g}{z.imag + 0.0:+.15g}i"


def _pair(z: complex) -> list:
    return [float(z.real), float(z.imag)]


_LABEL = re.compile(r"^(\d+)\.(\d+)\.")


def load_source(source: str, client_factory, coeffs: int | None = None, offline: bool = False):
    """A descriptor (coefficient file or label) or a LambdaTable (critical-value file)."""
    path = Path(source)
    if path.is_file():
        try:
            doc = json.loads(path.read_text(encoding="utf-8"))
        except (ValueError, UnicodeDecodeError) as exc:
            raise ParseError(f"{source}: {exc}") from exc
        if isinstance(doc, dict) and "lambdas" in doc:
            return _table_from_document(doc)
        return load_from_file(path)
    if coeffs is None:
        m = _LABEL.match(source)
        coeffs = truncation_length(int(m[1]), int(m[2])) if m and int(m[2]) >= 3 else 1
    return client_factory().fetch_newform(FetchRequest(source, coeffs, offline))


def _table_from_document(doc) -> LambdaTable:
    try:
        eps = complex(*doc.get("epsilon", [1, 0]))
        lambdas = [complex(*v) for v in doc["lambdas"]]
        return LambdaTable.from_lambdas(
            int(doc["level"]), int(doc["weight"]), eps, lambdas, doc.get("label", "synthetic")
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed critical-value file: {exc}") from exc


def _table_for(source) -> tuple:
    if isinstance(source, LambdaTable):
        return source, "given"
    report = validate(source)
    if not report.passed:
        if report.rules() == {"coefficient count"}:
            v = report.violations[0]
            raise PrecisionError(
                f"{source.label}: {v.index} coefficients, the precision budget needs {v.magnitude:.0f}"
            )
        raise ValidationFailed(report)
    table = build_lambda_table(source)
    return table, "given" if source.root_number is not None else "solved"


def _qf_margin(table, form) -> float | None:
    if table.weight < 6:
        return None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        angles = theta_predictions(table.level, table.weight, form.phase_constant)
    return min(qf_decomposition(table, table.epsilon, float(t)).margin for t in angles)


def run_pipeline(source, tolerance: float = DEFAULT_CIRCLE_TOL):
    """validate → critical values → r_f → roots → circle check → certificate → angles."""
    start = time.perf_counter()
    table, eps_source = _table_for(source)
    k, N = table.weight, table.level
    poly = build_period_polynomial(table)
    roots = find_roots(poly)
    report = circle_report(roots, N, k, tolerance, poly=poly, label=table.label)
    form = build_unit_circle_form(table)
    cert = sign_certificate(form)
    report = _with_certificate(report, cert.status)
    if report.passed and k >= 4:
        try:
            report = equidistribution_report(report, form)
        except MatchingError as exc:
            log.warning("%s: %s", table.label, exc)
    record = VerificationRecord(
        label=table.label,
        level=N,
        weight=k,
        epsilon=_pair(table.epsilon),
        epsilon_source=eps_source,
        passed=report.passed,
        tolerance=tolerance,
        max_deviation=report.max_deviation,
        roots=[_pair(r) for r in report.roots],
        certificate=cert.status,
        certificate_margin=cert.margin,
        equidistribution_max_deviation=report.equidistribution_max_deviation,
        phase_offset=report.phase_offset,
        antipodal_deviation=report.antipodal_deviation,
        qf_margin=_qf_margin(table, form),
        exceptional=in_exceptional_set(k, N),
        truncation_length=table.truncation_length,
        fe_residual=table.fe_residual,
    )
    record.timing = time.perf_counter() - start
    return record, report


def _with_certificate(report, status):
    from dataclasses import replace

    return replace(report, certificate=status)


# --------------------------------------------------------------------------
# output


def _json_text(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def report_document(records, errors=()) -> dict:
    return {
        "schema": SCHEMA,
        "records": [r.to_dict() for r in sorted(records, key=lambda r: r.label)],
        "errors": sorted(errors, key=lambda e: e["source"]),
    }


def report_csv(records, errors=()) -> str:
    buf = io.StringIO()
    fields = [
        "label", "level", "weight", "epsilon", "epsilon_source", "passed", "tolerance",
        "max_deviation", "certificate", "certificate_margin", "equidistribution_max_deviation",
        "phase_offset", "antipodal_deviation", "qf_margin", "exceptional", "truncation_length",
        "fe_residual", "tool_version", "roots", "error",
    ]  # fmt: skip
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for r in sorted(records, key=lambda r: r.label):
        writer.writerow(r.csv_row())
    for e in sorted(errors, key=lambda e: e["source"]):
        writer.writerow({"label": e["source"], "error": f"{e['error']}: {e['message']}"})
    return buf.getvalue()


def write_report(path, records, errors=(), fmt="json", timings=None):
    """Write the report, and the run envelope (timestamps, timings) next to it."""
    path = Path(path)
    text = report_csv(records, errors) if fmt == "csv" else _json_text(report_document(records, errors))
    path.write_text(text, encoding="utf-8")
    envelope = {
        "schema": SCHEMA,
        "generated_at": datetime.now(timezone.utc).isoformat(),
        "tool_version": __version__,
        "timings": timings or {r.label: r.timing for r in records},
    }
    path.with_name(path.name + ".envelope.json").write_text(_json_text(envelope), encoding="utf-8")


def _summary(record: VerificationRecord, out):
    eps = complex(*record.epsilon)
    print(f"{record.label}: N={record.level} k={record.weight} ε={_complex_text(eps)} "
          f"({record.epsilon_source})", file=out)  # fmt: skip
    for i, r in enumerate(record.roots, 1):
        z = complex(*r)
        print(f"  root {i}: {_complex_text(z)}  |z|={abs(z):.15f}", file=out)
    print(f"  max |√N|ρ| - 1| = {record.max_deviation:.3e} (tolerance {record.tolerance:g})", file=out)
    print(f"  sign certificate: {record.certificate} (margin {record.certificate_margin:.3g})", file=out)
    if record.equidistribution_max_deviation is not None:
        print(f"  angle deviation: max {record.equidistribution_max_deviation:.3e}, "
              f"offset {record.phase_offset:.3e}", file=out)  # fmt: skip
    if record.qf_margin is not None:
        print(f"  Q_f margin: {record.qf_margin:.4g}", file=out)
    print(f"  exceptional region: {'yes' if record.exceptional else 'no'}", file=out)
    print(f"  verdict: {'PASS' if record.passed else 'FAIL'}", file=out)


# --------------------------------------------------------------------------
# commands


def _client_factory(args):
    cache = {}

    def make():
        if "client" not in cache:
            transport = None
            if args.mock_api:
                from .mockapi import corpus_transport

                transport = corpus_transport(embedding=args.embedding)
            cache["client"] = LmfdbClient(
                base_url=args.base_url,
                cache_dir=args.cache_dir,
                transport=transport,
                rate=args.rate,
                embedding=args.embedding,
            )
        return cache["client"]

    return make


def cmd_fetch(args, out) -> int:
    client = _client_factory(args)()
    d = client.fetch_newform(FetchRequest(args.label, args.coeffs, args.offline))
    entries = [e for e in client.cache_entries(d.label) if e.num_coefficients >= args.coeffs]
    where = max(entries, key=lambda e: e.num_coefficients).path if entries else None
    if args.output:
        Path(args.output).write_text(json.dumps(d.to_document(), separators=(",", ":")), encoding="utf-8")
        where = args.output
    print(f"{d.label}: N={d.level} k={d.weight}, {d.num_coefficients} coefficients -> {where}", file=out)
    return EXIT_OK


def cmd_verify(args, out) -> int:
    source = load_source(args.source, _client_factory(args), args.coeffs, args.offline)
    record, _ = run_pipeline(source, args.tolerance)
    _summary(record, out)
    if args.report:
        write_report(args.report, [record], fmt=args.format)
    return EXIT_OK if record.passed else EXIT_FAIL


def cmd_bounds(args, out) -> int:
    parities = [Parity.EVEN, Parity.ODD] if args.parity == "both" else [Parity(args.parity)]
    tables = {p: exceptional_table(p, full=args.full) for p in parities}
    w5 = weight5_minimal_level() if args.parity == "both" else None
    if args.format == "json":
        doc = {p.value: [{"m": r.m, "k": r.weight, "N": r.minimal_N} for r in rows]
               for p, rows in tables.items()}  # fmt: skip
        if w5 is not None:
            doc["weight5"] = w5
        out.write(_json_text(doc))
        return EXIT_OK
    if args.format == "csv":
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["parity", "m", "k", "N"])
        for p, rows in tables.items():
            for r in rows:
                writer.writerow([p.value, r.m, r.weight, r.minimal_N])
        if w5 is not None:
            writer.writerow(["weight5", "", 5, w5])
        return EXIT_OK
    for p, rows in tables.items():
        kform = "2m+2" if p is Parity.EVEN else "2m+3"
        print(f"{p.value} weight (k = {kform}): criterion holds for N >= N(m)", file=out)
        print(f"  {'m':>4} {'k':>4} {'N(m)':>6}", file=out)
        for r in rows:
            print(f"  {r.m:>4} {r.weight:>4} {r.minimal_N:>6}", file=out)
    if w5 is not None:
        print(f"k=5: N ≥ {w5}", file=out)
    return EXIT_OK


def cmd_equi(args, out) -> int:
    source = load_source(args.source, _client_factory(args), args.coeffs, args.offline)
    record, report = run_pipeline(source, args.tolerance)
    rows = []
    for i, (rho, pred, dev) in enumerate(
        zip(report.roots, report.predictions, report.prediction_deviations), 1
    ):
        arg = float(np.mod(np.angle(1j * math.sqrt(record.level) * rho), 2 * math.pi))
        rows.append({"root": i, "prediction": pred, "argument": arg, "deviation": dev})
    if args.format == "json":
        doc = {
            "label": record.label,
            "rows": rows,
            "max_deviation": record.equidistribution_max_deviation,
            "phase_offset": record.phase_offset,
            "antipodal_deviation": record.antipodal_deviation,
        }
        out.write(_json_text(doc))
    elif args.format == "csv":
        writer = csv.DictWriter(out, fieldnames=["root", "prediction", "argument", "deviation"],
                                lineterminator="\n")  # fmt: skip
        writer.writeheader()
        writer.writerows(rows)
    else:
        print(f"{record.label}: N={record.level} k={record.weight}", file=out)
        print(f"  {'root':>4} {'θ predicted':>14} {'argument':>14} {'deviation':>12}", file=out)
        for r in rows:
            print(f"  {r['root']:>4} {r['prediction']:>14.10f} {r['argument']:>14.10f} "
                  f"{r['deviation']:>12.3e}", file=out)  # fmt: skip
        if record.antipodal_deviation is not None:
            print(f"  |arg z1 - arg z2 - π| mod 2π = {record.antipodal_deviation:.3e}", file=out)
        if record.phase_offset is not None:
            print(f"  mean offset = {record.phase_offset:.3e}", file=out)
    return EXIT_OK if record.passed else EXIT_FAIL


def _batch_one(source, args, factory):
    try:
        loaded = load_source(source, factory, args.coeffs, args.offline)
        record, _ = run_pipeline(loaded, args.tolerance)
        return record, None
    except (PeriodPolyError, OverflowError) as exc:
        return None, {
            "source": source,
            "error": type(exc).__name__,
            "message": str(exc),
            "exit_code": exit_code_for(exc),
        }


def cmd_batch(args, out) -> int:
    lines = Path(args.manifest).read_text(encoding="utf-8").splitlines()
    sources = [s.strip() for s in lines if s.strip() and not s.lstrip().startswith("#")]
    factory = _client_factory(args)
    factory()  # one shared client; its rate limiter serializes requests
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        results = list(pool.map(lambda s: _batch_one(s, args, factory), sources))
    records = [r for r, _ in results if r is not None]
    errors = [e for _, e in results if e is not None]
    if args.report:
        write_report(args.report, records, errors, args.format)
    for r in sorted(records, key=lambda r: r.label):
        print(f"{r.label:<24} {'PASS' if r.passed else 'FAIL'}  max dev {r.max_deviation:.2e}  "
              f"certificate {r.certificate}", file=out)  # fmt: skip
    for e in sorted(errors, key=lambda e: e["source"]):
        print(f"{e['source']:<24} ERROR {e['error']}: {e['message']}", file=out)
    return EXIT_OK if not errors and all(r.passed for r in records) else EXIT_FAIL


def cmd_seed_cache(args, out) -> int:
    """Write the built-in corpus into the cache as coefficient files."""
    from .corpus import CORPUS, corpus_form

    client = _client_factory(args)()
    labels = args.labels or list(CORPUS)
    for label in labels:
        if label not in CORPUS:
            raise NotFoundError(f"{label!r} is not in the built-in corpus")
        path = client.store(corpus_form(label, args.coeffs))
        print(f"{label} -> {path}", file=out)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_source_options(p):
    p.add_argument("source", help="coefficient file, critical-value file, or LMFDB label")
    p.add_argument("--tolerance", type=float, default=DEFAULT_CIRCLE_TOL,
                   help="allowed |√N|ρ| - 1| (default %(default)g)")  # fmt: skip
    p.add_argument("--coeffs", type=int, default=None,
                   help="coefficients to request when fetching a label")  # fmt: skip
    p.add_argument("--offline", action="store_true", help="use the cache only")


def build_parser() -> argparse.ArgumentParser:
    codes = __doc__.split("Exit codes", 1)[1]
    parser = _Parser(
        prog="periodpoly",
        description="Check that period-polynomial roots lie on |z| = 1/√N.",
        epilog="exit codes:" + codes.split("\n", 2)[2],
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--cache-dir", default=None, help="coefficient cache (env PERIODPOLY_CACHE)")
    parser.add_argument("--base-url", default=None, help="API root (env LMFDB_BASE_URL)")
    parser.add_argument("--mock-api", action="store_true",
                        help="answer API queries from the built-in corpus instead of the network")  # fmt: skip
    parser.add_argument("--rate", type=float, default=1.0, help="max requests per second")
    parser.add_argument("--embedding", default="1.1",
                        help="embedding for forms with non-rational coefficients")  # fmt: skip
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("fetch", help="download coefficients into the cache")
    p.add_argument("label")
    p.add_argument("--coeffs", type=int, default=200)
    p.add_argument("--offline", action="store_true")
    p.add_argument("--output", help="also write the coefficient file here")
    p.set_defaults(func=cmd_fetch)

    p = sub.add_parser("verify", help="run the full root check on one form")
    _add_source_options(p)
    p.add_argument("--report", help="write a machine-readable report here")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("bounds", help="print the level thresholds N(m)")
    p.add_argument("--parity", choices=["even", "odd", "both"], default="both")
    p.add_argument("--format", choices=["text", "json", "csv"], default="text")
    p.add_argument("--full", action="store_true", help="one row per m instead of per distinct N(m)")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("equi", help="compare root arguments with predicted angles")
    _add_source_options(p)
    p.add_argument("--format", choices=["text", "json", "csv"], default="text")
    p.set_defaults(func=cmd_equi)

    p = sub.add_parser("batch", help="verify every form listed in a manifest")
    p.add_argument("manifest", help="file with one label or path per line")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--report")
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.add_argument("--tolerance", type=float, default=DEFAULT_CIRCLE_TOL)
    p.add_argument("--coeffs", type=int, default=None)
    p.add_argument("--offline", action="store_true")
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("seed-cache", help="store the built-in corpus forms in the cache")
    p.add_argument("labels", nargs="*")
    p.add_argument("--coeffs", type=int, default=None)
    p.set_defaults(func=cmd_seed_cache)
    return parser


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")  # fmt: skip
    try:
        return args.func(args, out)
    except (PeriodPolyError, OverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
