"""Command-line front end: validate, ingest, query, analyze, export, serve.

Exit codes: 0 success, 1 validation failures (row diagnostics on
stderr), 2 operational errors (missing files, unreachable registry,
storage trouble). Defaults come from CROCI_INDEX, CROCI_FIXTURES,
CROCI_REGISTRY_URL, CROCI_RATE_LIMIT and CROCI_SIZE_CAP where a flag
is not given.
"""
from __future__ import annotations

import datetime as _dt
import json
import sys
from pathlib import Path

import click

from .analysis import (
    AnalysisResults,
    InvalidCountsError,
    aggregate_by_category,
    build_coverage,
    emit_figure_data,
    gap_populations,
    mean_references_per_citing,
    participation_report,
    rank_publishers_by_open,
)
from .doi import MalformedDoiError, normalize_doi
from .enrich import RegistryClient, RegistryUnavailableError
from .errors import CrociError
from .index import (
    CitationIndex,
    CitationKey,
    StorageFailureError,
    WriteFailureError,
)
from .ingest import SubmissionFormatError, parse_csv_submission, parse_scholix_submission
from .orcid import MalformedOrcidError, OrcidChecksumError, validate_orcid
from .service import DEFAULT_SIZE_CAP, citation_view, create_app

# Checksum-valid placeholder identity for parse-only validation runs.
_VALIDATION_ORCID = "0000-0000-0000-0001"
_VALIDATION_REF = "validation:unsubmitted"


def _fail(message: str, code: int) -> None:
    click.echo(message, err=True)
    sys.exit(code)


def _infer_format(path: str, explicit: str | None) -> str:
    if explicit:
        return explicit
    return "scholix" if path.endswith((".json", ".scholix")) else "csv"


def _parse_submission(path: str, fmt: str, submitter, archive_ref: str):
    try:
        content = Path(path).read_bytes()
    except OSError as exc:
        _fail(f"cannot read {path}: {exc}", 2)
    parse = parse_csv_submission if fmt == "csv" else parse_scholix_submission
    try:
        return parse(
            content,
            submitter=submitter,
            archive_ref=archive_ref,
            received_at=_dt.datetime.now(_dt.timezone.utc),
        )
    except SubmissionFormatError as exc:
        _fail(f"{path}: {exc}", 1)


def _report_row_errors(row_errors) -> None:
    for err in row_errors:
        click.echo(f"row {err.row}: {err.code.value}: {err.message}", err=True)


def _open_index(path: str) -> CitationIndex:
    try:
        return CitationIndex(path)
    except StorageFailureError as exc:
        _fail(str(exc), 2)


def _registry_client(fixtures, registry_url, rate_limit) -> RegistryClient:
    if fixtures:
        return RegistryClient(fixture_dir=fixtures, rate_limit=rate_limit)
    if registry_url:
        return RegistryClient(base_url=registry_url, rate_limit=rate_limit)
    _fail("no metadata source: pass --fixtures or --registry-url", 2)


@click.group()
def croci() -> None:
    """Crowdsourced open citation index tools."""


@croci.command()
@click.argument("file", type=click.Path())
@click.option("--format", "fmt", type=click.Choice(["csv", "scholix"]), default=None)
def validate(file: str, fmt: str | None) -> None:
    """Parse a submission file and report per-row diagnostics."""
    batch = _parse_submission(
        file,
        _infer_format(file, fmt),
        validate_orcid(_VALIDATION_ORCID),
        _VALIDATION_REF,
    )
    _report_row_errors(batch.row_errors)
    click.echo(f"{len(batch.records)} records, {len(batch.row_errors)} errors")
    if batch.row_errors:
        sys.exit(1)


@croci.command()
@click.argument("file", type=click.Path())
@click.option("--orcid", required=True, help="Submitter ORCID iD.")
@click.option("--archive-ref", required=True, help="DOI/URL of the archived deposit.")
@click.option("--format", "fmt", type=click.Choice(["csv", "scholix"]), default=None)
@click.option("--index", "index_path", envvar="CROCI_INDEX", default="croci.db")
@click.option("--complete-dates", is_flag=True, help="Fill missing dates from the registry.")
@click.option("--fixtures", envvar="CROCI_FIXTURES", type=click.Path(), default=None)
@click.option("--registry-url", envvar="CROCI_REGISTRY_URL", default=None)
@click.option("--rate-limit", envvar="CROCI_RATE_LIMIT", type=float, default=5.0)
def ingest(
    file: str,
    orcid: str,
    archive_ref: str,
    fmt: str | None,
    index_path: str,
    complete_dates: bool,
    fixtures: str | None,
    registry_url: str | None,
    rate_limit: float,
) -> None:
    """Parse a submission file and store it in the index."""
    try:
        submitter = validate_orcid(orcid)
    except (MalformedOrcidError, OrcidChecksumError) as exc:
        _fail(f"invalid ORCID: {exc}", 1)
    if not archive_ref.strip():
        _fail("archive-ref must be non-empty", 1)
    batch = _parse_submission(file, _infer_format(file, fmt), submitter, archive_ref)
    index = _open_index(index_path)
    try:
        report = index.ingest_batch(batch)
        _report_row_errors(batch.row_errors)
        if report.date_conflicts:
            click.echo(
                f"warning: {report.date_conflicts} resubmitted dates differ"
                " from stored ones (kept the stored dates)",
                err=True,
            )
        if complete_dates:
            client = _registry_client(fixtures, registry_url, rate_limit)
            filled = 0
            try:
                for record in batch.records:
                    if record.citing_date is not None and record.cited_date is not None:
                        continue
                    completion = index.complete_dates(
                        CitationKey(record.citing, record.cited), client
                    )
                    filled += int(completion.filled_citing) + int(completion.filled_cited)
            except RegistryUnavailableError as exc:
                _fail(f"registry unavailable while completing dates: {exc}", 2)
            click.echo(f"filled {filled} missing dates")
        click.echo(
            f"added {report.added}, duplicates_ignored {report.duplicates_ignored},"
            f" errors {report.errors}"
        )
    finally:
        index.close()
    if batch.row_errors:
        sys.exit(1)


@croci.command()
@click.argument("doi_text", metavar="DOI")
@click.option("--citations", "mode", flag_value="citations")
@click.option("--references", "mode", flag_value="references")
@click.option("--count", "mode", flag_value="count")
@click.option("--json", "as_json", is_flag=True)
@click.option("--index", "index_path", envvar="CROCI_INDEX", default="croci.db")
def query(doi_text: str, mode: str | None, as_json: bool, index_path: str) -> None:
    """Look up citations to, or references from, a DOI."""
    if mode is None:
        _fail("pass one of --citations, --references or --count", 2)
    try:
        doi = normalize_doi(doi_text)
    except MalformedDoiError as exc:
        _fail(f"malformed DOI: {exc}", 1)
    index = _open_index(index_path)
    try:
        if mode == "count":
            click.echo(str(index.citation_count(doi)))
            return
        stored = (
            index.get_citations(doi) if mode == "citations" else index.get_references(doi)
        )
        if as_json:
            click.echo(json.dumps([citation_view(c) for c in stored], indent=2))
        else:
            for citation in stored:
                line = f"{citation.key.citing} -> {citation.key.cited}"
                if citation.timespan is not None:
                    line += f" ({citation.timespan.isoformat()})"
                click.echo(line)
    finally:
        index.close()


def _load_corpus(path: str) -> list:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        _fail(f"cannot read corpus {path}: {exc}", 2)
    dois = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            dois.append(normalize_doi(line))
        except MalformedDoiError as exc:
            _fail(f"corpus line {line_no}: {exc}", 1)
    return dois


def _load_participation(fixtures: str) -> list:
    path = Path(fixtures) / "participation.json"
    if not path.exists():
        return []
    try:
        entries = json.loads(path.read_text(encoding="utf-8"))["publishers"]
    except (OSError, json.JSONDecodeError, KeyError, TypeError) as exc:
        _fail(f"bad participation fixture {path}: {exc}", 2)
    try:
        return [
            participation_report(
                publisher_name=entry["name"],
                closed_refs=entry["closed_refs"],
                limited_refs=entry["limited_refs"],
                open_refs=entry["open_refs"],
                total_deposits=entry["total_deposits"],
            )
            for entry in entries
        ]
    except (InvalidCountsError, KeyError, TypeError) as exc:
        _fail(f"bad participation fixture {path}: {exc}", 1)


@croci.command()
@click.option("--corpus", required=True, type=click.Path())
@click.option("--fixtures", envvar="CROCI_FIXTURES", required=True, type=click.Path())
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--index", "index_path", envvar="CROCI_INDEX", default=None)
@click.option("--top", type=int, default=20, show_default=True)
@click.option("--rate-limit", envvar="CROCI_RATE_LIMIT", type=float, default=5.0)
def analyze(
    corpus: str,
    fixtures: str,
    out_dir: str,
    index_path: str | None,
    top: int,
    rate_limit: float,
) -> None:
    """Compute open/closed coverage figures over a DOI corpus."""
    dois = _load_corpus(corpus)
    client = RegistryClient(fixture_dir=fixtures, rate_limit=rate_limit)
    index = _open_index(index_path) if index_path else CitationIndex()
    try:
        try:
            rows = build_coverage(dois, index, client)
            categories = aggregate_by_category(rows, client)
            ranking = rank_publishers_by_open(rows, client, n=top)
        except RegistryUnavailableError as exc:
            _fail(f"registry unavailable: {exc}", 2)
        results = AnalysisResults(
            category_totals=categories,
            publisher_ranking=ranking,
            participation=_load_participation(fixtures),
            gaps=gap_populations(rows),
            mean_refs=mean_references_per_citing(
                index.total_citations(), index.distinct_citing_count()
            ),
        )
        try:
            emit_figure_data(results, out_dir)
            summary = {
                "total_citations": index.total_citations(),
                "distinct_citing": index.distinct_citing_count(),
                "mean_references_per_citing": (
                    str(results.mean_refs) if results.mean_refs is not None else None
                ),
                "gaps": {
                    "zero_open_some_closed": results.gaps.zero_open_some_closed,
                    "zero_closed_some_open": results.gaps.zero_closed_some_open,
                },
                "corpus_size": len(dois),
            }
            summary_path = Path(out_dir) / "summary.json"
            summary_path.write_text(
                json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8"
            )
        except (WriteFailureError, OSError) as exc:
            _fail(f"cannot write analysis output: {exc}", 2)
    finally:
        index.close()
    click.echo(
        "wrote category_totals.csv, publisher_ranking.csv, participation.csv,"
        f" summary.json to {out_dir}"
    )


@croci.command()
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--index", "index_path", envvar="CROCI_INDEX", default="croci.db")
def export(out_path: str, index_path: str) -> None:
    """Write the whole index as a CC0 CSV dump."""
    index = _open_index(index_path)
    try:
        stats = index.export_dump(out_path)
    except WriteFailureError as exc:
        _fail(str(exc), 2)
    finally:
        index.close()
    click.echo(f"exported {stats.rows} citations to {out_path}")


@croci.command()
@click.option("--addr", default="127.0.0.1:8020", show_default=True)
@click.option("--index", "index_path", envvar="CROCI_INDEX", default="croci.db")
@click.option("--size-cap", envvar="CROCI_SIZE_CAP", type=int, default=DEFAULT_SIZE_CAP)
def serve(addr: str, index_path: str, size_cap: int) -> None:
    """Run the HTTP query/submission service."""
    import uvicorn

    host, _, port_text = addr.rpartition(":")
    if not host or not port_text.isdigit():
        _fail(f"bad --addr {addr!r}, expected host:port", 2)
    app = create_app(_open_index(index_path), size_cap=size_cap)
    uvicorn.run(app, host=host, port=int(port_text))


def main() -> None:
    try:
        croci()
    except CrociError as exc:
        _fail(str(exc), 2)


if __name__ == "__main__":
    main()
