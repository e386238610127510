"""REST query and submission service over a citation index.

GET endpoints accept a DOI in any supported surface form (clients
percent-encode path slashes beyond the prefix separator). Unknown DOIs
are valid questions and get empty answers with status 200; only a
malformed DOI is a 400. Submissions are processed synchronously and
atomically: a 422 means the index was not touched.
"""
from __future__ import annotations

import datetime as _dt
from typing import Literal, Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from .doi import MalformedDoiError, format_doi_url, normalize_doi
from .index import CitationIndex, StorageFailureError, StoredCitation
from .ingest import (
    MalformedDocumentError,
    MissingHeaderError,
    SubmissionFormatError,
    WrongColumnCountError,
    parse_csv_submission,
    parse_scholix_submission,
)
from .orcid import MalformedOrcidError, OrcidChecksumError, validate_orcid

__all__ = ["create_app", "DEFAULT_SIZE_CAP", "citation_view"]

DEFAULT_SIZE_CAP = 10 * 1024 * 1024

_FORMAT_ERROR_CODES = {
    MissingHeaderError: "missing-header",
    WrongColumnCountError: "wrong-column-count",
    MalformedDocumentError: "malformed-document",
    SubmissionFormatError: "invalid-submission",
}


class SubmissionIntake(BaseModel):
    archive_ref: str
    submitter: str
    format: Literal["csv", "scholix"]
    payload: str


def citation_view(citation: StoredCitation) -> dict:
    """JSON-shaped view of a stored citation (DOIs in URL form)."""
    accepted = citation.provenance[0]
    return {
        "citing": format_doi_url(citation.key.citing),
        "cited": format_doi_url(citation.key.cited),
        "citing_date": str(citation.citing_date) if citation.citing_date else None,
        "cited_date": str(citation.cited_date) if citation.cited_date else None,
        "timespan": citation.timespan.isoformat() if citation.timespan else None,
        "submitter": accepted.submitter.value,
        "archive_ref": accepted.archive_ref,
    }


def create_app(
    index: Optional[CitationIndex] = None, size_cap: int = DEFAULT_SIZE_CAP
) -> FastAPI:
    """Build the service over ``index`` (a fresh in-memory one if None)."""
    if index is None:
        index = CitationIndex()
    app = FastAPI(title="croci-engine", docs_url=None, redoc_url=None)

    @app.exception_handler(MalformedDoiError)
    async def _malformed_doi(request: Request, exc: MalformedDoiError):
        return JSONResponse(
            status_code=400, content={"error": "malformed-doi", "detail": str(exc)}
        )

    @app.exception_handler(StorageFailureError)
    async def _storage_failure(request: Request, exc: StorageFailureError):
        return JSONResponse(
            status_code=500, content={"error": "storage-failure", "detail": str(exc)}
        )

    @app.get("/citations/{doi:path}")
    def citations(doi: str):
        target = normalize_doi(doi)
        return [citation_view(c) for c in index.get_citations(target)]

    @app.get("/references/{doi:path}")
    def references(doi: str):
        source = normalize_doi(doi)
        return [citation_view(c) for c in index.get_references(source)]

    @app.get("/citation-count/{doi:path}")
    def citation_count(doi: str):
        return {"count": index.citation_count(normalize_doi(doi))}

    @app.get("/reference-count/{doi:path}")
    def reference_count(doi: str):
        return {"count": index.reference_count(normalize_doi(doi))}

    @app.post("/submissions", status_code=201)
    def submissions(intake: SubmissionIntake):
        if len(intake.payload.encode("utf-8")) > size_cap:
            return JSONResponse(
                status_code=413,
                content={
                    "error": "payload-too-large",
                    "detail": f"payload exceeds the {size_cap}-byte cap",
                },
            )
        try:
            submitter = validate_orcid(intake.submitter)
        except (MalformedOrcidError, OrcidChecksumError) as exc:
            return JSONResponse(
                status_code=400,
                content={"error": "invalid-orcid", "detail": str(exc)},
            )
        if not intake.archive_ref.strip():
            return JSONResponse(
                status_code=400,
                content={
                    "error": "missing-archive-ref",
                    "detail": "archive_ref must name the archived deposit",
                },
            )
        parse = (
            parse_csv_submission
            if intake.format == "csv"
            else parse_scholix_submission
        )
        try:
            batch = parse(
                intake.payload,
                submitter=submitter,
                archive_ref=intake.archive_ref,
                received_at=_dt.datetime.now(_dt.timezone.utc),
            )
        except SubmissionFormatError as exc:
            code = _FORMAT_ERROR_CODES.get(type(exc), "invalid-submission")
            return JSONResponse(
                status_code=422, content={"error": code, "detail": str(exc)}
            )
        report = index.ingest_batch(batch)
        return {
            "archive_ref": report.archive_ref,
            "added": report.added,
            "duplicates_ignored": report.duplicates_ignored,
            "errors": report.errors,
            "error_breakdown": report.error_breakdown,
            "date_conflicts": report.date_conflicts,
            "row_errors": [
                {"row": err.row, "code": err.code.value, "message": err.message}
                for err in batch.row_errors
            ],
        }

    return app
