"""Parsing of crowdsourced citation submissions (CSV and Scholix).

Both parsers share the same contract: the file-level structure must be
valid (header / JSON list), but a bad row never aborts the batch: it
is recorded in ``row_errors`` with a code and skipped, so

    len(records) + len(row_errors) == number of data rows seen.
"""
from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import IO, NamedTuple, Optional, Union

from .dates import MalformedDateError, PartialDate, parse_partial_date
from .doi import Doi, MalformedDoiError, normalize_doi
from .errors import CrociError
from .orcid import Orcid

__all__ = [
    "CSV_HEADER",
    "CitationRecord",
    "MalformedDocumentError",
    "MissingHeaderError",
    "RowError",
    "RowErrorCode",
    "SelfCitationError",
    "SubmissionBatch",
    "SubmissionFormatError",
    "WrongColumnCountError",
    "parse_csv_submission",
    "parse_scholix_submission",
]

CSV_HEADER = (
    "citing_id",
    "citing_publication_date",
    "cited_id",
    "cited_publication_date",
)

Content = Union[bytes, str, IO[bytes], IO[str]]


class SubmissionFormatError(CrociError):
    """File-level failure: nothing in the submission could be used."""


class MissingHeaderError(SubmissionFormatError):
    """The mandatory CSV header line is absent or has the wrong names."""


class WrongColumnCountError(SubmissionFormatError):
    """The header line does not have exactly four columns."""


class MalformedDocumentError(SubmissionFormatError):
    """The Scholix document is not a JSON list of link objects."""


class SelfCitationError(CrociError):
    """A record citing and cited DOI are the same entity."""


class RowErrorCode(str, Enum):
    MALFORMED_DOI = "malformed-doi"
    MALFORMED_DATE = "malformed-date"
    SELF_CITATION = "self-citation"
    WRONG_COLUMN_COUNT = "wrong-column-count"
    UNSUPPORTED_RELATION = "unsupported-relation"
    MISSING_DOI_IDENTIFIER = "missing-doi-identifier"
    MALFORMED_LINK = "malformed-link"

    def __str__(self) -> str:
        return self.value


class RowError(NamedTuple):
    """Diagnostic for one rejected source row/entry (1-based position)."""

    row: int
    code: RowErrorCode
    message: str


@dataclass(frozen=True)
class CitationRecord:
    """One directed citation, citing -> cited, with optional dates."""

    citing: Doi
    cited: Doi
    citing_date: Optional[PartialDate] = None
    cited_date: Optional[PartialDate] = None

    def __post_init__(self) -> None:
        if self.citing == self.cited:
            raise SelfCitationError(f"DOI cites itself: {self.citing}")


@dataclass
class SubmissionBatch:
    """A parsed upload: clean records plus per-row diagnostics."""

    records: list[CitationRecord]
    submitter: Orcid
    archive_ref: str
    received_at: _dt.datetime
    source_format: str  # "csv" | "scholix"
    row_errors: list[RowError] = field(default_factory=list)


def _decode(content: Content) -> str:
    if hasattr(content, "read"):
        content = content.read()
    if isinstance(content, bytes):
        # utf-8-sig tolerates and strips a BOM.
        return content.decode("utf-8-sig")
    return content.lstrip("﻿")


def _utcnow() -> _dt.datetime:
    return _dt.datetime.now(_dt.timezone.utc)


def _parse_optional_date(cell: str) -> Optional[PartialDate]:
    cell = cell.strip()
    if not cell:
        return None
    return parse_partial_date(cell)


def _build_record(
    citing_raw: str,
    citing_date_raw: Optional[str],
    cited_raw: str,
    cited_date_raw: Optional[str],
) -> CitationRecord:
    """Shared row assembly; raises the structured per-row errors."""
    citing = normalize_doi(citing_raw)
    citing_date = _parse_optional_date(citing_date_raw or "")
    cited = normalize_doi(cited_raw)
    cited_date = _parse_optional_date(cited_date_raw or "")
    return CitationRecord(citing, cited, citing_date, cited_date)


_ROW_ERROR_CODES = {
    MalformedDoiError: RowErrorCode.MALFORMED_DOI,
    MalformedDateError: RowErrorCode.MALFORMED_DATE,
    SelfCitationError: RowErrorCode.SELF_CITATION,
}
_ROW_ERROR_TYPES = tuple(_ROW_ERROR_CODES)


def parse_csv_submission(
    content: Content,
    submitter: Orcid,
    archive_ref: str,
    received_at: Optional[_dt.datetime] = None,
) -> SubmissionBatch:
    """Parse a four-column CSV submission.

    The first non-empty line must carry exactly the columns
    citing_id, citing_publication_date, cited_id, cited_publication_date
    (quoting optional, order fixed); otherwise the whole file is
    rejected with :class:`MissingHeaderError` /
    :class:`WrongColumnCountError`. Data rows with problems are skipped
    and recorded, never fatal.
    """
    text = _decode(content)
    reader = csv.reader(io.StringIO(text, newline=""))

    header = None
    for row in reader:
        if not row or all(not cell.strip() for cell in row):
            continue
        header = row
        break
    if header is None:
        raise MissingHeaderError("empty file: missing submission header")
    cells = tuple(cell.strip() for cell in header)
    if len(cells) != len(CSV_HEADER):
        raise WrongColumnCountError(
            f"header has {len(cells)} columns, expected {len(CSV_HEADER)}"
        )
    if cells != CSV_HEADER:
        raise MissingHeaderError(f"unexpected header {cells!r}")

    records: list[CitationRecord] = []
    row_errors: list[RowError] = []
    row_no = 0
    for row in reader:
        if not row or all(not cell.strip() for cell in row):
            continue
        row_no += 1
        if len(row) != 4:
            row_errors.append(
                RowError(
                    row_no,
                    RowErrorCode.WRONG_COLUMN_COUNT,
                    f"expected 4 cells, found {len(row)}",
                )
            )
            continue
        try:
            records.append(_build_record(row[0], row[1], row[2], row[3]))
        except _ROW_ERROR_TYPES as exc:
            row_errors.append(RowError(row_no, _ROW_ERROR_CODES[type(exc)], str(exc)))

    return SubmissionBatch(
        records=records,
        submitter=submitter,
        archive_ref=archive_ref,
        received_at=received_at or _utcnow(),
        source_format="csv",
        row_errors=row_errors,
    )


# Leading ISO date portion of a Scholix PublicationDate; timestamps and
# finer-grained tails are truncated away, but a bare run of digits is
# not mistaken for a year prefix.
_LEADING_DATE_RE = re.compile(r"^(\d{4})(?:-(\d{2})(?:-(\d{2}))?)?(?!\d)")


def _scholix_date(value: object) -> Optional[PartialDate]:
    if value is None:
        return None
    if not isinstance(value, str) or not (m := _LEADING_DATE_RE.match(value.strip())):
        raise MalformedDateError(f"unusable publication date: {value!r}")
    return parse_partial_date(m.group(0))


def _scholix_doi(entity: object, role: str) -> str:
    """Extract the first DOI-scheme identifier of a Source/Target."""
    if not isinstance(entity, dict):
        raise MalformedDoiError(f"{role} is not an object")
    identifiers = entity.get("Identifier")
    if isinstance(identifiers, dict):
        identifiers = [identifiers]
    if not isinstance(identifiers, list):
        identifiers = []
    for ident in identifiers:
        if (
            isinstance(ident, dict)
            and str(ident.get("IDScheme", "")).lower() == "doi"
        ):
            return str(ident.get("ID", ""))
    raise _MissingDoi(f"{role} has no DOI identifier")


class _MissingDoi(CrociError):
    pass


def parse_scholix_submission(
    content: Content,
    submitter: Orcid,
    archive_ref: str,
    received_at: Optional[_dt.datetime] = None,
) -> SubmissionBatch:
    """Parse a Scholix v3 document (a JSON list of link objects).

    Only links whose RelationshipType.Name is "References" become
    records: Source maps to citing, Target to cited, and each side's
    first Identifier with IDScheme "doi" (any case) supplies the DOI.
    PublicationDate values are truncated to their leading ISO portion.
    Links with other relationship types are diagnostics, not failures.
    """
    text = _decode(content)
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedDocumentError(f"not valid JSON: {exc}") from None
    if not isinstance(document, list):
        raise MalformedDocumentError(
            f"expected a list of link objects, got {type(document).__name__}"
        )

    records: list[CitationRecord] = []
    row_errors: list[RowError] = []
    for entry_no, link in enumerate(document, start=1):
        if not isinstance(link, dict):
            row_errors.append(
                RowError(entry_no, RowErrorCode.MALFORMED_LINK, "link entry is not an object")
            )
            continue
        relationship = link.get("RelationshipType")
        name = relationship.get("Name") if isinstance(relationship, dict) else None
        if name != "References":
            row_errors.append(
                RowError(
                    entry_no,
                    RowErrorCode.UNSUPPORTED_RELATION,
                    f"relationship {name!r} is not References",
                )
            )
            continue
        try:
            citing_raw = _scholix_doi(link.get("Source"), "Source")
            cited_raw = _scholix_doi(link.get("Target"), "Target")
            citing = normalize_doi(citing_raw)
            cited = normalize_doi(cited_raw)
            citing_date = _scholix_date(link["Source"].get("PublicationDate"))
            cited_date = _scholix_date(link["Target"].get("PublicationDate"))
            records.append(CitationRecord(citing, cited, citing_date, cited_date))
        except _MissingDoi as exc:
            row_errors.append(
                RowError(entry_no, RowErrorCode.MISSING_DOI_IDENTIFIER, str(exc))
            )
        except MalformedDoiError as exc:
            row_errors.append(RowError(entry_no, RowErrorCode.MALFORMED_DOI, str(exc)))
        except MalformedDateError as exc:
            row_errors.append(RowError(entry_no, RowErrorCode.MALFORMED_DATE, str(exc)))
        except SelfCitationError as exc:
            row_errors.append(RowError(entry_no, RowErrorCode.SELF_CITATION, str(exc)))

    return SubmissionBatch(
        records=records,
        submitter=submitter,
        archive_ref=archive_ref,
        received_at=received_at or _utcnow(),
        source_format="scholix",
        row_errors=row_errors,
    )
