"""Persistent, deduplicating citation store with provenance.

Backed by an embedded sqlite database kept in one file (or in memory
for tests; same code path either way). The primary key clusters rows
by citing DOI and a secondary index orders them by cited DOI, so both
query directions are range scans. One writer at a time; readers see
either the pre-batch or post-batch state, never a partial batch.
"""
from __future__ import annotations

import csv
import datetime as _dt
import io
import json
import sqlite3
import threading
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Optional, Union

from .dates import PartialDate, Timespan, compute_timespan, parse_partial_date
from .doi import Doi, normalize_doi
from .errors import CrociError
from .ingest import CitationRecord, SelfCitationError, SubmissionBatch
from .orcid import Orcid, validate_orcid

__all__ = [
    "CitationIndex",
    "CitationKey",
    "DateCompletion",
    "DumpFormatError",
    "DUMP_HEADER",
    "DUMP_LICENSE_LINE",
    "ExportStats",
    "IngestReport",
    "Provenance",
    "StorageFailureError",
    "StoredCitation",
    "UnknownCitationError",
    "WriteFailureError",
    "import_dump",
]

DUMP_LICENSE_LINE = "# License: CC0 1.0 Universal (public domain)"
DUMP_HEADER = (
    "citing_id,citing_publication_date,cited_id,cited_publication_date,"
    "timespan,submitter_orcid,archive_ref"
)

_SCHEMA = """
CREATE TABLE IF NOT EXISTS citations (
    citing TEXT NOT NULL,
    cited TEXT NOT NULL,
    citing_date TEXT,
    cited_date TEXT,
    provenance TEXT NOT NULL,
    PRIMARY KEY (citing, cited)
) WITHOUT ROWID;
CREATE INDEX IF NOT EXISTS citations_by_cited ON citations (cited, citing);
"""


class StorageFailureError(CrociError):
    """The backing store failed; the index is unchanged."""


class UnknownCitationError(CrociError):
    """No stored citation exists for the given key."""


class WriteFailureError(CrociError):
    """A dump could not be written to its destination."""


class DumpFormatError(CrociError):
    """The file being imported is not a citation dump."""


@dataclass(frozen=True, order=True)
class CitationKey:
    """Identity of a citation: the ordered (citing, cited) DOI pair."""

    citing: Doi
    cited: Doi

    def __post_init__(self) -> None:
        if self.citing == self.cited:
            raise SelfCitationError(f"DOI cites itself: {self.citing}")


@dataclass(frozen=True)
class Provenance:
    """Who contributed a citation, from which archived deposit, when."""

    submitter: Orcid
    archive_ref: str
    received_at: _dt.datetime

    def __post_init__(self) -> None:
        if not self.archive_ref:
            raise ValueError("archive_ref must be non-empty")


@dataclass(frozen=True)
class StoredCitation:
    """A citation as held by the index.

    ``timespan`` is present exactly when both dates are, at the coarser
    of the two precisions. ``provenance`` is never empty; its first
    element is the accepted source, later ones are duplicate submitters.
    """

    key: CitationKey
    citing_date: Optional[PartialDate]
    cited_date: Optional[PartialDate]
    timespan: Optional[Timespan]
    provenance: tuple[Provenance, ...]


@dataclass
class IngestReport:
    """Outcome of ingesting one batch.

    added + duplicates_ignored + errors always equals the batch's input
    rows (records plus parser row errors).
    """

    archive_ref: str
    added: int
    duplicates_ignored: int
    errors: int
    error_breakdown: dict[str, int] = field(default_factory=dict)
    date_conflicts: int = 0


@dataclass
class DateCompletion:
    """Result of trying to fill a citation's missing dates."""

    record: StoredCitation
    filled_citing: bool
    filled_cited: bool
    incomplete: bool


@dataclass
class ExportStats:
    rows: int


def _timespan_for(
    citing_date: Optional[PartialDate], cited_date: Optional[PartialDate]
) -> Optional[Timespan]:
    if citing_date is None or cited_date is None:
        return None
    return compute_timespan(citing_date, cited_date)


class CitationIndex:
    """Deduplicating citation store over a sqlite file or ':memory:'."""

    def __init__(self, path: Union[str, Path] = ":memory:"):
        self._lock = threading.RLock()
        try:
            self._conn = sqlite3.connect(
                str(path), check_same_thread=False, isolation_level=None
            )
            self._conn.executescript(_SCHEMA)
        except sqlite3.Error as exc:
            raise StorageFailureError(f"cannot open citation index: {exc}") from exc

    def close(self) -> None:
        with self._lock:
            self._conn.close()

    def __enter__(self) -> "CitationIndex":
        return self

    def __exit__(self, *exc_info: object) -> None:
        self.close()

    # -- ingestion ----------------------------------------------------

    def ingest_batch(self, batch: SubmissionBatch) -> IngestReport:
        """Store a parsed batch atomically.

        New keys are inserted; already-known keys only gain a
        provenance entry (dates are first-wins, and a differing
        resubmitted date is counted as a conflict warning). Any storage
        failure rolls the whole batch back.
        """
        prov_entry = {
            "submitter": batch.submitter.value,
            "archive_ref": batch.archive_ref,
            "received_at": batch.received_at.isoformat(),
        }
        added = duplicates = conflicts = 0
        with self._lock:
            cur = self._conn.cursor()
            try:
                cur.execute("BEGIN")
                for record in batch.records:
                    row = cur.execute(
                        "SELECT citing_date, cited_date, provenance"
                        " FROM citations WHERE citing = ? AND cited = ?",
                        (record.citing.canonical, record.cited.canonical),
                    ).fetchone()
                    if row is None:
                        self._insert_new(cur, record, prov_entry)
                        added += 1
                    else:
                        duplicates += 1
                        conflicts += self._conflicting_dates(row, record)
                        self._append_provenance(cur, record, row, prov_entry)
                cur.execute("COMMIT")
            except Exception as exc:
                cur.execute("ROLLBACK")
                raise StorageFailureError(f"batch ingest failed: {exc}") from exc
        breakdown = Counter(err.code.value for err in batch.row_errors)
        return IngestReport(
            archive_ref=batch.archive_ref,
            added=added,
            duplicates_ignored=duplicates,
            errors=len(batch.row_errors),
            error_breakdown=dict(breakdown),
            date_conflicts=conflicts,
        )

    def _insert_new(
        self, cur: sqlite3.Cursor, record: CitationRecord, prov_entry: dict
    ) -> None:
        cur.execute(
            "INSERT INTO citations (citing, cited, citing_date, cited_date, provenance)"
            " VALUES (?, ?, ?, ?, ?)",
            (
                record.citing.canonical,
                record.cited.canonical,
                str(record.citing_date) if record.citing_date else None,
                str(record.cited_date) if record.cited_date else None,
                json.dumps([prov_entry]),
            ),
        )

    def _append_provenance(
        self,
        cur: sqlite3.Cursor,
        record: CitationRecord,
        row: tuple,
        prov_entry: dict,
    ) -> None:
        provenance = json.loads(row[2])
        provenance.append(prov_entry)
        cur.execute(
            "UPDATE citations SET provenance = ? WHERE citing = ? AND cited = ?",
            (json.dumps(provenance), record.citing.canonical, record.cited.canonical),
        )

    @staticmethod
    def _conflicting_dates(row: tuple, record: CitationRecord) -> int:
        stored_citing, stored_cited = row[0], row[1]
        for stored, incoming in (
            (stored_citing, record.citing_date),
            (stored_cited, record.cited_date),
        ):
            if stored is not None and incoming is not None and stored != str(incoming):
                return 1
        return 0

    # -- date completion ----------------------------------------------

    def complete_dates(self, key: CitationKey, enrich) -> DateCompletion:
        """Fill missing dates from the metadata registry.

        ``enrich`` is a metadata client exposing
        ``fetch_entity_metadata(doi)``; a registry miss simply leaves
        the date absent. Raises :class:`UnknownCitationError` for keys
        not in the index.
        """
        with self._lock:
            row = self._conn.execute(
                "SELECT citing_date, cited_date FROM citations"
                " WHERE citing = ? AND cited = ?",
                (key.citing.canonical, key.cited.canonical),
            ).fetchone()
            if row is None:
                raise UnknownCitationError(f"no stored citation for {key}")
        citing_date, cited_date = row
        filled_citing = filled_cited = False
        if citing_date is None:
            issued = self._issued_date(key.citing, enrich)
            if issued is not None:
                citing_date, filled_citing = str(issued), True
        if cited_date is None:
            issued = self._issued_date(key.cited, enrich)
            if issued is not None:
                cited_date, filled_cited = str(issued), True
        if filled_citing or filled_cited:
            with self._lock:
                self._conn.execute(
                    "UPDATE citations SET citing_date = ?, cited_date = ?"
                    " WHERE citing = ? AND cited = ?",
                    (citing_date, cited_date, key.citing.canonical, key.cited.canonical),
                )
        record = self.get(key)
        incomplete = record.citing_date is None or record.cited_date is None
        return DateCompletion(record, filled_citing, filled_cited, incomplete)

    @staticmethod
    def _issued_date(doi: Doi, enrich) -> Optional[PartialDate]:
        metadata = enrich.fetch_entity_metadata(doi)
        return metadata.issued if metadata is not None else None

    # -- queries ------------------------------------------------------

    def get(self, key: CitationKey) -> StoredCitation:
        with self._lock:
            row = self._conn.execute(
                "SELECT citing, cited, citing_date, cited_date, provenance"
                " FROM citations WHERE citing = ? AND cited = ?",
                (key.citing.canonical, key.cited.canonical),
            ).fetchone()
        if row is None:
            raise UnknownCitationError(f"no stored citation for {key}")
        return _materialize(row)

    def get_references(self, doi: Doi) -> list[StoredCitation]:
        """Outgoing citations (``doi`` as citing), ordered by cited DOI."""
        with self._lock:
            rows = self._conn.execute(
                "SELECT citing, cited, citing_date, cited_date, provenance"
                " FROM citations WHERE citing = ? ORDER BY cited",
                (doi.canonical,),
            ).fetchall()
        return [_materialize(row) for row in rows]

    def get_citations(self, doi: Doi) -> list[StoredCitation]:
        """Incoming citations (``doi`` as cited), ordered by citing DOI."""
        with self._lock:
            rows = self._conn.execute(
                "SELECT citing, cited, citing_date, cited_date, provenance"
                " FROM citations WHERE cited = ? ORDER BY citing",
                (doi.canonical,),
            ).fetchall()
        return [_materialize(row) for row in rows]

    def reference_count(self, doi: Doi) -> int:
        with self._lock:
            (count,) = self._conn.execute(
                "SELECT COUNT(*) FROM citations WHERE citing = ?", (doi.canonical,)
            ).fetchone()
        return count

    def citation_count(self, doi: Doi) -> int:
        with self._lock:
            (count,) = self._conn.execute(
                "SELECT COUNT(*) FROM citations WHERE cited = ?", (doi.canonical,)
            ).fetchone()
        return count

    def total_citations(self) -> int:
        with self._lock:
            (count,) = self._conn.execute("SELECT COUNT(*) FROM citations").fetchone()
        return count

    def distinct_citing_count(self) -> int:
        with self._lock:
            (count,) = self._conn.execute(
                "SELECT COUNT(DISTINCT citing) FROM citations"
            ).fetchone()
        return count

    def all_citations(self) -> list[StoredCitation]:
        """Every stored citation in key order (citing, then cited)."""
        with self._lock:
            rows = self._conn.execute(
                "SELECT citing, cited, citing_date, cited_date, provenance"
                " FROM citations ORDER BY citing, cited"
            ).fetchall()
        return [_materialize(row) for row in rows]

    # -- dump export --------------------------------------------------

    def export_dump(self, destination: Union[str, Path, IO[str]]) -> ExportStats:
        """Write the whole index as a CC0 CSV dump, sorted by key.

        The first line is the license comment, the second the fixed
        seven-column header; absent dates and timespans are empty
        cells. Byte-deterministic for a given index state.
        """
        try:
            citations = self.all_citations()
        except sqlite3.Error as exc:
            raise StorageFailureError(f"cannot read index for export: {exc}") from exc
        try:
            if hasattr(destination, "write"):
                rows = self._write_dump(destination, citations)
            else:
                with open(destination, "w", encoding="utf-8", newline="") as handle:
                    rows = self._write_dump(handle, citations)
        except OSError as exc:
            raise WriteFailureError(f"cannot write dump: {exc}") from exc
        return ExportStats(rows=rows)

    @staticmethod
    def _write_dump(handle: IO[str], citations: Iterable[StoredCitation]) -> int:
        handle.write(DUMP_LICENSE_LINE + "\n")
        handle.write(DUMP_HEADER + "\n")
        writer = csv.writer(handle, lineterminator="\n")
        rows = 0
        for citation in citations:
            accepted = citation.provenance[0]
            writer.writerow(
                [
                    citation.key.citing.canonical,
                    str(citation.citing_date) if citation.citing_date else "",
                    citation.key.cited.canonical,
                    str(citation.cited_date) if citation.cited_date else "",
                    citation.timespan.isoformat() if citation.timespan else "",
                    accepted.submitter.value,
                    accepted.archive_ref,
                ]
            )
            rows += 1
        return rows


def _materialize(row: tuple) -> StoredCitation:
    citing, cited, citing_date_text, cited_date_text, provenance_json = row
    citing_date = parse_partial_date(citing_date_text) if citing_date_text else None
    cited_date = parse_partial_date(cited_date_text) if cited_date_text else None
    provenance = tuple(
        Provenance(
            submitter=Orcid(entry["submitter"]),
            archive_ref=entry["archive_ref"],
            received_at=_dt.datetime.fromisoformat(entry["received_at"]),
        )
        for entry in json.loads(provenance_json)
    )
    return StoredCitation(
        key=CitationKey(normalize_doi(citing), normalize_doi(cited)),
        citing_date=citing_date,
        cited_date=cited_date,
        timespan=_timespan_for(citing_date, cited_date),
        provenance=provenance,
    )


def import_dump(
    index: CitationIndex, source: Union[str, Path, IO[str]]
) -> int:
    """Restore a dump file into ``index``, preserving per-row provenance.

    Inverse of :meth:`CitationIndex.export_dump`: a fresh index loaded
    from a dump exports that same dump byte-for-byte. Returns the
    number of citations added.
    """
    if hasattr(source, "read"):
        text = source.read()
    else:
        with open(source, "r", encoding="utf-8", newline="") as handle:
            text = handle.read()
    lines = text.splitlines(keepends=True)
    if not lines or lines[0].rstrip("\r\n") != DUMP_LICENSE_LINE:
        raise DumpFormatError("missing CC0 license line")
    if len(lines) < 2 or lines[1].rstrip("\r\n") != DUMP_HEADER:
        raise DumpFormatError("missing dump header line")

    added = 0
    batch_rows: list[CitationRecord] = []
    batch_prov: Optional[tuple[str, str]] = None

    def flush() -> None:
        nonlocal added, batch_rows
        if not batch_rows:
            return
        submitter, archive_ref = batch_prov
        batch = SubmissionBatch(
            records=batch_rows,
            submitter=validate_orcid(submitter),
            archive_ref=archive_ref,
            received_at=_dt.datetime.now(_dt.timezone.utc),
            source_format="csv",
        )
        added += index.ingest_batch(batch).added
        batch_rows = []

    reader = csv.reader(io.StringIO("".join(lines[2:]), newline=""))
    for cells in reader:
        if not cells:
            continue
        if len(cells) != 7:
            raise DumpFormatError(f"dump row has {len(cells)} cells, expected 7")
        citing, citing_date, cited, cited_date, _timespan, submitter, archive = cells
        record = CitationRecord(
            citing=normalize_doi(citing),
            cited=normalize_doi(cited),
            citing_date=parse_partial_date(citing_date) if citing_date else None,
            cited_date=parse_partial_date(cited_date) if cited_date else None,
        )
        if batch_prov != (submitter, archive):
            flush()
            batch_prov = (submitter, archive)
        batch_rows.append(record)
    flush()
    return added
