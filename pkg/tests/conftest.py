"""Shared fixtures, helpers and hypothesis strategies."""
from __future__ import annotations

import calendar
import datetime as dt
import json
import urllib.parse
from pathlib import Path

import pytest
from hypothesis import strategies as st

from croci_engine import (
    CitationRecord,
    Doi,
    PartialDate,
    SubmissionBatch,
    validate_orcid,
)

SUBMITTER = "0000-0002-1825-0097"
ARCHIVE_REF = "https://doi.org/10.5281/zenodo.2558257"

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def submitter():
    return validate_orcid(SUBMITTER)


def make_batch(
    records, archive_ref=ARCHIVE_REF, received_at=None, submitter=SUBMITTER
) -> SubmissionBatch:
    return SubmissionBatch(
        records=list(records),
        submitter=validate_orcid(submitter),
        archive_ref=archive_ref,
        received_at=received_at or dt.datetime(2019, 2, 1, tzinfo=dt.timezone.utc),
        source_format="csv",
    )


def write_work_fixture(
    fixture_dir: Path,
    canonical: str,
    entity_type="journal-article",
    issued=None,
    referenced_by_count=0,
    publisher=None,
) -> None:
    works = fixture_dir / "works"
    works.mkdir(parents=True, exist_ok=True)
    message = {"type": entity_type, "is-referenced-by-count": referenced_by_count}
    if issued is not None:
        message["issued"] = {"date-parts": [list(issued)]}
    if publisher is not None:
        message["publisher"] = publisher
    name = urllib.parse.quote(canonical, safe="") + ".json"
    (works / name).write_text(json.dumps({"message": message}), encoding="utf-8")


def write_prefix_fixture(fixture_dir: Path, prefix: str, name: str) -> None:
    prefixes = fixture_dir / "prefixes"
    prefixes.mkdir(parents=True, exist_ok=True)
    (prefixes / f"{prefix}.json").write_text(
        json.dumps({"message": {"name": name}}), encoding="utf-8"
    )


# -- hypothesis strategies ---------------------------------------------

_SUFFIX_ALPHABET = "abcdefghijklmnopqrstuvwxyz0123456789.-_;()/"


def doi_canonicals() -> st.SearchStrategy[str]:
    suffix = st.text(_SUFFIX_ALPHABET, min_size=1, max_size=24).filter(
        lambda s: s == s.strip() and not s.startswith("/")
    )
    return st.builds(lambda p, s: f"{p}/{s}", _prefixes(), suffix)


def _prefixes() -> st.SearchStrategy[str]:
    registrant = st.text("0123456789", min_size=3, max_size=6)
    extensions = st.lists(
        st.text("0123456789", min_size=1, max_size=3), min_size=0, max_size=2
    )
    return st.builds(
        lambda r, exts: "10." + r + "".join("." + e for e in exts), registrant, extensions
    )


def dois() -> st.SearchStrategy[Doi]:
    return doi_canonicals().map(_canonical_to_doi)


def _canonical_to_doi(canonical: str) -> Doi:
    prefix, _, suffix = canonical.partition("/")
    return Doi(prefix=prefix, suffix=suffix)


@st.composite
def partial_dates(draw) -> PartialDate:
    year = draw(st.integers(1000, 2999))
    precision = draw(st.sampled_from(["year", "month", "day"]))
    if precision == "year":
        return PartialDate(year)
    month = draw(st.integers(1, 12))
    if precision == "month":
        return PartialDate(year, month)
    day = draw(st.integers(1, calendar.monthrange(year, month)[1]))
    return PartialDate(year, month, day)


@st.composite
def citation_records(draw) -> CitationRecord:
    citing = draw(dois())
    cited = draw(dois().filter(lambda d: d.canonical != citing.canonical))
    citing_date = draw(st.none() | partial_dates())
    cited_date = draw(st.none() | partial_dates())
    return CitationRecord(
        citing=citing, cited=cited, citing_date=citing_date, cited_date=cited_date
    )


def record_batches(min_size=0, max_size=20) -> st.SearchStrategy[SubmissionBatch]:
    return st.lists(citation_records(), min_size=min_size, max_size=max_size).map(
        make_batch
    )
