"""Coverage statistics: open vs. closed citations per entity.

"Open" incoming citations are the ones this index holds; "closed" is
the remainder implied by the registry's is-referenced-by-count for the
same entity. The two sources are snapshots taken at different times,
so a registry count briefly lower than the open count is clamped to
zero and flagged rather than treated as an error.

Percentages and means round half-up (2 and 1 decimals respectively) so
emitted tables agree with conventional presentation of these figures.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Iterable, NamedTuple, Optional, Sequence, Union

from .doi import Doi, doi_prefix
from .enrich import Category
from .errors import CrociError
from .index import WriteFailureError

__all__ = [
    "AnalysisResults",
    "CategoryTotals",
    "CoverageRow",
    "GapPopulations",
    "InvalidCountsError",
    "OpenClosedTotals",
    "ParticipationReport",
    "PublisherTotals",
    "UNKNOWN_PUBLISHER",
    "aggregate_by_category",
    "build_coverage",
    "closed_count",
    "emit_figure_data",
    "gap_populations",
    "mean_references_per_citing",
    "open_closed_ratio",
    "participation_report",
    "rank_publishers_by_open",
]

UNKNOWN_PUBLISHER = "(unknown)"

CATEGORY_TOTALS_HEADER = "category,open,closed"
PUBLISHER_RANKING_HEADER = "rank,publisher,open,closed,ratio"
PARTICIPATION_HEADER = (
    "publisher,closed_refs,limited_refs,open_refs,total_deposits,"
    "total_with_refs,pct_closed,pct_limited,pct_open,pct_with_refs"
)

_TWO_PLACES = Decimal("0.01")
_ONE_PLACE = Decimal("0.1")


class InvalidCountsError(CrociError):
    """Participation counts are negative or exceed total deposits."""


@dataclass(frozen=True)
class CoverageRow:
    """Open vs. closed incoming citations for one DOI.

    Rows without registry metadata keep closed_incoming at zero and are
    excluded from every aggregate.
    """

    doi: Doi
    open_incoming: int
    referenced_by_count: int
    closed_incoming: int
    clamped: bool = False
    has_metadata: bool = True


class OpenClosedTotals(NamedTuple):
    open: int
    closed: int


CategoryTotals = dict[Category, OpenClosedTotals]


@dataclass(frozen=True)
class PublisherTotals:
    publisher_name: str
    prefixes: frozenset[str]
    open_received: int
    closed_received: int


@dataclass(frozen=True)
class ParticipationReport:
    """One publisher's reference-deposit breakdown with percentages.

    The closed/limited/open counts are publications whose deposited
    metadata includes a reference list at that visibility level;
    percentages are of total_deposits, rounded half-up to 2 decimals.
    """

    publisher_name: str
    closed_refs: int
    limited_refs: int
    open_refs: int
    total_deposits: int
    total_with_refs: int
    pct_closed: Decimal
    pct_limited: Decimal
    pct_open: Decimal
    pct_with_refs: Decimal


@dataclass(frozen=True)
class GapPopulations:
    zero_open_some_closed: int
    zero_closed_some_open: int


@dataclass
class AnalysisResults:
    category_totals: CategoryTotals = field(default_factory=dict)
    publisher_ranking: list[PublisherTotals] = field(default_factory=list)
    participation: list[ParticipationReport] = field(default_factory=list)
    gaps: Optional[GapPopulations] = None
    mean_refs: Optional[Decimal] = None


def closed_count(referenced_by_count: int, open_incoming: int) -> tuple[int, bool]:
    """Closed citations implied by the registry total, clamped at zero.

    Returns (count, clamped); clamped is True when the registry total
    lagged behind the open count (snapshot skew), never an error.
    """
    if referenced_by_count < 0 or open_incoming < 0:
        raise InvalidCountsError("citation counts must be non-negative")
    difference = referenced_by_count - open_incoming
    if difference < 0:
        return 0, True
    return difference, False


def build_coverage(doilist: Iterable[Doi], index, enrich) -> list[CoverageRow]:
    """One CoverageRow per DOI: open from the index, closed derived.

    A registry miss yields a flagged row (has_metadata False) that the
    aggregation functions skip. Registry unavailability propagates;
    the client's cache makes a restarted run cheap.
    """
    rows = []
    for doi in doilist:
        open_incoming = index.citation_count(doi)
        metadata = enrich.fetch_entity_metadata(doi)
        if metadata is None:
            rows.append(
                CoverageRow(
                    doi=doi,
                    open_incoming=open_incoming,
                    referenced_by_count=0,
                    closed_incoming=0,
                    has_metadata=False,
                )
            )
            continue
        closed, clamped = closed_count(metadata.referenced_by_count, open_incoming)
        rows.append(
            CoverageRow(
                doi=doi,
                open_incoming=open_incoming,
                referenced_by_count=metadata.referenced_by_count,
                closed_incoming=closed,
                clamped=clamped,
            )
        )
    return rows


def aggregate_by_category(rows: Sequence[CoverageRow], enrich) -> CategoryTotals:
    """Open/closed totals per category; all five categories present."""
    totals = {category: [0, 0] for category in Category}
    for row in rows:
        if not row.has_metadata:
            continue
        metadata = enrich.fetch_entity_metadata(row.doi)
        category = metadata.category if metadata is not None else Category.OTHER
        totals[category][0] += row.open_incoming
        totals[category][1] += row.closed_incoming
    return {
        category: OpenClosedTotals(open=open_total, closed=closed_total)
        for category, (open_total, closed_total) in totals.items()
    }


def rank_publishers_by_open(
    rows: Sequence[CoverageRow], enrich, n: Optional[int] = None
) -> list[PublisherTotals]:
    """Publishers by open citations received, descending; names break ties.

    Publisher is resolved per DOI prefix; unresolvable prefixes pool
    under "(unknown)" so totals stay conserved.
    """
    by_publisher: dict[str, tuple[set, list[int]]] = {}
    for row in rows:
        if not row.has_metadata:
            continue
        prefix = doi_prefix(row.doi)
        publisher = enrich.lookup_publisher(prefix) or UNKNOWN_PUBLISHER
        prefixes, counts = by_publisher.setdefault(publisher, (set(), [0, 0]))
        prefixes.add(prefix)
        counts[0] += row.open_incoming
        counts[1] += row.closed_incoming
    ranked = [
        PublisherTotals(
            publisher_name=name,
            prefixes=frozenset(prefixes),
            open_received=counts[0],
            closed_received=counts[1],
        )
        for name, (prefixes, counts) in by_publisher.items()
    ]
    ranked.sort(key=lambda t: (-t.open_received, t.publisher_name))
    return ranked if n is None else ranked[:n]


def open_closed_ratio(totals: PublisherTotals) -> Optional[float]:
    """open/closed ratio, or None when there are no closed citations."""
    if totals.closed_received == 0:
        return None
    return totals.open_received / totals.closed_received


def _pct(part: int, whole: int) -> Decimal:
    if whole == 0:
        return Decimal("0.00")
    return (Decimal(100 * part) / Decimal(whole)).quantize(
        _TWO_PLACES, rounding=ROUND_HALF_UP
    )


def participation_report(
    publisher_name: str,
    closed_refs: int,
    limited_refs: int,
    open_refs: int,
    total_deposits: int,
) -> ParticipationReport:
    """Percentages of a publisher's deposits carrying reference lists.

    Counts are registry-supplied per publisher, not derived from the
    citation index.
    """
    counts = (closed_refs, limited_refs, open_refs, total_deposits)
    if any(count < 0 for count in counts):
        raise InvalidCountsError(f"negative count for {publisher_name}: {counts}")
    total_with_refs = closed_refs + limited_refs + open_refs
    if total_with_refs > total_deposits:
        raise InvalidCountsError(
            f"{publisher_name}: {total_with_refs} deposits with references"
            f" exceed {total_deposits} total deposits"
        )
    return ParticipationReport(
        publisher_name=publisher_name,
        closed_refs=closed_refs,
        limited_refs=limited_refs,
        open_refs=open_refs,
        total_deposits=total_deposits,
        total_with_refs=total_with_refs,
        pct_closed=_pct(closed_refs, total_deposits),
        pct_limited=_pct(limited_refs, total_deposits),
        pct_open=_pct(open_refs, total_deposits),
        pct_with_refs=_pct(total_with_refs, total_deposits),
    )


def gap_populations(rows: Sequence[CoverageRow]) -> GapPopulations:
    """Count DOIs cited only in closed form, and only in open form."""
    zero_open = zero_closed = 0
    for row in rows:
        if not row.has_metadata:
            continue
        if row.open_incoming == 0 and row.closed_incoming >= 1:
            zero_open += 1
        elif row.closed_incoming == 0 and row.open_incoming >= 1:
            zero_closed += 1
    return GapPopulations(
        zero_open_some_closed=zero_open, zero_closed_some_open=zero_closed
    )


def mean_references_per_citing(
    total_citations: int, citing_entities: int
) -> Optional[Decimal]:
    """Average outgoing citations per citing DOI, half-up to 1 decimal."""
    if citing_entities == 0:
        return None
    return (Decimal(total_citations) / Decimal(citing_entities)).quantize(
        _ONE_PLACE, rounding=ROUND_HALF_UP
    )


def _format_ratio(ratio: Optional[float]) -> str:
    if ratio is None:
        return ""
    text = f"{ratio:.4f}".rstrip("0").rstrip(".")
    return text or "0"


def emit_figure_data(
    results: AnalysisResults, destination: Union[str, Path]
) -> list[Path]:
    """Write the three analysis CSVs; byte-identical for equal inputs.

    category_totals.csv keeps the fixed five-category order,
    publisher_ranking.csv is already ranked, participation.csv is
    sorted by publisher name.
    """
    out_dir = Path(destination)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)

        categories_path = out_dir / "category_totals.csv"
        with open(categories_path, "w", encoding="utf-8", newline="") as handle:
            handle.write(CATEGORY_TOTALS_HEADER + "\n")
            writer = csv.writer(handle, lineterminator="\n")
            for category in Category:
                totals = results.category_totals.get(category)
                if totals is None:
                    continue
                writer.writerow([category.value, totals.open, totals.closed])

        ranking_path = out_dir / "publisher_ranking.csv"
        with open(ranking_path, "w", encoding="utf-8", newline="") as handle:
            handle.write(PUBLISHER_RANKING_HEADER + "\n")
            writer = csv.writer(handle, lineterminator="\n")
            for rank, totals in enumerate(results.publisher_ranking, start=1):
                writer.writerow(
                    [
                        rank,
                        totals.publisher_name,
                        totals.open_received,
                        totals.closed_received,
                        _format_ratio(open_closed_ratio(totals)),
                    ]
                )

        participation_path = out_dir / "participation.csv"
        with open(participation_path, "w", encoding="utf-8", newline="") as handle:
            handle.write(PARTICIPATION_HEADER + "\n")
            writer = csv.writer(handle, lineterminator="\n")
            reports = sorted(results.participation, key=lambda r: r.publisher_name)
            for report in reports:
                writer.writerow(
                    [
                        report.publisher_name,
                        report.closed_refs,
                        report.limited_refs,
                        report.open_refs,
                        report.total_deposits,
                        report.total_with_refs,
                        str(report.pct_closed),
                        str(report.pct_limited),
                        str(report.pct_open),
                        str(report.pct_with_refs),
                    ]
                )
    except OSError as exc:
        raise WriteFailureError(f"cannot write analysis files: {exc}") from exc
    return [categories_path, ranking_path, participation_path]
