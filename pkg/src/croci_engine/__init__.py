"""Crowdsourced open citation index: ingestion, storage, analysis, serving."""

from .analysis import (
    UNKNOWN_PUBLISHER,
    AnalysisResults,
    CategoryTotals,
    CoverageRow,
    GapPopulations,
    InvalidCountsError,
    OpenClosedTotals,
    ParticipationReport,
    PublisherTotals,
    aggregate_by_category,
    build_coverage,
    closed_count,
    emit_figure_data,
    gap_populations,
    mean_references_per_citing,
    open_closed_ratio,
    participation_report,
    rank_publishers_by_open,
)
from .dates import (
    MalformedDateError,
    PartialDate,
    Timespan,
    compute_timespan,
    parse_partial_date,
)
from .doi import Doi, MalformedDoiError, doi_prefix, format_doi_url, normalize_doi
from .enrich import (
    Category,
    EntityMetadata,
    RegistryClient,
    RegistryUnavailableError,
    TypeCategoryMap,
    map_type_to_category,
)
from .errors import CrociError
from .index import (
    CitationIndex,
    CitationKey,
    DumpFormatError,
    IngestReport,
    Provenance,
    StorageFailureError,
    StoredCitation,
    UnknownCitationError,
    WriteFailureError,
    import_dump,
)
from .ingest import (
    CitationRecord,
    MalformedDocumentError,
    MissingHeaderError,
    RowError,
    RowErrorCode,
    SelfCitationError,
    SubmissionBatch,
    SubmissionFormatError,
    WrongColumnCountError,
    parse_csv_submission,
    parse_scholix_submission,
)
from .orcid import MalformedOrcidError, Orcid, OrcidChecksumError, validate_orcid
from .service import citation_view, create_app

__version__ = "0.1.0"
