"""DOI parsing, validation and canonicalization.

Accepts the common surface forms a DOI travels under (resolver URLs,
"doi:" labels, percent-encoded paths) and reduces them all to one
canonical lowercase "prefix/suffix" string, so that the same identifier
always compares equal no matter how it was written down.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from functools import total_ordering
from urllib.parse import unquote

from .errors import CrociError

__all__ = [
    "Doi",
    "MalformedDoiError",
    "SCHEME_PREFIXES",
    "doi_prefix",
    "format_doi_url",
    "normalize_doi",
]

# Closed set of recognized leading schemes/resolvers, matched
# case-insensitively. Exactly one is stripped; anything else that does
# not already start with "10." is rejected rather than guessed.
SCHEME_PREFIXES = (
    "https://doi.org/",
    "http://doi.org/",
    "https://dx.doi.org/",
    "http://dx.doi.org/",
    "doi:",
    "info:doi/",
)

# Registrant: "10." then 3-9 digits, optionally dot-separated
# sub-registrant groups (e.g. "10.1016.12").
_PREFIX_RE = re.compile(r"^10\.\d{3,9}(?:\.\d+)*$")

# A percent escape that unquote() would decode.
_DECODABLE_ESCAPE_RE = re.compile(r"%[0-9A-Fa-f]{2}")

_ASCII_LOWER = {ord(c): ord(c.lower()) for c in "ABCDEFGHIJKLMNOPQRSTUVWXYZ"}


class MalformedDoiError(CrociError):
    """The string cannot be interpreted as a DOI."""


@total_ordering
@dataclass(frozen=True)
class Doi:
    """A canonicalized DOI, split at the first slash.

    Instances are only built through :func:`normalize_doi`, which
    guarantees the invariants: lowercase canonical form, valid
    registrant prefix, non-empty suffix without edge whitespace.
    """

    prefix: str
    suffix: str

    @property
    def canonical(self) -> str:
        return f"{self.prefix}/{self.suffix}"

    def __str__(self) -> str:
        return self.canonical

    def __lt__(self, other: "Doi") -> bool:
        if not isinstance(other, Doi):
            return NotImplemented
        return self.canonical < other.canonical


def _ascii_lower(text: str) -> str:
    # ASCII-only case fold: suffix bytes outside A-Z are opaque and kept
    # verbatim, so non-ASCII characters are never case-folded.
    return text.translate(_ASCII_LOWER)


def _strip_scheme(text: str) -> str:
    lowered = text.lower()
    for scheme in SCHEME_PREFIXES:
        if lowered.startswith(scheme):
            return text[len(scheme):]
    return text


def normalize_doi(raw: str) -> Doi:
    """Parse ``raw`` into a canonical :class:`Doi`.

    Steps: trim surrounding whitespace, strip exactly one recognized
    scheme/resolver prefix, percent-decode once, lowercase ASCII
    letters, split at the first "/" and validate. Idempotent on its
    own output: ``normalize_doi(d.canonical) == d``.

    Raises :class:`MalformedDoiError` for anything unusable: missing
    "10." registrant, no slash, empty suffix, control characters, or a
    percent escape that survives the single decode (ambiguous double
    encoding).
    """
    if not isinstance(raw, str):
        raise MalformedDoiError(f"expected text, got {type(raw).__name__}")
    text = _strip_scheme(raw.strip())
    text = _ascii_lower(unquote(text))
    if not text.startswith("10."):
        raise MalformedDoiError(f"not a DOI (no 10. registrant): {raw!r}")
    if any(ch < " " or ch == "\x7f" for ch in text):
        raise MalformedDoiError(f"control character in DOI: {raw!r}")
    if _DECODABLE_ESCAPE_RE.search(text):
        # A second decode would change the value; one decode is the
        # contract, so the remaining escape makes the input ambiguous.
        raise MalformedDoiError(f"ambiguous percent-encoding: {raw!r}")
    prefix, sep, suffix = text.partition("/")
    if not sep:
        raise MalformedDoiError(f"no suffix separator in DOI: {raw!r}")
    if not _PREFIX_RE.match(prefix):
        raise MalformedDoiError(f"invalid registrant prefix {prefix!r}: {raw!r}")
    if not suffix or suffix != suffix.strip():
        raise MalformedDoiError(f"empty or whitespace-edged suffix: {raw!r}")
    return Doi(prefix=prefix, suffix=suffix)


def doi_prefix(doi: Doi) -> str:
    """Registrant prefix of ``doi`` (the "10.NNNN" part)."""
    return doi.prefix


def format_doi_url(doi: Doi) -> str:
    """Canonical display/resolution URL for API responses and dumps."""
    return "https://doi.org/" + doi.canonical
