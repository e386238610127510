"""ORCID identifiers with ISO 7064 mod 11-2 check-character validation."""
from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import CrociError

__all__ = [
    "MalformedOrcidError",
    "Orcid",
    "OrcidChecksumError",
    "validate_orcid",
]

_ORCID_RE = re.compile(r"^\d{4}-\d{4}-\d{4}-\d{3}[\dX]$")
_URL_PREFIX = "https://orcid.org/"


class MalformedOrcidError(CrociError):
    """The string does not have the dddd-dddd-dddd-dddX shape."""


class OrcidChecksumError(CrociError):
    """Shape is fine but the final check character is wrong."""


@dataclass(frozen=True)
class Orcid:
    """A validated ORCID in its bare 19-character form."""

    value: str

    def __str__(self) -> str:
        return self.value


def _check_character(digits: str) -> str:
    # ISO 7064 mod 11-2 over the 15 base digits.
    total = 0
    for d in digits:
        total = (total + int(d)) * 2
    result = (12 - total % 11) % 11
    return "X" if result == 10 else str(result)


def validate_orcid(text: str) -> Orcid:
    """Validate ``text`` and return the normalized bare form.

    Accepts the bare identifier or the "https://orcid.org/" URL form; a
    lowercase "x" check character is normalized to uppercase. Raises
    :class:`MalformedOrcidError` on shape violations and
    :class:`OrcidChecksumError` when the check character does not match.
    """
    if not isinstance(text, str):
        raise MalformedOrcidError(f"expected text, got {type(text).__name__}")
    candidate = text.strip()
    if candidate.startswith(_URL_PREFIX):
        candidate = candidate[len(_URL_PREFIX):]
    if candidate.endswith("x"):
        candidate = candidate[:-1] + "X"
    if not _ORCID_RE.match(candidate):
        raise MalformedOrcidError(f"not an ORCID: {text!r}")
    digits = candidate.replace("-", "")
    expected = _check_character(digits[:15])
    if digits[15] != expected:
        raise OrcidChecksumError(
            f"ORCID check character mismatch in {candidate}: "
            f"expected {expected}, found {digits[15]}"
        )
    return Orcid(candidate)
