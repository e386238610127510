"""Partial publication dates and citation timespans.

Publication dates arrive at three precisions (year, year-month, full
date). A citation timespan is the signed difference citing - cited,
never finer than the coarser of the two dates involved.
"""
from __future__ import annotations

import datetime as _dt
import re
from dataclasses import dataclass
from typing import Optional

from dateutil.relativedelta import relativedelta

from .errors import CrociError

__all__ = [
    "MalformedDateError",
    "PartialDate",
    "Timespan",
    "compute_timespan",
    "parse_partial_date",
]

_PARTIAL_DATE_RE = re.compile(r"^(\d{4})(?:-(\d{2})(?:-(\d{2}))?)?$")

# Precision ranks, coarse to fine.
_YEAR, _MONTH, _DAY = 0, 1, 2
_PRECISION_NAMES = ("year", "month", "day")


class MalformedDateError(CrociError):
    """Not one of the accepted ISO precision forms, or calendar-invalid."""


@dataclass(frozen=True)
class PartialDate:
    """A proleptic Gregorian date known to year, month or day precision."""

    year: int
    month: Optional[int] = None
    day: Optional[int] = None

    def __post_init__(self) -> None:
        if not 1000 <= self.year <= 2999:
            raise MalformedDateError(f"year out of range: {self.year}")
        if self.day is not None and self.month is None:
            raise MalformedDateError("day given without month")
        if self.month is not None and not 1 <= self.month <= 12:
            raise MalformedDateError(f"month out of range: {self.month}")
        if self.day is not None:
            try:
                _dt.date(self.year, self.month, self.day)
            except ValueError as exc:
                raise MalformedDateError(str(exc)) from None

    @property
    def precision(self) -> str:
        return _PRECISION_NAMES[self._rank]

    @property
    def _rank(self) -> int:
        if self.day is not None:
            return _DAY
        if self.month is not None:
            return _MONTH
        return _YEAR

    def __str__(self) -> str:
        if self.day is not None:
            return f"{self.year:04d}-{self.month:02d}-{self.day:02d}"
        if self.month is not None:
            return f"{self.year:04d}-{self.month:02d}"
        return f"{self.year:04d}"


def parse_partial_date(text: str) -> PartialDate:
    """Parse exactly "yyyy", "yyyy-mm" or "yyyy-mm-dd".

    Anything else (two-digit years, out-of-range months, impossible
    calendar dates) raises :class:`MalformedDateError`.
    """
    if not isinstance(text, str):
        raise MalformedDateError(f"expected text, got {type(text).__name__}")
    m = _PARTIAL_DATE_RE.match(text)
    if not m:
        raise MalformedDateError(f"not an ISO partial date: {text!r}")
    year, month, day = m.groups()
    return PartialDate(
        year=int(year),
        month=int(month) if month is not None else None,
        day=int(day) if day is not None else None,
    )


@dataclass(frozen=True)
class Timespan:
    """Signed calendar interval at year, month or day granularity.

    ``years``/``months``/``days`` are the non-negative magnitude;
    ``negative`` carries the sign. ``precision`` records the coarser of
    the two source dates and bounds which components are meaningful.
    """

    years: int
    months: int
    days: int
    negative: bool
    precision: str

    def isoformat(self) -> str:
        parts = []
        if self.years:
            parts.append(f"{self.years}Y")
        if self.months:
            parts.append(f"{self.months}M")
        if self.days:
            parts.append(f"{self.days}D")
        if not parts:
            # Zero interval: keep the precision visible (P0Y / P0M / P0D).
            unit = {"year": "Y", "month": "M", "day": "D"}[self.precision]
            parts.append(f"0{unit}")
        sign = "-" if self.negative else ""
        return sign + "P" + "".join(parts)

    def __str__(self) -> str:
        return self.isoformat()


def _full_date_diff(later: _dt.date, earlier: _dt.date) -> tuple[int, int, int]:
    # relativedelta decomposes so that earlier + years + months + days
    # reconstructs later exactly (month additions clamp at month ends).
    delta = relativedelta(later, earlier)
    return delta.years, delta.months, delta.days


def compute_timespan(citing_date: PartialDate, cited_date: PartialDate) -> Timespan:
    """Difference citing - cited at the coarser of the two precisions.

    Negative when the citing entity predates the cited one (citations
    of later-dated material do occur in submitted data).
    """
    rank = min(citing_date._rank, cited_date._rank)
    if rank == _YEAR:
        delta = citing_date.year - cited_date.year
        return Timespan(abs(delta), 0, 0, delta < 0, "year")
    if rank == _MONTH:
        delta = (citing_date.year * 12 + citing_date.month) - (
            cited_date.year * 12 + cited_date.month
        )
        years, months = divmod(abs(delta), 12)
        return Timespan(years, months, 0, delta < 0, "month")
    citing = _dt.date(citing_date.year, citing_date.month, citing_date.day)
    cited = _dt.date(cited_date.year, cited_date.month, cited_date.day)
    if citing >= cited:
        years, months, days = _full_date_diff(citing, cited)
        negative = False
    else:
        years, months, days = _full_date_diff(cited, citing)
        negative = True
    return Timespan(years, months, days, negative, "day")
