"""
Calendar utilities: ISO week bucketing and study-period segmentation
"""

from bisect import bisect_right
from dataclasses import dataclass
from datetime import date, timedelta
from typing import List, NamedTuple, Optional, Sequence, Tuple

from utils.errors import InvalidParameterError, OutsideWindowError

STUDY_START = date(2010, 1, 5)
STUDY_END = date(2020, 4, 30)

DEFAULT_BREAKPOINTS = (date(2013, 1, 1), date(2018, 1, 1))
DEFAULT_LABELS = ("2010–2012", "2012–2018", "2018–2020")


class IsoWeek(NamedTuple):
    """ISO-8601 year and week number (Monday-start weeks)"""

    year: int
    week: int

    def __str__(self) -> str:
        return f"{self.year}-W{self.week:02d}"

    def monday(self) -> date:
        return date.fromisocalendar(self.year, self.week, 1)

    @classmethod
    def parse(cls, text: str) -> "IsoWeek":
        year, _, week = text.partition("-W")
        return cls(int(year), int(week))


def iso_week_of(day: date) -> IsoWeek:
    """Map a calendar date to its ISO-8601 week"""
    year, week, _ = day.isocalendar()
    return IsoWeek(year, week)


@dataclass(frozen=True)
class PeriodSegmentation:
    """
    Study window split into labeled half-open periods

    Periods are [start, b1), [b1, b2), ..., [b_k, end]; the final period
    includes the window end date. A breakpoint date belongs to the later
    period.
    """

    start: date
    end: date
    breakpoints: Tuple[date, ...]
    labels: Tuple[str, ...]

    def __post_init__(self):
        if len(self.labels) != len(self.breakpoints) + 1:
            raise InvalidParameterError(
                f"Need {len(self.breakpoints) + 1} period labels for "
                f"{len(self.breakpoints)} breakpoints, got {len(self.labels)}"
            )
        if len(set(self.labels)) != len(self.labels):
            raise InvalidParameterError(f"Duplicate period labels: {self.labels}")
        edges = [self.start, *self.breakpoints]
        for earlier, later in zip(edges, edges[1:]):
            if later <= earlier:
                raise InvalidParameterError(
                    "Breakpoints must be strictly increasing and after the "
                    f"window start ({earlier} >= {later})"
                )
        if self.breakpoints and self.breakpoints[-1] > self.end:
            raise InvalidParameterError(
                f"Last breakpoint {self.breakpoints[-1]} is after window end {self.end}"
            )

    def periods(self) -> List[Tuple[str, date, date]]:
        """(label, first day, last day) for every period, in order"""
        starts = [self.start, *self.breakpoints]
        ends = [b - timedelta(days=1) for b in self.breakpoints] + [self.end]
        return list(zip(self.labels, starts, ends))

    def contains(self, day: date) -> bool:
        return self.start <= day <= self.end


def default_segmentation() -> PeriodSegmentation:
    return PeriodSegmentation(
        start=STUDY_START,
        end=STUDY_END,
        breakpoints=DEFAULT_BREAKPOINTS,
        labels=DEFAULT_LABELS,
    )


def segmentation_from_breakpoints(
    breakpoints: Sequence[date],
    labels: Optional[Sequence[str]] = None,
    start: date = STUDY_START,
    end: date = STUDY_END,
) -> PeriodSegmentation:
    """
    Build a segmentation from breakpoints, generating labels when none given

    Generated labels read "<first year>–<last year>" for each period, e.g.
    breakpoint 2015-01-01 over the default window gives "2010–2014" and
    "2015–2020". When two periods would share a label, every label spells
    out its first and last date instead.
    """
    breakpoints = tuple(breakpoints)
    if labels is None:
        if breakpoints == DEFAULT_BREAKPOINTS and (start, end) == (
            STUDY_START,
            STUDY_END,
        ):
            labels = DEFAULT_LABELS
        else:
            starts = [start, *breakpoints]
            ends = [b - timedelta(days=1) for b in breakpoints] + [end]
            labels = [f"{s.year}–{e.year}" for s, e in zip(starts, ends)]
            if len(set(labels)) < len(labels):
                labels = [f"{s.isoformat()}–{e.isoformat()}" for s, e in zip(starts, ends)]
    return PeriodSegmentation(
        start=start, end=end, breakpoints=breakpoints, labels=tuple(labels)
    )


def period_of(day: date, seg: PeriodSegmentation) -> str:
    """Label of the single period containing ``day``"""
    if not seg.contains(day):
        raise OutsideWindowError(
            f"Date {day} is outside the study window {seg.start} to {seg.end}"
        )
    return seg.labels[bisect_right(seg.breakpoints, day)]
