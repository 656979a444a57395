"""Ranking stability across day intervals: Spearman coefficient and
membership retention, plus the distribution summaries behind boxplots.

Spearman is computed as Pearson correlation on within-list positions, with
tied balances given average (fractional) ranks.  Addresses present in only
one list are dropped by default (`mode="intersection"`); `mode="penalized"`
keeps the union and assigns absentees rank len(list)+1.  Pairs with fewer
than two usable members, or with no rank variance, yield None rather than a
number.
"""

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .balances import Ranking

SPEARMAN_MODES = ("intersection", "penalized")


@dataclass
class StabilitySeries:
    """Per-day stability coefficients for one (metric, top-N, interval)."""

    metric: str
    top_n: int
    interval: int
    values: dict[int, float | None]

    def defined(self) -> list[float]:
        return [v for v in self.values.values() if v is not None]


@dataclass
class DistributionSummary:
    mean: float
    std: float
    median: float
    q1: float
    q3: float
    iqr: float
    min: float
    max: float

    def to_dict(self) -> dict[str, float]:
        return {
            "mean": self.mean,
            "std": self.std,
            "median": self.median,
            "q1": self.q1,
            "q3": self.q3,
            "iqr": self.iqr,
            "min": self.min,
            "max": self.max,
        }


def _pearson(x: np.ndarray, y: np.ndarray) -> float | None:
    xd = x - x.mean()
    yd = y - y.mean()
    den = float(np.dot(xd, xd)) * float(np.dot(yd, yd))
    if den <= 0.0:
        return None
    r = float(np.dot(xd, yd)) / float(np.sqrt(den))
    return min(1.0, max(-1.0, r))


def spearman(
    rank_a: Ranking, rank_b: Ranking, mode: str = "intersection"
) -> float | None:
    """Spearman coefficient between two rankings, or None when undefined.

    Member ranks come from each address's position within its own list
    (average ranks on tied balances).  Undefined cases: fewer than two
    shared members, or zero rank variance on either side.
    """
    if mode not in SPEARMAN_MODES:
        raise ValueError(f"unknown spearman mode {mode!r}")
    if not len(rank_a) or not len(rank_b):
        raise ValueError("rankings must be non-empty")
    ra = rank_a.rank_by_id()
    rb = rank_b.rank_by_id()
    if mode == "intersection":
        common = sorted(rank_a.members() & rank_b.members())
        if len(common) < 2:
            return None
        x = np.array([ra[i] for i in common])
        y = np.array([rb[i] for i in common])
    else:
        universe = sorted(rank_a.members() | rank_b.members())
        if len(universe) < 2:
            return None
        pa = float(len(rank_a) + 1)
        pb = float(len(rank_b) + 1)
        x = np.array([ra.get(i, pa) for i in universe])
        y = np.array([rb.get(i, pb) for i in universe])
    return _pearson(x, y)


def retention(rank_a: Ranking, rank_b: Ranking, n: int) -> float:
    """Fraction of top-n membership shared by two rankings.

    Both rankings are truncated to n first.  The denominator is the larger
    truncated size, so identical memberships score 1.0 even when fewer than
    n addresses are funded.  Two empty rankings coincide and score 1.0.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    a = rank_a.truncated(n).members()
    b = rank_b.truncated(n).members()
    denom = max(len(a), len(b))
    if denom == 0:
        return 1.0
    return len(a & b) / denom


def stability_series(
    rankings: Sequence[Ranking],
    n: int,
    interval: int,
    metric: str = "spearman",
    mode: str = "intersection",
) -> StabilitySeries:
    """Per-day stability between day d and day d+interval.

    The series covers every day d where both endpoints have rankings; an
    interval longer than the history yields an empty series.
    """
    if interval < 1:
        raise ValueError("interval must be >= 1")
    if metric not in ("spearman", "retention"):
        raise ValueError(f"unknown stability metric {metric!r}")
    values: dict[int, float | None] = {}
    for d in range(len(rankings) - interval):
        a = rankings[d].truncated(n)
        b = rankings[d + interval].truncated(n)
        if metric == "retention":
            values[d] = retention(a, b, n)
        else:
            if not len(a) or not len(b):
                values[d] = None
            else:
                values[d] = spearman(a, b, mode)
    return StabilitySeries(metric, n, interval, values)


def summarize(series: StabilitySeries | Iterable[float]) -> DistributionSummary:
    """Mean, spread, and quartiles of a series, undefined entries dropped.

    Quartiles use linear interpolation between closest ranks; the standard
    deviation is the population form (ddof=0).
    """
    if isinstance(series, StabilitySeries):
        data = series.defined()
    else:
        data = [v for v in series if v is not None]
    if not data:
        raise ValueError("cannot summarize an empty series")
    arr = np.asarray(data, dtype=np.float64)
    q1, med, q3 = np.percentile(arr, [25.0, 50.0, 75.0])
    return DistributionSummary(
        mean=float(arr.mean()),
        std=float(arr.std()),
        median=float(med),
        q1=float(q1),
        q3=float(q3),
        iqr=float(q3 - q1),
        min=float(arr.min()),
        max=float(arr.max()),
    )
