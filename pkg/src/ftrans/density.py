"""Asymptotic and Banach density estimates with exact rational output.

The limits in the definitions are replaced by extrema over a tail: the upper
half of the checkpoint list for asymptotic density, and left endpoints
``k >= k_lo`` (default ``horizon // 2``) for Banach density.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ConfigurationError
from .intset import RunSet, _pack

__all__ = [
    "DensityReport",
    "asymptotic_density_estimate",
    "banach_density_estimate",
    "boundary_checkpoints",
    "report_to_csv",
]


@dataclass(frozen=True)
class DensityReport:
    checkpoints: tuple[tuple[int, int], ...] = ()
    lower_estimate: Fraction | None = None
    upper_estimate: Fraction | None = None
    banach: tuple[tuple[int, Fraction, Fraction], ...] = ()
    tail_start: int = 0
    witnesses: dict = field(default_factory=dict)

    def ratio(self, i: int) -> Fraction:
        n, c = self.checkpoints[i]
        return Fraction(c, n)

    def ratio_at(self, n: int) -> Fraction:
        for m, c in self.checkpoints:
            if m == n:
                return Fraction(c, m)
        raise KeyError(n)


def boundary_checkpoints(A: RunSet, horizon: int) -> np.ndarray:
    """Run boundaries of ``A`` inside ``[1, horizon]`` plus ``horizon``.

    The prefix ratio ``|A ∩ [1,n]| / n`` is monotone between consecutive run
    boundaries, so its extrema over any range are attained at these points.
    """
    part = A.truncate(horizon)
    pts = np.concatenate((part.starts - 1, part.ends - 1, _pack([int(horizon)])))
    pts = np.unique(pts)
    return pts[pts >= 1]


def _extreme_ratio(ns: np.ndarray, counts: np.ndarray, largest: bool) -> tuple[Fraction, int]:
    """Exact extreme of counts/ns; floats only shortlist candidates."""
    if ns.dtype == object or counts.dtype == object or len(ns) < 64:
        best = None
        at = 0
        for n, c in zip(ns.tolist(), counts.tolist()):
            r = Fraction(c, n)
            if best is None or (r > best if largest else r < best):
                best, at = r, n
        return best, at
    approx = counts.astype(np.float64) / ns.astype(np.float64)
    target = approx.max() if largest else approx.min()
    close = np.flatnonzero(np.abs(approx - target) <= 1e-9 * max(abs(target), 1e-300))
    return _extreme_ratio(ns[close].astype(object), counts[close].astype(object), largest)


def asymptotic_density_estimate(
    A: RunSet,
    checkpoints: Sequence[int] | None = None,
    tail_fraction: float = 0.5,
    horizon: int | None = None,
) -> DensityReport:
    """Prefix ratios at ``checkpoints`` and their extrema over the tail window.

    With ``checkpoints=None`` the run boundaries of ``A`` up to ``horizon`` are
    used.  The tail window is the last ``1 - tail_fraction`` share of the list.
    """
    if checkpoints is None:
        if horizon is None:
            raise ConfigurationError("need checkpoints or a horizon")
        checkpoints = boundary_checkpoints(A, horizon)
    n_arr = _pack(np.asarray(checkpoints) if not isinstance(checkpoints, np.ndarray) else checkpoints)
    if len(n_arr) == 0:
        raise ConfigurationError("empty checkpoint list")
    if len(n_arr) > 1 and not bool(np.all(n_arr[1:] > n_arr[:-1])):
        raise ConfigurationError("checkpoints must be strictly increasing")
    if n_arr[0] < 1:
        raise ConfigurationError("checkpoints must be >= 1")
    counts = _pack(np.asarray(A.prefix_count(n_arr)))
    checkpoints = n_arr
    first = min(int(len(checkpoints) * tail_fraction), len(checkpoints) - 1)
    upper, at_upper = _extreme_ratio(n_arr[first:], counts[first:], largest=True)
    lower, at_lower = _extreme_ratio(n_arr[first:], counts[first:], largest=False)
    pairs = tuple(zip(n_arr.tolist(), counts.tolist()))
    return DensityReport(
        checkpoints=pairs,
        lower_estimate=lower,
        upper_estimate=upper,
        tail_start=int(checkpoints[first]),
        witnesses={"upper_at": at_upper, "lower_at": at_lower},
    )


def banach_density_estimate(
    A: RunSet,
    s_list: Sequence[int],
    horizon: int,
    k_lo: int | None = None,
) -> DensityReport:
    """Window extrema ``min/max_k |A ∩ [k+1, k+s]| / s`` for ``k_lo <= k <= horizon - s``."""
    horizon = int(horizon)
    if k_lo is None:
        k_lo = horizon // 2
    if not s_list:
        raise ConfigurationError("empty window-length list")
    rows = []
    where = {}
    for s in s_list:
        s = int(s)
        if s < 1 or s > horizon - k_lo:
            raise ConfigurationError(f"window length {s} does not fit in [{k_lo}, {horizon}]")
        lo, k_min, hi, k_max = A.window_extrema(s, k_lo, horizon - s)
        rows.append((s, Fraction(lo, s), Fraction(hi, s)))
        where[s] = {"min_k": k_min, "min_count": lo, "max_k": k_max, "max_count": hi}
    return DensityReport(banach=tuple(rows), tail_start=k_lo, witnesses={"windows": where})


def report_to_csv(report: DensityReport) -> str:
    """CSV with columns n, count, ratio_num, ratio_den, ratio_float."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n", "count", "ratio_num", "ratio_den", "ratio_float"])
    for n, c in report.checkpoints:
        r = Fraction(c, n)
        writer.writerow([str(n), str(c), str(r.numerator), str(r.denominator), f"{float(r):.15g}"])
    return buf.getvalue()
