"""
Comparison metrics (TSD, CGT) and the robust aggregates DAT is reported with.
"""
import logging
import math
from typing import Callable, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..models import (
    AggregateReport, CgtRecord, DiffDat, DiffMeta, EstimateRecord, EstimateReport,
    IntervalSource, SessionSet, TrendPoint, TsdRecord
)
from .errors import StatisticsError

logger = logging.getLogger(__name__)

METRICS = ('anchor', 'precise')


def nearest_rank(values: Sequence[float], p: float) -> float:
    """
    Nearest-rank quantile: the ceil(p*n)-th smallest value (1-based).

    Args:
        values: non-empty sample
        p: fraction in (0, 1]

    Returns:
        the order statistic at rank ceil(p*n)
    """
    if len(values) == 0:
        raise StatisticsError('no data')
    if not 0 < p <= 1:
        raise StatisticsError(f'quantile fraction {p} outside (0, 1]')
    ordered = np.sort(np.asarray(values, dtype=float))
    # the epsilon keeps p*n that is integral in exact arithmetic from rounding up
    rank = max(1, math.ceil(p * len(ordered) - 1e-9))
    return float(ordered[rank - 1])


def winsorized_mean(values: Sequence[float], p: float = 0.99) -> float:
    """Upper-tail winsorized mean; values above the nearest-rank p-quantile are capped"""
    cap = nearest_rank(values, p)
    return float(np.minimum(np.asarray(values, dtype=float), cap).mean())


def dat_value(dat: DiffDat, metric: str = 'anchor') -> int:
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {', '.join(METRICS)}")
    return dat.anchor_dat if metric == 'anchor' else dat.author_precise


def compute_tsd(sessions: SessionSet, diffs: Iterable[DiffMeta], window: Tuple[int, int]) -> List[TsdRecord]:
    """
    Time Spent per Diff over a window, per user.

    Args:
        sessions: sessionized activity
        diffs: diff metadata; a diff counts when its landed_ts falls in the window
        window: (start, end) in ms, end exclusive

    Returns:
        one TsdRecord per user with coding time or landed diffs, sorted by user
    """
    start, end = window
    if end <= start:
        raise StatisticsError(f'empty window [{start}, {end})')

    coding = {}
    for session in sessions:
        if not session.tool_class.is_coding:
            continue
        overlap = min(session.end, end) - max(session.start, start)
        if overlap > 0:
            coding[session.user] = coding.get(session.user, 0) + overlap

    published = {}
    for meta in diffs:
        if meta.landed_ts is not None and start <= meta.landed_ts < end:
            published[meta.author] = published.get(meta.author, 0) + 1

    records = []
    for user in sorted(set(coding) | set(published)):
        total = coding.get(user, 0)
        count = published.get(user, 0)
        records.append(TsdRecord(
            user=user, window_start=start, window_end=end,
            total_coding_time=total, diffs_published=count,
            tsd=total / count if count else None
        ))
    return records


def compute_cgt(dats: Iterable[DiffDat], diffs: Iterable[DiffMeta]) -> Tuple[List[CgtRecord], List[str]]:
    """
    Code Gestation Time: landing time minus the first attributed activity.

    Returns:
        (records sorted by diff_id, notes naming each skipped diff)
    """
    metas = {d.diff_id: d for d in diffs}
    records, notes = [], []
    for dat in sorted(dats, key=lambda d: d.diff_id):
        meta = metas.get(dat.diff_id)
        intervals = dat.intervals_of(IntervalSource.COMMIT, IntervalSource.ANCHOR)
        if meta is None or meta.landed_ts is None:
            notes.append(f'{dat.diff_id}: no landing time')
            continue
        if not intervals:
            notes.append(f'{dat.diff_id}: no contributing interval')
            continue
        coding_start = min(i.start for i in intervals)
        if meta.landed_ts < coding_start:
            notes.append(f'{dat.diff_id}: landed before coding started')
            continue
        records.append(CgtRecord(diff_id=dat.diff_id, coding_start=coding_start, landed=meta.landed_ts))

    for note in notes:
        logger.warning(f"skipping CGT for {note}")
    return records, notes


def coverage(dats: Iterable[DiffDat], diffs: Iterable[DiffMeta],
             eligible: Optional[Callable[[DiffMeta], bool]] = None) -> float:
    """Fraction of eligible diffs with nonzero Anchor-DAT"""
    pool = [d for d in diffs if eligible is None or eligible(d)]
    if not pool:
        raise StatisticsError('no eligible diffs')
    by_id = {d.diff_id: d for d in dats}
    matched = sum(1 for meta in pool if meta.diff_id in by_id and by_id[meta.diff_id].anchor_dat > 0)
    return matched / len(pool)


def _matched_values(dats, diffs, metric):
    landed = {d.diff_id: d.landed_ts for d in diffs}
    rows = []
    for dat in dats:
        value = dat_value(dat, metric)
        if value > 0:
            rows.append((dat.diff_id, landed.get(dat.diff_id), value))
    return rows


def trendline(dats: Iterable[DiffDat], diffs: Iterable[DiffMeta], period: str = 'W',
              p: float = 0.99, metric: str = 'anchor') -> List[TrendPoint]:
    """
    Winsorized mean DAT per calendar period of landing time.

    Diffs without DAT or landing time are left out. Periods between the first
    and last populated one are emitted with count 0 and no mean.
    """
    rows = [r for r in _matched_values(dats, diffs, metric) if r[1] is not None]
    if not rows:
        return []

    frame = pd.DataFrame(rows, columns=['diff', 'landed', 'value'])
    frame['bucket'] = pd.to_datetime(frame['landed'], unit='ms').dt.to_period(period)
    grouped = frame.groupby('bucket')['value']

    points = []
    for bucket in pd.period_range(start=frame['bucket'].min(), end=frame['bucket'].max()):
        if bucket in grouped.groups:
            values = grouped.get_group(bucket).to_numpy()
            points.append(TrendPoint(str(bucket), int(len(values)), winsorized_mean(values, p)))
        else:
            points.append(TrendPoint(str(bucket), 0, None))
    return points


def aggregate_report(dats: Iterable[DiffDat], diffs: Iterable[DiffMeta], p: float = 0.99,
                     period: str = 'W', metric: str = 'anchor',
                     eligible: Optional[Callable[[DiffMeta], bool]] = None) -> AggregateReport:
    dats, diffs = list(dats), list(diffs)
    values = [v for _, _, v in _matched_values(dats, diffs, metric)]
    return AggregateReport(
        winsorized_mean=winsorized_mean(values, p) if values else None,
        percentile=p,
        coverage=coverage(dats, diffs, eligible) if diffs else 0.0,
        n_diffs=len(diffs),
        trendline=tuple(trendline(dats, diffs, period, p, metric))
    )


def compare_estimates(dats: Iterable[DiffDat], estimates: Mapping[str, int]) -> EstimateReport:
    """
    Join self-reported per-diff estimates with Anchor-DAT.

    Drift is the mean (estimate - DAT) within each third of the joined diffs
    ordered by DAT, shortest first.
    """
    by_id = {d.diff_id: d for d in dats}
    records = [
        EstimateRecord(diff_id=diff_id, dat=by_id[diff_id].anchor_dat, estimate=int(estimate))
        for diff_id, estimate in sorted(estimates.items()) if diff_id in by_id
    ]
    missing = tuple(sorted(d for d in estimates if d not in by_id))
    if missing:
        logger.warning(f"{len(missing)} estimates reference diffs without DAT")
    if not records:
        return EstimateReport(records=(), mean_difference=None, tercile_drift=(None, None, None), missing=missing)

    ordered = sorted(records, key=lambda r: (r.dat, r.diff_id))
    drift = tuple(
        float(np.mean([ordered[i].difference for i in chunk])) if len(chunk) else None
        for chunk in np.array_split(np.arange(len(ordered)), 3)
    )
    return EstimateReport(
        records=tuple(records),
        mean_difference=float(np.mean([r.difference for r in records])),
        tercile_drift=drift,
        missing=missing
    )
