"""
Anchor-DAT: coding_related sessions that lead straight into a precise match
are credited to the diff of that match.
"""
import logging
from bisect import bisect_right
from collections import defaultdict
from dataclasses import replace
from typing import List

from ..models import AnchorConfig, ContributingInterval, DiffDat, IntervalSource, SessionSet, ToolClass

logger = logging.getLogger(__name__)


def _anchor_points(dats):
    """
    Earliest author-owned precise piece of every commit, as
    (start, diff_id, commit_id, user).
    """
    earliest = {}
    for dat in dats:
        for interval in dat.intervals_of(IntervalSource.COMMIT):
            if interval.user != dat.author:
                continue
            key = (dat.diff_id, interval.ref)
            if key not in earliest or interval.start < earliest[key][0]:
                earliest[key] = (interval.start, dat.diff_id, interval.ref, interval.user)
    return list(earliest.values())


def extend_with_anchors(dats: List[DiffDat], sessions: SessionSet, cfg: AnchorConfig = None) -> List[DiffDat]:
    """
    Walk backward from the first precise piece of each commit and claim the
    unbroken run of unclaimed coding_related sessions before it.

    Args:
        dats: precise results from assemble_diff_dat
        sessions: the same SessionSet the precise match ran on
        cfg: gap and per-diff budget limits

    Returns:
        new DiffDat list in the same order, anchor_extra filled in
    """
    cfg = cfg or AnchorConfig()

    timeline = {}
    for user in sessions.users:
        ordered = sorted(sessions.for_user(user), key=lambda s: s.start)
        timeline[user] = (ordered, [s.end for s in ordered])

    claimed = set()
    added = defaultdict(list)
    budget = defaultdict(int)

    # Latest first: the chronologically next precise match wins a contested chain
    for anchor_start, diff_id, commit_id, user in sorted(_anchor_points(dats), reverse=True):
        if user not in timeline:
            continue
        ordered, ends = timeline[user]
        idx = bisect_right(ends, anchor_start)
        if idx < len(ordered) and ordered[idx].start < anchor_start:
            # the match begins mid-session, so the focus just before it is ide time
            continue

        boundary = anchor_start
        for session in reversed(ordered[:idx]):
            if session.tool_class != ToolClass.CODING_RELATED or session in claimed:
                break
            if boundary - session.end > cfg.max_gap:
                break
            if budget[diff_id] + session.duration > cfg.max_total:
                break
            claimed.add(session)
            budget[diff_id] += session.duration
            added[diff_id].append(ContributingInterval(
                user=session.user, tool=session.tool, workspace=session.workspace,
                start=session.start, end=session.end,
                source=IntervalSource.ANCHOR, ref=commit_id
            ))
            boundary = session.start

    logger.debug(f"anchored {len(claimed)} sessions across {len(added)} diffs")

    extended = []
    for dat in dats:
        extra = added.get(dat.diff_id)
        if not extra:
            extended.append(dat)
            continue
        intervals = sorted(dat.contributing_intervals + tuple(extra), key=lambda i: (i.start, i.user, i.end))
        extended.append(replace(
            dat,
            contributing_intervals=tuple(intervals),
            anchor_extra=dat.anchor_extra + sum(i.duration for i in extra)
        ))
    return extended
