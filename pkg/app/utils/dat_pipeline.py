"""
End-to-end DAT computation and the structural checks every result must pass.
"""
import logging
from collections import defaultdict
from typing import Iterable, Optional

from ..models import (
    AnchorConfig, CommitAttribution, DatRun, DiffDat, EventLog, IntervalSource,
    SessionConfig, SessionSet, ToolClass, ValidationReport, Violation
)
from .anchor_heuristic import extend_with_anchors
from .precise_matcher import assemble_diff_dat, filter_vcs_events, match_commits_to_sessions
from .sessionizer import build_sessions

logger = logging.getLogger(__name__)

DAY_MS = 86_400_000


def compute_dat(log: EventLog, session_cfg: SessionConfig = None, anchor_cfg: AnchorConfig = None) -> DatRun:
    """
    Run sessionizing, precise matching and anchoring over one log.

    Args:
        log: parsed EventLog
        session_cfg: noise-removal thresholds
        anchor_cfg: anchor walk limits

    Returns:
        DatRun holding sessions, commit attribution and per-diff DAT
    """
    sessions = build_sessions(log, session_cfg)
    attribution = match_commits_to_sessions(sessions, filter_vcs_events(log.vcs_events))
    precise = assemble_diff_dat(attribution, log.diffs, log.reviews)
    dats = extend_with_anchors(precise, sessions, anchor_cfg)
    logger.info(f"computed DAT for {len(dats)} diffs from {len(sessions)} sessions")
    return DatRun(sessions=sessions, attribution=attribution, dats=tuple(dats))


def _split_by_day(start, end):
    while start < end:
        day = start // DAY_MS
        cut = min(end, (day + 1) * DAY_MS)
        yield day, cut - start
        start = cut


def _overlap_violations(dats):
    by_user = defaultdict(list)
    for dat in dats:
        for interval in dat.contributing_intervals:
            by_user[interval.user].append((interval.start, interval.end, dat.diff_id))

    violations = []
    for user in sorted(by_user):
        reach, owner = None, None
        for start, end, diff_id in sorted(by_user[user]):
            if reach is not None and start < reach and diff_id != owner:
                violations.append(Violation(
                    'dat_overlap',
                    f'{user} has time in both {owner} and {diff_id} at {start}',
                    user
                ))
            if reach is None or end > reach:
                reach, owner = end, diff_id
    return violations


def _daily_totals(dats, sources):
    totals = defaultdict(int)
    for dat in dats:
        for interval in dat.intervals_of(*sources):
            for day, amount in _split_by_day(interval.start, interval.end):
                totals[(interval.user, day)] += amount
    return totals


def _conservation_violations(sessions, attribution, dats):
    in_diff = defaultdict(int)
    for dat in dats:
        for interval in dat.intervals_of(IntervalSource.COMMIT):
            in_diff[interval.user] += interval.duration

    listed = {i.ref for dat in dats for i in dat.intervals_of(IntervalSource.COMMIT)}
    outside = defaultdict(int)
    for commit_id, pieces in attribution.by_commit.items():
        if commit_id in listed:
            continue
        for piece in pieces:
            outside[piece.user] += piece.duration

    violations = []
    for user in sessions.users:
        ide_total = sum(s.duration for s in sessions.for_user(user) if s.tool_class == ToolClass.IDE)
        accounted = in_diff[user] + outside[user] + attribution.unattributed_time(user)
        if ide_total != accounted:
            violations.append(Violation(
                'ide_conservation',
                f'{user} has {ide_total} ms of ide time but {accounted} ms accounted for',
                user
            ))
    return violations


def check_dat_invariants(log: EventLog, sessions: SessionSet, dats: Iterable[DiffDat],
                         attribution: Optional[CommitAttribution] = None) -> ValidationReport:
    """
    Check DAT results against the properties any correct attribution keeps.

    Rules: dat_overlap, day_bound, dat_within_tsd, anchor_below_precise and,
    when the attribution is passed, ide_conservation.
    """
    dats = list(dats)
    violations = _overlap_violations(dats)

    every_source = tuple(IntervalSource)
    for (user, day), total in sorted(_daily_totals(dats, every_source).items()):
        if total > DAY_MS:
            violations.append(Violation('day_bound', f'{user} has {total} ms of DAT on day {day}', user))

    coding = defaultdict(int)
    for session in sessions:
        if session.tool_class.is_coding:
            for day, amount in _split_by_day(session.start, session.end):
                coding[(session.user, day)] += amount
    authoring = _daily_totals(dats, (IntervalSource.COMMIT, IntervalSource.ANCHOR))
    for (user, day), total in sorted(authoring.items()):
        if total > coding[(user, day)]:
            violations.append(Violation(
                'dat_within_tsd',
                f'{user} has {total} ms of authoring DAT on day {day} '
                f'but only {coding[(user, day)]} ms of coding time',
                user
            ))

    for dat in dats:
        if dat.anchor_extra < 0 or dat.anchor_dat < dat.author_precise:
            violations.append(Violation(
                'anchor_below_precise', f'{dat.diff_id} has Anchor-DAT below its precise DAT', dat.diff_id
            ))

    if attribution is not None:
        violations.extend(_conservation_violations(sessions, attribution, dats))

    if violations:
        logger.warning(f"{len(violations)} DAT invariant violations in {len(log.diffs)} diffs")
    return ValidationReport(tuple(violations))
