"""
Precise matches: 1-left-shift attribution of ide sessions to the
commit-creation event that follows them, then assembly into per-diff DAT.
"""
import logging
from bisect import bisect_left, bisect_right
from collections import defaultdict
from dataclasses import replace
from typing import Dict, Iterable, List

from ..models import (
    CommitAttribution, ContributingInterval, DiffDat, DiffMeta, IntervalSource,
    ReviewEvent, SessionSet, ToolClass, VcsEvent, VcsOp
)

logger = logging.getLogger(__name__)


def filter_vcs_events(events: Iterable[VcsEvent]) -> List[VcsEvent]:
    """Drop every checkout, automatic or manual; keep commit and amend in order"""
    return [e for e in events if e.op.creates_commit]


def _split_at(session, cut_points):
    pieces = []
    start = session.start
    for cut in cut_points:
        pieces.append(replace(session, start=start, end=cut))
        start = cut
    pieces.append(replace(session, start=start, end=session.end))
    return pieces


def match_commits_to_sessions(sessions: SessionSet, events: Iterable[VcsEvent]) -> CommitAttribution:
    """
    Attribute each ide session to the first commit-creation event at or after
    its end, within the same (user, workspace).

    A session that straddles a commit timestamp is split there, the left part
    going to that commit. Ide time after the last creation event is trailing
    and stays unattributed. An amend that writes a new commit id is linked to
    the creation event before it in the same scope.
    """
    by_scope = defaultdict(list)
    for event in events:
        by_scope[(event.user, event.workspace)].append(event)

    amends = {}
    for scoped in by_scope.values():
        scoped.sort(key=lambda e: e.ts)
        for previous, event in zip(scoped, scoped[1:]):
            if event.op == VcsOp.AMEND and event.commit_id != previous.commit_id:
                amends.setdefault(event.commit_id, previous.commit_id)

    by_commit = defaultdict(list)
    unattributed = []
    for session in sessions.of_class(ToolClass.IDE):
        scoped = by_scope.get((session.user, session.workspace), [])
        stamps = [e.ts for e in scoped]
        lo = bisect_right(stamps, session.start)
        hi = bisect_left(stamps, session.end)
        cuts = sorted(set(stamps[lo:hi]))
        for piece in _split_at(session, cuts):
            idx = bisect_left(stamps, piece.end)
            if idx == len(scoped):
                unattributed.append(piece)
            else:
                by_commit[scoped[idx].commit_id].append(piece)

    return CommitAttribution(
        by_commit={commit_id: tuple(pieces) for commit_id, pieces in by_commit.items()},
        unattributed=tuple(unattributed),
        amends=dict(sorted(amends.items()))
    )


def _first_listed(commit_id, step, listed):
    seen, frontier = {commit_id}, [commit_id]
    while frontier:
        nxt = []
        for current in frontier:
            for linked in step(current):
                if linked in listed:
                    return listed[linked]
                if linked not in seen:
                    seen.add(linked)
                    nxt.append(linked)
        frontier = nxt
    return None


def amend_owners(diffs: Iterable[DiffMeta], attr: CommitAttribution) -> Dict[str, str]:
    """
    Diff owning each amend-chain commit that no diff lists itself.

    The nearest listed commit walking back through what was amended wins;
    failing that, the nearest listed commit walking forward to later amends.
    """
    listed = {}
    for meta in sorted(diffs, key=lambda d: d.diff_id):
        for commit_id in meta.commit_ids:
            listed.setdefault(commit_id, meta.diff_id)

    amended_by = defaultdict(list)
    for new, old in attr.amends.items():
        amended_by[old].append(new)

    owners = {}
    for commit_id in sorted(set(attr.amends) | set(attr.amends.values())):
        if commit_id in listed:
            continue
        owner = _first_listed(commit_id, lambda c: [attr.amends[c]] if c in attr.amends else [], listed)
        if owner is None:
            owner = _first_listed(commit_id, lambda c: sorted(amended_by.get(c, [])), listed)
        if owner is not None:
            owners[commit_id] = owner
    return owners


def _union(intervals):
    merged = []
    for start, end in sorted(intervals):
        if merged and start <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], end)
        else:
            merged.append([start, end])
    return merged


def unmatched_reviews(diffs: Iterable[DiffMeta], reviews: Iterable[ReviewEvent]) -> List[ReviewEvent]:
    known = {d.diff_id for d in diffs}
    return [r for r in reviews if r.diff_id not in known]


def assemble_diff_dat(attr: CommitAttribution, diffs: Iterable[DiffMeta],
                      reviews: Iterable[ReviewEvent] = ()) -> List[DiffDat]:
    """
    Roll commit attribution up into per-diff DAT split by role.

    Commits that belong to no diff are dropped; amended commit ids go to the
    diff of the commit they amend. Diffs without attributed time are still
    returned, with zero durations.
    """
    diffs = list(diffs)
    reviews = list(reviews)

    amended = defaultdict(list)
    for commit_id, diff_id in amend_owners(diffs, attr).items():
        amended[diff_id].append(commit_id)

    for review in unmatched_reviews(diffs, reviews):
        logger.warning(f"review by {review.user} references unknown diff {review.diff_id}, excluded")

    reviews_by_diff = defaultdict(lambda: defaultdict(list))
    for review in reviews:
        reviews_by_diff[review.diff_id][review.user].append((review.start, review.end))

    results = []
    for meta in sorted(diffs, key=lambda d: d.diff_id):
        intervals = []
        author_precise = 0
        coauthor = defaultdict(int)
        for commit_id in dict.fromkeys(list(meta.commit_ids) + amended[meta.diff_id]):
            for piece in attr.sessions_for(commit_id):
                intervals.append(ContributingInterval(
                    user=piece.user, tool=piece.tool, workspace=piece.workspace,
                    start=piece.start, end=piece.end,
                    source=IntervalSource.COMMIT, ref=commit_id
                ))
                if piece.user == meta.author:
                    author_precise += piece.duration
                else:
                    coauthor[piece.user] += piece.duration

        reviewer = {}
        for user, spans in sorted(reviews_by_diff.get(meta.diff_id, {}).items()):
            if user == meta.author:
                logger.debug(f"ignoring review of {meta.diff_id} by its own author")
                continue
            total = 0
            for start, end in _union(spans):
                intervals.append(ContributingInterval(
                    user=user, tool='review', workspace='', start=start, end=end,
                    source=IntervalSource.REVIEW, ref=meta.diff_id
                ))
                total += end - start
            reviewer[user] = total

        intervals.sort(key=lambda i: (i.start, i.user, i.end))
        results.append(DiffDat(
            diff_id=meta.diff_id,
            author=meta.author,
            author_precise=author_precise,
            reviewer_precise=reviewer,
            coauthor_precise=dict(sorted(coauthor.items())),
            contributing_intervals=tuple(intervals)
        ))
    return results
