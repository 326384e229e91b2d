"""
Turns raw activity intervals into per-user, non-overlapping sessions.
"""
import heapq
import logging
from collections import defaultdict

from ..models import ActivityEvent, EventLog, Session, SessionConfig, SessionSet

logger = logging.getLogger(__name__)


def _union(intervals):
    """Join overlapping or touching intervals of one (tool, workspace)"""
    merged = []
    for start, end in sorted(intervals):
        if merged and start <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], end)
        else:
            merged.append([start, end])
    return merged


def _resolve_focus(candidates):
    """
    Sweep line over one user's intervals. The focused interval is the
    active one that started latest; ties go to the later (tool, workspace).
    """
    ranked = sorted(candidates, key=lambda c: (c[0], c[2], c[3]))
    points = sorted({p for c in ranked for p in (c[0], c[1])})

    pieces = []
    heap = []
    cursor = 0
    for left, right in zip(points, points[1:]):
        while cursor < len(ranked) and ranked[cursor][0] <= left:
            heapq.heappush(heap, (-cursor, ranked[cursor]))
            cursor += 1
        while heap and heap[0][1][1] <= left:
            heapq.heappop(heap)
        if not heap:
            continue
        _, (_, _, tool, workspace) = heap[0]
        if pieces and pieces[-1][2] == tool and pieces[-1][3] == workspace and pieces[-1][1] == left:
            pieces[-1][1] = right
        else:
            pieces.append([left, right, tool, workspace])
    return pieces


def _close_gaps(pieces, cfg):
    """
    Remove pauses from a user's focused pieces, sorted and disjoint.

    Neighbouring pieces of the same (tool, workspace) join across a pause
    shorter than idle_threshold. When other pieces sit between two pieces of one key
    less than merge_gap apart, the two are stretched over the idle time next
    to them but stay separate. The piece count never depends on merge_gap.
    """
    joined = []
    for piece in pieces:
        if joined and joined[-1][2:] == piece[2:] and piece[0] - joined[-1][1] < cfg.idle_threshold:
            joined[-1][1] = piece[1]
        else:
            joined.append(list(piece))

    forward, backward = set(), set()
    last_of_key = {}
    for i, piece in enumerate(joined):
        key = tuple(piece[2:])
        j = last_of_key.get(key)
        if j is not None and piece[0] - joined[j][1] <= cfg.merge_gap:
            forward.add(j)
            backward.add(i)
        last_of_key[key] = i

    # forward first, so a pause wanted from both sides goes to the earlier piece
    for i in sorted(forward):
        joined[i][1] = joined[i + 1][0]
    for i in sorted(backward):
        joined[i][0] = joined[i - 1][1]
    return joined


def build_sessions(log: EventLog, cfg: SessionConfig = None) -> SessionSet:
    """
    Build focus-exclusive sessions from the activity stream of a log.

    Overlaps across tools are resolved first, as focus switches. Pauses are
    then removed between the focused pieces: pieces of one (tool, workspace)
    with nothing else in between join across pauses below idle_threshold,
    and short interruptions (merge_gap) are absorbed into the surrounding
    pieces. A pause of idle_threshold or more always splits.
    """
    cfg = cfg or SessionConfig()

    unknown = sorted({a.tool for a in log.activities if a.tool not in log.catalog})
    for tool in unknown:
        logger.warning(f"tool '{tool}' missing from catalog, treating as non_coding")

    by_user = defaultdict(list)
    for activity in log.activities:
        by_user[activity.user].append(activity)

    sessions = []
    for user in sorted(by_user):
        by_key = defaultdict(list)
        for activity in by_user[user]:
            by_key[(activity.tool, activity.workspace)].append((activity.start, activity.end))

        candidates = [
            (start, end, tool, workspace)
            for (tool, workspace), intervals in by_key.items()
            for start, end in _union(intervals)
        ]
        sessions.extend(
            Session(user=user, tool=tool, workspace=workspace, start=start, end=end,
                    tool_class=log.catalog.resolve(tool))
            for start, end, tool, workspace in _close_gaps(_resolve_focus(candidates), cfg)
        )

    logger.debug(f"built {len(sessions)} sessions from {len(log.activities)} activity intervals")
    return SessionSet(tuple(sessions))


def sessions_to_activities(sessions: SessionSet):
    return tuple(
        ActivityEvent(user=s.user, tool=s.tool, workspace=s.workspace, start=s.start, end=s.end)
        for s in sessions
    )
