"""
Telemetry ingestion: line-delimited JSON records into a validated EventLog.
"""
import json
import logging
from collections import defaultdict
from typing import Iterable, List

from ..models import (
    ActivityEvent, VcsEvent, ReviewEvent, DiffMeta, ToolCatalog, EventLog,
    ToolClass, VcsOp, Violation, ValidationReport
)
from .errors import TelemetryParseError, TelemetrySchemaError, TelemetryValidationError

logger = logging.getLogger(__name__)

KINDS = ('activity', 'vcs', 'review', 'diff', 'tool')
DEFAULT_WORKSPACE = 'default'


def _field(obj, key, line_no, kind=str, default=None, required=True):
    if key not in obj or obj[key] is None:
        if required:
            raise TelemetryParseError(f"missing field '{key}'", line_no)
        return default
    value = obj[key]
    if kind is int:
        # bool is an int subclass; timestamps must be real integers
        if isinstance(value, bool) or not isinstance(value, int):
            raise TelemetryParseError(f"field '{key}' must be an integer", line_no)
    elif kind is bool:
        if not isinstance(value, bool):
            raise TelemetryParseError(f"field '{key}' must be a boolean", line_no)
    elif kind is str:
        if not isinstance(value, str):
            raise TelemetryParseError(f"field '{key}' must be a string", line_no)
    elif kind is list:
        if not isinstance(value, list):
            raise TelemetryParseError(f"field '{key}' must be a list", line_no)
    return value


def _check_interval(start, end, line_no):
    if end <= start:
        raise TelemetryValidationError(f"line {line_no}: interval end {end} <= start {start}")


def _parse_activity(obj, line_no):
    start = _field(obj, 'start', line_no, int)
    end = _field(obj, 'end', line_no, int)
    _check_interval(start, end, line_no)
    return ActivityEvent(
        user=_field(obj, 'user', line_no),
        tool=_field(obj, 'tool', line_no),
        workspace=_field(obj, 'workspace', line_no, default=DEFAULT_WORKSPACE, required=False),
        start=start,
        end=end
    )


def _parse_vcs(obj, line_no):
    raw_op = _field(obj, 'op', line_no)
    try:
        op = VcsOp(raw_op)
    except ValueError:
        logger.warning(f"line {line_no}: ignoring vcs op '{raw_op}'")
        return None
    commit_id = _field(obj, 'commit', line_no)
    if not commit_id:
        raise TelemetryParseError("field 'commit' must be non-empty", line_no)
    return VcsEvent(
        user=_field(obj, 'user', line_no),
        workspace=_field(obj, 'workspace', line_no, default=DEFAULT_WORKSPACE, required=False),
        op=op,
        commit_id=commit_id,
        ts=_field(obj, 'ts', line_no, int),
        auto=_field(obj, 'auto', line_no, bool, default=False, required=False)
    )


def _parse_review(obj, line_no):
    start = _field(obj, 'start', line_no, int)
    end = _field(obj, 'end', line_no, int)
    _check_interval(start, end, line_no)
    return ReviewEvent(
        user=_field(obj, 'user', line_no),
        diff_id=_field(obj, 'diff', line_no),
        start=start,
        end=end
    )


def _parse_diff(obj, line_no):
    commits = _field(obj, 'commits', line_no, list)
    if not all(isinstance(c, str) and c for c in commits):
        raise TelemetryParseError("field 'commits' must hold non-empty strings", line_no)
    pairs = _field(obj, 'platform_apps', line_no, list, default=[], required=False)
    platform_apps = []
    for pair in pairs:
        if not isinstance(pair, list) or len(pair) != 2 or not all(isinstance(p, str) for p in pair):
            raise TelemetryParseError("platform_apps entries must be [platform, app]", line_no)
        platform_apps.append((pair[0], pair[1]))
    files = _field(obj, 'files', line_no, list, default=[], required=False)
    files_changed = _field(obj, 'files_changed', line_no, int, default=0, required=False)
    loc = _field(obj, 'loc', line_no, int, default=0, required=False)
    if files_changed < 0 or loc < 0:
        raise TelemetryParseError('files_changed and loc must be nonnegative', line_no)
    landed_ts = obj.get('landed_ts')
    if landed_ts is not None:
        landed_ts = _field(obj, 'landed_ts', line_no, int)
    return DiffMeta(
        diff_id=_field(obj, 'diff', line_no),
        author=_field(obj, 'author', line_no),
        commit_ids=tuple(commits),
        files_changed=files_changed,
        loc=loc,
        shared=_field(obj, 'shared', line_no, bool, default=False, required=False),
        platform_apps=tuple(platform_apps),
        landed_ts=landed_ts,
        files=tuple(str(f) for f in files)
    )


def _parse_tool(obj, line_no):
    tool = _field(obj, 'tool', line_no)
    raw_class = _field(obj, 'class', line_no)
    try:
        return tool, ToolClass(raw_class)
    except ValueError:
        raise TelemetryParseError(f"unknown tool class '{raw_class}'", line_no)


def parse_event_log(lines: Iterable[str], strict: bool = True) -> EventLog:
    """
    Parse line-delimited telemetry records into an EventLog.

    Args:
        lines: iterable of text or UTF-8 byte lines, one JSON object per line
        strict: when True, integrity violations (commit listed in two diffs,
            auto flag on a non-checkout, diff without commits, shared diff
            without targets) raise; when False they are left for
            validate_event_log to report

    Returns:
        EventLog with every stream stably sorted by its primary timestamp
    """
    activities: List[ActivityEvent] = []
    vcs_events: List[VcsEvent] = []
    reviews: List[ReviewEvent] = []
    diffs: List[DiffMeta] = []
    classes = {}

    for line_no, line in enumerate(lines, start=1):
        if isinstance(line, bytes):
            try:
                line = line.decode('utf-8')
            except UnicodeDecodeError as e:
                raise TelemetryParseError(f"invalid UTF-8 at byte {e.start}", line_no)
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise TelemetryParseError(f"malformed JSON ({e.msg})", line_no)
        if not isinstance(obj, dict):
            raise TelemetryParseError('record must be a JSON object', line_no)

        kind = obj.get('kind')
        if kind == 'manifest':
            continue
        if kind not in KINDS:
            raise TelemetrySchemaError(f"unknown kind '{kind}'", line_no)

        if kind == 'activity':
            activities.append(_parse_activity(obj, line_no))
        elif kind == 'vcs':
            event = _parse_vcs(obj, line_no)
            if event is not None:
                vcs_events.append(event)
        elif kind == 'review':
            reviews.append(_parse_review(obj, line_no))
        elif kind == 'diff':
            diffs.append(_parse_diff(obj, line_no))
        else:
            tool, tool_class = _parse_tool(obj, line_no)
            if tool in classes and classes[tool] != tool_class:
                raise TelemetryValidationError(
                    f"line {line_no}: tool '{tool}' declared as both "
                    f"{classes[tool].value} and {tool_class.value}"
                )
            classes[tool] = tool_class

    # sorted() is stable, so input order breaks timestamp ties
    log = EventLog(
        activities=tuple(sorted(activities, key=lambda a: a.start)),
        vcs_events=tuple(sorted(vcs_events, key=lambda e: e.ts)),
        reviews=tuple(sorted(reviews, key=lambda r: r.start)),
        diffs=tuple(sorted(diffs, key=lambda d: (d.landed_ts is None, d.landed_ts or 0))),
        catalog=ToolCatalog(classes)
    )

    if strict:
        integrity = _integrity_violations(log)
        if integrity:
            raise TelemetryValidationError(integrity[0].message)
    return log


def load_event_log(path, strict=True):
    with open(path, 'rb') as f:
        return parse_event_log(f, strict=strict)


def serialize_event_log(log: EventLog) -> List[str]:
    """Render an EventLog as JSONL lines that parse back to the same log"""
    records = list(log.catalog.to_records())
    records.extend(d.to_dict() for d in log.diffs)
    records.extend(a.to_dict() for a in log.activities)
    records.extend(e.to_dict() for e in log.vcs_events)
    records.extend(r.to_dict() for r in log.reviews)
    return [json.dumps(r, sort_keys=True, separators=(',', ':')) for r in records]


def _integrity_violations(log):
    violations = []

    membership = defaultdict(list)
    for meta in log.diffs:
        if not meta.commit_ids:
            violations.append(Violation('empty commit list', f'diff {meta.diff_id} lists no commits', meta.diff_id))
        if meta.shared and not meta.platform_apps:
            violations.append(Violation(
                'shared diff without targets', f'shared diff {meta.diff_id} has no platform_apps', meta.diff_id
            ))
        for commit_id in dict.fromkeys(meta.commit_ids):
            membership[commit_id].append(meta.diff_id)
    for commit_id, diff_ids in membership.items():
        if len(diff_ids) > 1:
            violations.append(Violation(
                'duplicate commit membership',
                f"commit {commit_id} is listed in {', '.join(diff_ids)}",
                commit_id
            ))

    for event in log.vcs_events:
        if event.auto and event.op != VcsOp.CHECKOUT:
            violations.append(Violation(
                'auto flag on non-checkout',
                f'{event.op.value} of {event.commit_id} is flagged automatic',
                event.commit_id
            ))
    return violations


def validate_event_log(log: EventLog) -> ValidationReport:
    """
    List every EventLog invariant the log breaks. An empty report means the
    log is valid; violations are data, never exceptions.
    """
    violations = []

    for activity in log.activities:
        if activity.end <= activity.start:
            violations.append(Violation(
                'invalid interval',
                f'activity of {activity.user} in {activity.tool} has end <= start',
                activity.user
            ))
    for review in log.reviews:
        if review.end <= review.start:
            violations.append(Violation(
                'invalid interval', f'review of {review.diff_id} by {review.user} has end <= start', review.diff_id
            ))

    unknown = sorted({a.tool for a in log.activities if a.tool not in log.catalog})
    for tool in unknown:
        violations.append(Violation('unknown tool', f"tool '{tool}' is not in the catalog", tool))

    # Same user, same tool: raw intervals must not overlap
    by_key = defaultdict(list)
    for activity in log.activities:
        by_key[(activity.user, activity.tool)].append(activity)
    for (user, tool), items in sorted(by_key.items()):
        items.sort(key=lambda a: a.start)
        reach = None
        for activity in items:
            if reach is not None and activity.start < reach:
                violations.append(Violation(
                    'overlapping activity',
                    f'{user} has overlapping {tool} activity at {activity.start}',
                    user
                ))
            reach = activity.end if reach is None else max(reach, activity.end)

    violations.extend(_integrity_violations(log))
    return ValidationReport(tuple(violations))
