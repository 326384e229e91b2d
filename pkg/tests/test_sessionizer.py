"""
Sessionizer tests
"""
import logging

import numpy as np
import pytest

from app.models import ActivityEvent, EventLog, SessionConfig, ToolCatalog, ToolClass
from app.utils.sessionizer import build_sessions, sessions_to_activities


def _spans(sessions, at):
    """(tool, start, end) per session with times back in minutes"""
    return [(s.tool, (s.start - at(0)) / 60_000, (s.end - at(0)) / 60_000) for s in sessions]


@pytest.mark.sessions
class TestFocusResolution:
    """Overlapping tools become focus switches"""

    def test_later_start_takes_focus(self, builder):
        """The interval that began last holds the focus"""
        builder.activity('u1', 'vscode', 0, 100).activity('u1', 'terminal', 50, 150)

        sessions = build_sessions(builder.log())

        assert _spans(sessions, builder.at) == [('vscode', 0, 50), ('terminal', 50, 150)]

    def test_nested_interval_splits_outer(self, builder):
        """A short switch inside a long stretch returns focus afterwards"""
        builder.activity('u1', 'vscode', 0, 100).activity('u1', 'terminal', 20, 30)

        sessions = build_sessions(builder.log())

        assert _spans(sessions, builder.at) == [
            ('vscode', 0, 20), ('terminal', 20, 30), ('vscode', 30, 100)
        ]

    def test_equal_start_tie(self, builder):
        """Equal starts resolve to the later tool name"""
        builder.activity('u1', 'vscode', 0, 10).activity('u1', 'terminal', 0, 10)

        sessions = build_sessions(builder.log())

        assert _spans(sessions, builder.at) == [('vscode', 0, 10)]

    def test_tool_class_resolved(self, builder):
        """Sessions carry the catalog class; unknown tools are non_coding"""
        builder.activity('u1', 'vscode', 0, 10).activity('u1', 'slack', 20, 30)

        sessions = build_sessions(builder.log())

        assert [s.tool_class for s in sessions] == [ToolClass.IDE, ToolClass.NON_CODING]

    def test_unknown_tool_logged(self, builder, caplog):
        """Uncatalogued tools produce a warning"""
        builder.activity('u1', 'slack', 0, 10)

        with caplog.at_level(logging.WARNING, logger='app.utils.sessionizer'):
            build_sessions(builder.log())

        assert "tool 'slack' missing from catalog" in caplog.text


@pytest.mark.sessions
class TestNoiseRemoval:
    """Gap merging per tool and workspace"""

    def test_short_gap_merged(self, builder):
        """Gaps up to merge_gap always merge"""
        builder.activity('u1', 'vscode', 0, 10).activity('u1', 'vscode', 10.25, 20)

        assert _spans(build_sessions(builder.log()), builder.at) == [('vscode', 0, 20)]

    def test_idle_gap_merged_when_nothing_else_happened(self, builder):
        """A four-minute pause with no other activity is bridged"""
        builder.activity('u1', 'vscode', 0, 10).activity('u1', 'vscode', 14, 20)

        assert _spans(build_sessions(builder.log()), builder.at) == [('vscode', 0, 20)]

    def test_idle_gap_split_by_other_activity(self, builder):
        """The same pause with a browser visit inside stays split"""
        builder.activity('u1', 'vscode', 0, 10).activity('u1', 'browser', 11, 12)
        builder.activity('u1', 'vscode', 14, 20)

        assert _spans(build_sessions(builder.log()), builder.at) == [
            ('vscode', 0, 10), ('browser', 11, 12), ('vscode', 14, 20)
        ]

    def test_long_pause_splits(self, builder):
        """Pauses beyond idle_threshold always split"""
        builder.activity('u1', 'vscode', 0, 10).activity('u1', 'vscode', 16, 20)

        assert len(build_sessions(builder.log())) == 2

    def test_pause_of_idle_threshold_splits(self, builder):
        """A pause exactly as long as idle_threshold counts as idle"""
        builder.activity('u1', 'vscode', 0, 10).activity('u1', 'vscode', 15, 20)

        assert _spans(build_sessions(builder.log()), builder.at) == [('vscode', 0, 10), ('vscode', 15, 20)]

    def test_custom_thresholds(self, builder):
        """A longer idle threshold bridges the six-minute pause"""
        builder.activity('u1', 'vscode', 0, 10).activity('u1', 'vscode', 16, 20)

        sessions = build_sessions(builder.log(), SessionConfig(merge_gap=30_000, idle_threshold=600_000))

        assert _spans(sessions, builder.at) == [('vscode', 0, 20)]

    def test_workspaces_never_merge(self, builder):
        """Adjacent intervals in different workspaces stay apart"""
        builder.activity('u1', 'vscode', 0, 10, workspace='a').activity('u1', 'vscode', 10.1, 20, workspace='b')

        sessions = build_sessions(builder.log())

        assert [s.workspace for s in sessions] == ['a', 'b']

    def test_threshold_order_enforced(self):
        """merge_gap must stay below idle_threshold"""
        with pytest.raises(ValueError):
            SessionConfig(merge_gap=300_000, idle_threshold=300_000)
        with pytest.raises(ValueError):
            SessionConfig(merge_gap=0)


@pytest.mark.sessions
class TestSessionSet:
    """Shape of the result"""

    def test_empty_log(self):
        """No activity, no sessions"""
        assert len(build_sessions(EventLog())) == 0

    def test_ordered_by_user_then_start(self, builder):
        """Users are grouped and each is in time order"""
        builder.activity('u2', 'vscode', 0, 10).activity('u1', 'vscode', 30, 40)
        builder.activity('u1', 'vscode', 0, 10)

        sessions = build_sessions(builder.log())

        assert [(s.user, s.start) for s in sessions] == [
            ('u1', builder.at(0)), ('u1', builder.at(30)), ('u2', builder.at(0))
        ]
        assert sessions.users == ['u1', 'u2']

    def test_coding_time(self, day_log):
        """Coding time counts ide and coding_related sessions only"""
        sessions = build_sessions(day_log)

        # 64 min of ide plus 5 min of terminal; the browser visit is excluded
        assert sessions.coding_time('u1') == 69 * 60_000

    def test_sessions_back_to_activities(self, builder):
        """Sessions convert back into activity intervals"""
        builder.activity('u1', 'vscode', 0, 10)

        activities = sessions_to_activities(build_sessions(builder.log()))

        assert activities == (ActivityEvent('u1', 'vscode', 'default', builder.at(0), builder.at(10)),)

    def test_random_activity_never_overlaps(self):
        """Per user, sessions are disjoint and cover every raw instant"""
        rng = np.random.default_rng(3)
        catalog = ToolCatalog({'a': ToolClass.IDE, 'b': ToolClass.CODING_RELATED, 'c': ToolClass.NON_CODING})
        activities = []
        for user in ('u1', 'u2'):
            for _ in range(200):
                start = int(rng.integers(0, 20_000_000))
                activities.append(ActivityEvent(
                    user, str(rng.choice(['a', 'b', 'c'])), 'default', start, start + int(rng.integers(1_000, 900_000))
                ))
        log = EventLog(activities=tuple(sorted(activities, key=lambda a: a.start)), catalog=catalog)

        sessions = build_sessions(log)

        for user in ('u1', 'u2'):
            mine = sessions.for_user(user)
            for left, right in zip(mine, mine[1:]):
                assert left.end <= right.start
            for activity in (a for a in activities if a.user == user):
                covered = sum(
                    min(s.end, activity.end) - max(s.start, activity.start)
                    for s in mine if s.start < activity.end and s.end > activity.start
                )
                assert covered == activity.duration


def _random_log(seed, users=('u1', 'u2'), n=60, horizon=3_600_000):
    rng = np.random.default_rng(seed)
    catalog = ToolCatalog({'a': ToolClass.IDE, 'b': ToolClass.CODING_RELATED, 'c': ToolClass.NON_CODING})
    activities = []
    for user in users:
        for _ in range(n):
            start = int(rng.integers(0, horizon))
            activities.append(ActivityEvent(
                user, str(rng.choice(['a', 'b', 'c'])), str(rng.choice(['w1', 'w2'])),
                start, start + int(rng.integers(1_000, 240_000))
            ))
    return EventLog(activities=tuple(sorted(activities, key=lambda a: a.start)), catalog=catalog)


@pytest.mark.sessions
class TestMergeGapStability:
    """Session counts and shapes under changing thresholds"""

    MERGE_GAPS = (1_000, 30_000, 120_000, 299_000)

    def test_interleaved_workspaces(self):
        """A longer merge gap never produces more sessions"""
        catalog = ToolCatalog({'a': ToolClass.IDE, 'b': ToolClass.CODING_RELATED, 'c': ToolClass.NON_CODING})
        spans = [('a', 'w2', 316, 441), ('a', 'w1', 58, 224), ('c', 'w1', 481, 529), ('c', 'w1', 950, 962),
                 ('b', 'w2', 805, 835), ('b', 'w2', 1032, 1191), ('a', 'w2', 846, 857), ('b', 'w2', 684, 724)]
        log = EventLog(
            activities=tuple(sorted(
                (ActivityEvent('u1', tool, ws, start * 1000, end * 1000) for tool, ws, start, end in spans),
                key=lambda a: a.start
            )),
            catalog=catalog
        )

        counts = [len(build_sessions(log, SessionConfig(merge_gap=gap, idle_threshold=300_000)))
                  for gap in self.MERGE_GAPS]

        assert counts == sorted(counts, reverse=True)

    def test_busy_short_gap_stretches_neighbours(self, builder):
        """A brief interruption is absorbed by the pieces around it"""
        builder.activity('u1', 'vscode', 0, 10).activity('u1', 'browser', 10.125, 10.25)
        builder.activity('u1', 'vscode', 10.375, 20)

        sessions = build_sessions(builder.log())

        assert _spans(sessions, builder.at) == [
            ('vscode', 0, 10.125), ('browser', 10.125, 10.25), ('vscode', 10.25, 20)
        ]

    @pytest.mark.parametrize('seed', range(8))
    def test_random_logs_monotone_in_merge_gap(self, seed):
        """Counts are non-increasing as the merge gap grows"""
        log = _random_log(seed)

        counts = [len(build_sessions(log, SessionConfig(merge_gap=gap, idle_threshold=300_000)))
                  for gap in self.MERGE_GAPS]

        assert all(left >= right for left, right in zip(counts, counts[1:]))

    @pytest.mark.parametrize('seed', range(8))
    def test_random_logs_idempotent(self, seed):
        """Sessionizing sessions again changes nothing"""
        log = _random_log(seed)
        sessions = build_sessions(log)

        again = build_sessions(EventLog(activities=sessions_to_activities(sessions), catalog=log.catalog))

        assert again == sessions
