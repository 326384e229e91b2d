"""
Test configuration and fixtures for the DAT engine tests
"""
import json

import pytest

from app import create_app
from app.utils.telemetry import parse_event_log


class LogBuilder:
    """Writes telemetry records with times given in minutes after BASE"""

    BASE = 1_705_309_200_000  # 2024-01-15 09:00 UTC
    MIN = 60_000

    def __init__(self, catalog=True):
        self.records = []
        if catalog:
            self.tool('vscode', 'ide')
            self.tool('terminal', 'coding_related')
            self.tool('browser', 'non_coding')
            self.tool('phabricator', 'review')

    @classmethod
    def at(cls, minutes):
        return cls.BASE + int(round(minutes * cls.MIN))

    def tool(self, tool, tool_class):
        self.records.append({'kind': 'tool', 'tool': tool, 'class': tool_class})
        return self

    def activity(self, user, tool, start, end, workspace=None):
        record = {'kind': 'activity', 'user': user, 'tool': tool,
                  'start': self.at(start), 'end': self.at(end)}
        if workspace is not None:
            record['workspace'] = workspace
        self.records.append(record)
        return self

    def vcs(self, user, op, commit, ts, auto=False, workspace=None):
        record = {'kind': 'vcs', 'user': user, 'op': op, 'commit': commit, 'ts': self.at(ts), 'auto': auto}
        if workspace is not None:
            record['workspace'] = workspace
        self.records.append(record)
        return self

    def review(self, user, diff_id, start, end):
        self.records.append({'kind': 'review', 'user': user, 'diff': diff_id,
                             'start': self.at(start), 'end': self.at(end)})
        return self

    def diff(self, diff_id, author, commits, landed=None, **extra):
        record = {'kind': 'diff', 'diff': diff_id, 'author': author, 'commits': list(commits)}
        if landed is not None:
            record['landed_ts'] = self.at(landed)
        record.update(extra)
        self.records.append(record)
        return self

    def lines(self):
        return [json.dumps(r) for r in self.records]

    def log(self, strict=True):
        return parse_event_log(self.lines(), strict=strict)

    def write(self, path):
        path.write_text('\n'.join(self.lines()) + '\n', encoding='utf-8')
        return str(path)


def hand_traced_day(builder, terminal=False, review=True):
    """
    One morning of u1: two diffs over five ide stretches.

    D123 takes CH1 and CH2 (30 min), D987 takes CH8 (24 min) across the
    manual checkout CH7, and the last 10 min of ide work come after the final
    commit. An optional terminal stretch sits right before D987's first ide
    session; an optional review of D123 by u2 lasts 30 min.
    """
    builder.vcs('u1', 'checkout', 'CH0', 0, auto=True)
    builder.activity('u1', 'vscode', 0, 10)
    builder.vcs('u1', 'commit', 'CH1', 10)
    builder.activity('u1', 'vscode', 10, 20)
    builder.activity('u1', 'browser', 20, 30)
    builder.activity('u1', 'vscode', 30, 40)
    builder.vcs('u1', 'commit', 'CH2', 40)
    if terminal:
        builder.activity('u1', 'terminal', 44, 49)
    builder.activity('u1', 'vscode', 50, 60)
    builder.vcs('u1', 'checkout', 'CH7', 63)
    builder.activity('u1', 'vscode', 66, 80)
    builder.vcs('u1', 'commit', 'CH8', 80)
    builder.activity('u1', 'vscode', 90, 100)
    if review:
        builder.review('u2', 'D123', 120, 150)
    builder.diff('D123', 'u1', ['CH1', 'CH2'], landed=200, files_changed=2, loc=40)
    builder.diff('D987', 'u1', ['CH8'], landed=300, files_changed=1, loc=25)
    return builder


@pytest.fixture
def app():
    """Create application for the tests."""
    app = create_app({
        'TESTING': True,
        'DAT_SIM_SEED': 7,
        'DAT_TREND_PERIOD': 'D'
    })
    yield app


@pytest.fixture
def runner(app):
    """A test runner for the app's Click commands."""
    return app.test_cli_runner()


@pytest.fixture
def builder():
    """An empty log with the standard four-tool catalog."""
    return LogBuilder()


@pytest.fixture
def hand_traced():
    """Helper building the hand-traced morning with or without its extras."""
    def _hand_traced(terminal=False, review=True):
        return hand_traced_day(LogBuilder(), terminal=terminal, review=review)
    return _hand_traced


@pytest.fixture
def day_log():
    """The hand-traced morning with the terminal stretch and the review."""
    return hand_traced_day(LogBuilder(), terminal=True).log()


@pytest.fixture
def day_log_path(tmp_path):
    """The hand-traced morning written to a JSONL file."""
    return hand_traced_day(LogBuilder(), terminal=True).write(tmp_path / 'events.jsonl')


@pytest.fixture
def first_json():
    """Helper that decodes the first JSON line of command output."""
    def _first_json(output):
        for line in output.splitlines():
            if line.startswith('{'):
                return json.loads(line)
        raise AssertionError(f'no JSON in output: {output!r}')
    return _first_json
