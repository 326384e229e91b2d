"""
Three-row timelines of one user's day: raw sessions, precise attribution and
anchor attribution. Text for terminals, SVG for files.
"""
import logging
import string
import xml.etree.ElementTree as ET
from datetime import datetime, timezone

from ..models import DatRun, IntervalSource, ToolClass
from .errors import UnknownDiffError

logger = logging.getLogger(__name__)

CLASS_MARKS = {
    ToolClass.IDE: 'I',
    ToolClass.CODING_RELATED: 'c',
    ToolClass.REVIEW: 'r',
    ToolClass.NON_CODING: '.'
}
CLASS_COLORS = {
    ToolClass.IDE: '#4c72b0',
    ToolClass.CODING_RELATED: '#55a868',
    ToolClass.REVIEW: '#8172b2',
    ToolClass.NON_CODING: '#cccccc'
}
DIFF_COLORS = ('#dd8452', '#c44e52', '#937860', '#da8bc3', '#8c8c8c', '#ccb974', '#64b5cd')
ROWS = ('raw', 'precise', 'anchor')


def _fmt(ts):
    return datetime.fromtimestamp(ts / 1000, tz=timezone.utc).strftime('%Y-%m-%dT%H:%M:%SZ')


class TimelineView:
    """The intervals and window one rendering shows"""

    def __init__(self, run: DatRun, diff_id=None, user=None, start=None, end=None):
        if diff_id is not None:
            dat = run.dat(diff_id)
            if dat is None:
                raise UnknownDiffError(f'unknown diff {diff_id}')
            user = dat.author
            focus = dat.authoring_intervals() or dat.contributing_intervals
            spans = [(i.start, i.end) for i in focus if i.user == user]
        else:
            spans = []
        if user is None:
            raise ValueError('a diff or a user is required')

        self.user = user
        self.sessions = [s for s in run.sessions.for_user(user)]
        if not spans:
            spans = [(s.start, s.end) for s in self.sessions]

        self.start = start if start is not None else min((s for s, _ in spans), default=0)
        self.end = end if end is not None else max((e for _, e in spans), default=0)

        self.precise, self.anchor = [], []
        for dat in run.dats:
            for interval in dat.contributing_intervals:
                if interval.user != user:
                    continue
                if interval.source == IntervalSource.ANCHOR:
                    self.anchor.append((interval.start, interval.end, dat.diff_id))
                elif interval.source == IntervalSource.COMMIT:
                    self.precise.append((interval.start, interval.end, dat.diff_id))

        shown = sorted({d for s, e, d in self.precise + self.anchor if s < self.end and e > self.start})
        letters = string.ascii_uppercase
        self.letters = {d: letters[i] if i < len(letters) else '#' for i, d in enumerate(shown)}

    @property
    def empty(self):
        return self.end <= self.start

    def visible(self, intervals):
        return [iv for iv in intervals if iv[0] < self.end and iv[1] > self.start]


def _column_marks(view, width, intervals, mark):
    cells = [' '] * width
    if view.empty:
        return cells
    step = (view.end - view.start) / width
    for col in range(width):
        mid = view.start + (col + 0.5) * step
        for interval in intervals:
            if interval[0] <= mid < interval[1]:
                cells[col] = mark(interval)
                break
    return cells


def render_text(view: TimelineView, width: int = 96) -> str:
    raw = [(s.start, s.end, s.tool_class) for s in view.sessions]
    rows = {
        'raw': _column_marks(view, width, raw, lambda iv: CLASS_MARKS[iv[2]]),
        'precise': _column_marks(view, width, view.precise, lambda iv: view.letters.get(iv[2], '#')),
        'anchor': _column_marks(view, width, view.anchor, lambda iv: view.letters.get(iv[2], '#').lower())
    }

    header = f'timeline {view.user} {_fmt(view.start)} .. {_fmt(view.end)}'
    lines = [header]
    for name in ROWS:
        lines.append(f"{name:<8}|{''.join(rows[name])}|")

    axis = ['-'] * width
    for col in range(0, width, max(1, width // 8)):
        axis[col] = '+'
    lines.append(f"{'':<8}+{''.join(axis)}+")
    start_label, end_label = _fmt(view.start)[11:16], _fmt(view.end)[11:16]
    lines.append(f"{'':<8}{start_label}{end_label:>{width + 2 - len(start_label)}}")

    legend = ' '.join(f'{letter}={diff_id}' for diff_id, letter in view.letters.items())
    lines.append(f'legend: {legend or "(no diffs)"}; I ide, c coding_related, r review, . non_coding')
    return '\n'.join(lines) + '\n'


def render_svg(view: TimelineView, width: int = 96) -> str:
    """SVG with one band per row; coordinates are fixed to two decimals"""
    scale = 8
    left, top, band = 80, 30, 24
    plot_width = width * scale
    svg = ET.Element('svg', {
        'xmlns': 'http://www.w3.org/2000/svg',
        'width': str(left + plot_width + 20),
        'height': str(top + band * len(ROWS) + 40)
    })
    title = ET.SubElement(svg, 'text', {'x': '4', 'y': '16', 'font-family': 'monospace', 'font-size': '12'})
    title.text = f'timeline {view.user} {_fmt(view.start)} .. {_fmt(view.end)}'

    def x_of(ts):
        return left + (ts - view.start) / (view.end - view.start) * plot_width

    def add_rect(row, begin, finish, color, label):
        begin, finish = max(begin, view.start), min(finish, view.end)
        rect = ET.SubElement(svg, 'rect', {
            'x': f'{x_of(begin):.2f}',
            'y': f'{top + row * band + 2:.2f}',
            'width': f'{x_of(finish) - x_of(begin):.2f}',
            'height': f'{band - 4:.2f}',
            'fill': color
        })
        ET.SubElement(rect, 'title').text = label

    for row, name in enumerate(ROWS):
        text = ET.SubElement(svg, 'text', {
            'x': '4', 'y': str(top + row * band + band // 2 + 4), 'font-family': 'monospace', 'font-size': '12'
        })
        text.text = name

    if not view.empty:
        for session in view.visible([(s.start, s.end, s) for s in view.sessions]):
            s = session[2]
            add_rect(0, s.start, s.end, CLASS_COLORS[s.tool_class], f'{s.tool} ({s.tool_class.value})')
        for row, intervals in ((1, view.precise), (2, view.anchor)):
            for begin, finish, diff_id in view.visible(intervals):
                index = sorted(view.letters).index(diff_id) if diff_id in view.letters else 0
                color = DIFF_COLORS[index % len(DIFF_COLORS)]
                add_rect(row, begin, finish, color, diff_id if row == 1 else f'{diff_id} anchor')

    axis_y = top + band * len(ROWS) + 4
    ET.SubElement(svg, 'line', {
        'x1': str(left), 'y1': str(axis_y), 'x2': str(left + plot_width), 'y2': str(axis_y), 'stroke': '#000000'
    })
    for anchor, ts, x in (('start', view.start, left), ('end', view.end, left + plot_width)):
        label = ET.SubElement(svg, 'text', {
            'x': str(x), 'y': str(axis_y + 16), 'text-anchor': anchor, 'font-family': 'monospace', 'font-size': '10'
        })
        label.text = _fmt(ts)[11:16]

    return ET.tostring(svg, encoding='unicode') + '\n'
