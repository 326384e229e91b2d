"""
Synthetic developer telemetry with per-diff ground truth.

Every developer works through a queue of diffs in ide sessions separated by
offline gaps, commits whenever work on a diff stops, and may spend untracked
terminal time right before the first ide session of a diff. Ground truth
labels every interval that served a diff.
"""
import json
import logging
import os
from collections import deque
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from ..models import (
    AccuracyReport, ActivityEvent, DiffDat, DiffMeta, EventLog, ExperimentGroup, ExperimentSample,
    GroundTruth, GroundTruthDiff, LabeledInterval, ReviewEvent, SimConfig, ToolCatalog, ToolClass,
    VcsEvent, VcsOp
)
from .baseline_metrics import dat_value
from .errors import SimulationConfigError
from .telemetry import DEFAULT_WORKSPACE

logger = logging.getLogger(__name__)

DAY_MS = 86_400_000
MIN_SESSION_MS = 1_000

IDE_TOOL = 'vscode'
TERMINAL_TOOL = 'terminal'
NOISE_TOOL = 'browser'
REVIEW_TOOL = 'phabricator'
CATALOG = ToolCatalog({
    IDE_TOOL: ToolClass.IDE,
    TERMINAL_TOOL: ToolClass.CODING_RELATED,
    NOISE_TOOL: ToolClass.NON_CODING,
    REVIEW_TOOL: ToolClass.REVIEW
})

MIGRATED_FILES = tuple(f'mocks/migrated_{i:02d}.py' for i in range(20))
UNMIGRATED_FILES = tuple(f'mocks/legacy_{i:02d}.py' for i in range(20))
ORDINARY_FILES = tuple(f'src/module_{i:03d}.py' for i in range(200))
PLATFORM_APPS = (
    ('android', 'app1'), ('ios', 'app1'), ('web', 'app1'),
    ('android', 'app2'), ('ios', 'app2'), ('web', 'app2')
)


def validate_sim_config(cfg: SimConfig):
    for name in ('interleave_prob', 'noise_prob', 'review_prob', 'effect_fraction',
                 'mixed_fraction', 'shared_fraction'):
        value = getattr(cfg, name)
        if not 0 <= value <= 1:
            raise SimulationConfigError(f'{name} must lie in [0, 1], got {value}')
    if not 0 <= cfg.untracked_tool_fraction < 1:
        raise SimulationConfigError('untracked_tool_fraction must lie in [0, 1)')
    if cfg.n_developers < 1 or cfg.n_diffs_per_dev < 1 or cfg.sessions_per_diff < 1:
        raise SimulationConfigError('developer, diff and session counts must be positive')
    if cfg.session_sigma < 0:
        raise SimulationConfigError('session_sigma cannot be negative')
    if cfg.offline_gap_min <= 0 or cfg.offline_gap_mean < cfg.offline_gap_min:
        raise SimulationConfigError('offline gaps need 0 < offline_gap_min <= offline_gap_mean')
    if cfg.effect_factor <= 0 or cfg.loc_per_minute <= 0:
        raise SimulationConfigError('effect_factor and loc_per_minute must be positive')
    if not 1 <= cfg.workday_hours <= 24:
        raise SimulationConfigError('workday_hours must lie in [1, 24]')
    if cfg.interleave_prob > 0 and (cfg.max_in_flight < 2 or cfg.n_diffs_per_dev < 2):
        raise SimulationConfigError('interleaving needs at least two diffs in flight')


class _PlannedDiff:

    def __init__(self, diff_id, author, lengths, untracked, group):
        self.diff_id = diff_id
        self.author = author
        self.lengths = lengths
        self.untracked = untracked
        self.group = group
        self.done = 0
        self.commits = []
        self.intervals = []

    @property
    def finished(self):
        return self.done == len(self.lengths)

    @property
    def true_minutes(self):
        return (sum(self.lengths) + self.untracked) / 60_000


class _Timeline:
    """Clock of one developer, confined to working hours"""

    def __init__(self, cfg):
        self.cfg = cfg
        self.day = 0
        self.clock = cfg.start_ts
        self.fresh_day = True

    @property
    def day_start(self):
        return self.cfg.start_ts + self.day * DAY_MS

    @property
    def day_end(self):
        return self.day_start + self.cfg.workday_hours * 3_600_000

    def reserve(self, duration):
        """Start time of a block of the given length; rolls to the next workday when it does not fit"""
        if self.clock + duration > self.day_end:
            self.day = max(self.day + 1, (self.clock - self.cfg.start_ts) // DAY_MS + 1)
            self.clock = self.day_start
            self.fresh_day = True
        start = self.clock
        self.clock += duration
        return start

    def fits(self, duration):
        return self.clock + duration <= self.day_end


class _Developer:

    def __init__(self, user, cfg, rng):
        self.user = user
        self.cfg = cfg
        self.rng = rng
        self.timeline = _Timeline(cfg)
        self.activities = []
        self.vcs_events = []
        self.reviews = []
        self.started = False

    def _activity(self, tool, start, end):
        self.activities.append(ActivityEvent(self.user, tool, DEFAULT_WORKSPACE, start, end))

    def _vcs(self, op, commit_id, ts, auto=False):
        self.vcs_events.append(VcsEvent(self.user, DEFAULT_WORKSPACE, op, commit_id, ts, auto))

    def pause(self):
        """Offline gap, sometimes filled with non-coding noise"""
        if not self.started:
            return
        cfg = self.cfg
        gap = cfg.offline_gap_min + int(self.rng.exponential(cfg.offline_gap_mean - cfg.offline_gap_min))
        noisy = self.rng.random() < cfg.noise_prob
        if noisy and self.timeline.fits(gap):
            start = self.timeline.clock + gap // 4
            self._activity(NOISE_TOOL, start, start + gap // 2)
        self.timeline.clock += gap

    def block(self, duration, checkout=None):
        start = self.timeline.reserve(duration)
        if self.timeline.fresh_day:
            self._vcs(VcsOp.CHECKOUT, 'main', start, auto=True)
            self.timeline.fresh_day = False
        if checkout:
            self._vcs(VcsOp.CHECKOUT, checkout, start)
        self.started = True
        return start

    def work(self, diff, checkout=None):
        length = diff.lengths[diff.done]
        lead = diff.untracked if diff.done == 0 else 0
        start = self.block(lead + length, checkout)
        if lead:
            self._activity(TERMINAL_TOOL, start, start + lead)
            diff.intervals.append(LabeledInterval(self.user, TERMINAL_TOOL, start, start + lead, diff.diff_id))
            start += lead
        self._activity(IDE_TOOL, start, start + length)
        diff.intervals.append(LabeledInterval(self.user, IDE_TOOL, start, start + length, diff.diff_id))
        diff.done += 1
        return start + length

    def commit(self, diff, ts):
        commit_id = f'{diff.diff_id}-c{len(diff.commits) + 1}'
        diff.commits.append((commit_id, ts))
        self._vcs(VcsOp.COMMIT, commit_id, ts)

    def review(self, diff_id):
        cfg = self.cfg
        length = max(MIN_SESSION_MS, int(self.rng.lognormal(cfg.session_mu - 0.7, cfg.session_sigma)))
        self.pause()
        start = self.block(length)
        self._activity(REVIEW_TOOL, start, start + length)
        self.reviews.append(ReviewEvent(self.user, diff_id, start, start + length))


def _plan_diff(diff_id, author, cfg, rng):
    if rng.random() < cfg.effect_fraction:
        group, factor = ExperimentGroup.TEST, cfg.effect_factor
    elif rng.random() < cfg.mixed_fraction:
        group, factor = ExperimentGroup.MIXED, 1.0
    else:
        group, factor = ExperimentGroup.CONTROL, 1.0

    cap = cfg.workday_hours * 3_600_000 // 2
    raw = rng.lognormal(cfg.session_mu, cfg.session_sigma, cfg.sessions_per_diff)
    lengths = [int(min(cap, max(MIN_SESSION_MS, value * factor))) for value in raw]
    f = cfg.untracked_tool_fraction
    untracked = int(round(sum(lengths) * f / (1 - f))) if f > 0 else 0
    return _PlannedDiff(diff_id, author, lengths, untracked, group)


def _diff_meta(planned, cfg, rng):
    loc = max(1, int(round(planned.true_minutes * cfg.loc_per_minute * rng.lognormal(0, 0.3))))
    n_files = 1 + int(rng.poisson(loc / 120))

    if planned.group == ExperimentGroup.TEST:
        relevant = [UNMIGRATED_FILES[rng.integers(len(UNMIGRATED_FILES))]]
    elif planned.group == ExperimentGroup.MIXED:
        relevant = [MIGRATED_FILES[rng.integers(len(MIGRATED_FILES))],
                    UNMIGRATED_FILES[rng.integers(len(UNMIGRATED_FILES))]]
    else:
        relevant = [MIGRATED_FILES[rng.integers(len(MIGRATED_FILES))]]
    extra = min(len(ORDINARY_FILES), max(0, n_files - len(relevant)))
    ordinary = [ORDINARY_FILES[i] for i in rng.choice(len(ORDINARY_FILES), size=extra, replace=False)]
    files = tuple(sorted(relevant + ordinary))

    if rng.random() < cfg.shared_fraction:
        picks = rng.choice(len(PLATFORM_APPS), size=int(rng.integers(2, 5)), replace=False)
    else:
        picks = [rng.integers(len(PLATFORM_APPS))]
    platform_apps = tuple(PLATFORM_APPS[i] for i in sorted(int(p) for p in picks))

    last_commit = planned.commits[-1][1]
    return DiffMeta(
        diff_id=planned.diff_id,
        author=planned.author,
        commit_ids=tuple(c for c, _ in planned.commits),
        files_changed=len(files),
        loc=loc,
        shared=len(platform_apps) > 1,
        platform_apps=platform_apps,
        landed_ts=last_commit + int(rng.exponential(cfg.landing_delay_mean)),
        files=files
    )


def generate_workload(cfg: SimConfig = None) -> Tuple[EventLog, GroundTruth]:
    """
    Simulate cfg.n_developers developers working through their diffs.

    Args:
        cfg: simulation parameters; the seed fixes every random draw

    Returns:
        (EventLog, GroundTruth); the same config always yields the same pair

    Raises:
        SimulationConfigError: parameters out of range or interleaving with
            fewer than two diffs in flight
    """
    cfg = cfg or SimConfig()
    validate_sim_config(cfg)
    rng = np.random.default_rng(cfg.seed)

    activities, vcs_events, reviews, metas = [], [], [], []
    truth: Dict[str, GroundTruthDiff] = {}
    reviewable: List[str] = []
    capacity = cfg.max_in_flight if cfg.interleave_prob > 0 else 1

    for dev in range(cfg.n_developers):
        user = f'dev{dev + 1:02d}'
        developer = _Developer(user, cfg, rng)
        pending = deque(
            _plan_diff(f'D{dev + 1:02d}{k + 1:03d}', user, cfg, rng) for k in range(cfg.n_diffs_per_dev)
        )
        in_flight = []
        current, checkout = None, None
        finished = []

        while pending or in_flight:
            while len(in_flight) < capacity and pending:
                in_flight.append(pending.popleft())
            if current is None:
                current = in_flight[0]

            developer.pause()
            end = developer.work(current, checkout)
            checkout = None

            if current.finished:
                developer.commit(current, end)
                in_flight.remove(current)
                finished.append(current)
                if reviewable and rng.random() < cfg.review_prob:
                    developer.review(reviewable[rng.integers(len(reviewable))])
                current = None
            elif len(in_flight) > 1 and rng.random() < cfg.interleave_prob:
                developer.commit(current, end)
                others = [d for d in in_flight if d is not current]
                current = others[rng.integers(len(others))]
                checkout = current.commits[-1][0] if current.commits else 'main'

        for planned in finished:
            metas.append(_diff_meta(planned, cfg, rng))
            truth[planned.diff_id] = GroundTruthDiff(
                planned.diff_id, user, tuple(planned.intervals), planned.group
            )
        reviewable.extend(p.diff_id for p in finished)
        activities.extend(developer.activities)
        vcs_events.extend(developer.vcs_events)
        reviews.extend(developer.reviews)

    log = EventLog(
        activities=tuple(sorted(activities, key=lambda a: a.start)),
        vcs_events=tuple(sorted(vcs_events, key=lambda e: e.ts)),
        reviews=tuple(sorted(reviews, key=lambda r: r.start)),
        diffs=tuple(sorted(metas, key=lambda d: d.landed_ts)),
        catalog=CATALOG
    )
    logger.info(f"simulated {len(metas)} diffs, {len(activities)} activity intervals (seed {cfg.seed})")
    return log, GroundTruth(dict(sorted(truth.items())))


def score_accuracy(dats: Iterable[DiffDat], gt: GroundTruth, band: float = 0.05,
                   metric: str = 'anchor', worst: int = 5) -> AccuracyReport:
    """
    Relative error of computed DAT against ground truth per diff.

    A diff exactly on the band edge counts as inside. Diffs with zero true
    duration are counted apart and not scored.
    """
    by_id = {d.diff_id: d for d in dats}
    scored, zero_truth = [], 0
    for diff_id, true_duration in sorted(gt.durations().items()):
        if true_duration <= 0:
            zero_truth += 1
            continue
        dat = by_id.get(diff_id)
        if dat is None:
            logger.warning(f"ground-truth diff {diff_id} has no DAT result, scored as zero")
        computed = dat_value(dat, metric) if dat else 0
        scored.append((diff_id, computed, true_duration, abs(computed - true_duration) / true_duration))

    if not scored:
        return AccuracyReport(0, zero_truth, None, None, band)
    errors = np.array([s[3] for s in scored])
    offenders = sorted(scored, key=lambda s: (-s[3], s[0]))[:worst]
    return AccuracyReport(
        n_scored=len(scored),
        n_zero_truth=zero_truth,
        mean_relative_error=float(errors.mean()),
        within_band=float(np.mean(errors <= band + 1e-9)),
        band=band,
        worst=tuple(offenders)
    )


def sample_experiment_population(cfg: SimConfig, n_per_group: int,
                                 stratum_effects: Optional[Dict[int, float]] = None,
                                 large_diff_fraction: float = 0.0,
                                 large_diff_scale: float = 5.0) -> List[ExperimentSample]:
    """
    Per-diff DAT samples for a control and a test group, without telemetry.

    A diff's DAT is the sum of cfg.sessions_per_diff lognormal session
    lengths. Test diffs of 1-4 files are scaled by their stratum effect
    (cfg.effect_factor when none is given). Large diffs touch 5-20 files, cost
    large_diff_scale times more and carry no effect.
    """
    validate_sim_config(cfg)
    if n_per_group < 1 or not 0 <= large_diff_fraction <= 1 or large_diff_scale <= 0:
        raise SimulationConfigError('invalid experiment population parameters')
    rng = np.random.default_rng(cfg.seed)
    effects = stratum_effects or {}

    samples = []
    for group in (ExperimentGroup.CONTROL, ExperimentGroup.TEST):
        for k in range(n_per_group):
            large = rng.random() < large_diff_fraction
            files = int(rng.integers(5, 21)) if large else int(rng.integers(1, 5))
            dat = float(rng.lognormal(cfg.session_mu, cfg.session_sigma, cfg.sessions_per_diff).sum())
            if large:
                dat *= large_diff_scale
            elif group == ExperimentGroup.TEST:
                dat *= effects.get(files, cfg.effect_factor)
            samples.append(ExperimentSample(f'{group.value[0].upper()}{k + 1:05d}', group, files, dat))
    return samples


def ground_truth_lines(gt: GroundTruth) -> List[str]:
    return [json.dumps(d.to_dict(), sort_keys=True, separators=(',', ':')) for d in gt.diffs.values()]


def load_ground_truth(path) -> GroundTruth:
    diffs = {}
    with open(path, 'r', encoding='utf-8') as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            if record.get('kind') == 'manifest':
                continue
            diff = GroundTruthDiff.from_dict(record)
            diffs[diff.diff_id] = diff
    return GroundTruth(dict(sorted(diffs.items())))


def write_file_lists(output_dir):
    """migrated.txt and relevant.txt for the experiment commands"""
    with open(os.path.join(output_dir, 'migrated.txt'), 'w', encoding='utf-8') as f:
        f.write('\n'.join(MIGRATED_FILES) + '\n')
    with open(os.path.join(output_dir, 'relevant.txt'), 'w', encoding='utf-8') as f:
        f.write('\n'.join(MIGRATED_FILES + UNMIGRATED_FILES) + '\n')
