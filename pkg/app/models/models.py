from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Tuple
import enum


class ToolClass(enum.Enum):
    IDE = "ide"
    CODING_RELATED = "coding_related"
    REVIEW = "review"
    NON_CODING = "non_coding"

    @property
    def is_coding(self):
        return self in (ToolClass.IDE, ToolClass.CODING_RELATED)


class VcsOp(enum.Enum):
    COMMIT = "commit"
    AMEND = "amend"
    CHECKOUT = "checkout"

    @property
    def creates_commit(self):
        return self in (VcsOp.COMMIT, VcsOp.AMEND)


class IntervalSource(enum.Enum):
    COMMIT = "commit"
    REVIEW = "review"
    ANCHOR = "anchor"


class ExperimentGroup(enum.Enum):
    CONTROL = "control"
    TEST = "test"
    MIXED = "mixed"


# Raw telemetry

@dataclass(frozen=True)
class ActivityEvent:
    user: str
    tool: str
    workspace: str
    start: int
    end: int

    @property
    def duration(self):
        return self.end - self.start

    def to_dict(self):
        return {
            'kind': 'activity',
            'user': self.user,
            'tool': self.tool,
            'workspace': self.workspace,
            'start': self.start,
            'end': self.end
        }


@dataclass(frozen=True)
class VcsEvent:
    user: str
    workspace: str
    op: VcsOp
    commit_id: str
    ts: int
    auto: bool = False

    def to_dict(self):
        return {
            'kind': 'vcs',
            'user': self.user,
            'workspace': self.workspace,
            'op': self.op.value,
            'commit': self.commit_id,
            'ts': self.ts,
            'auto': self.auto
        }


@dataclass(frozen=True)
class ReviewEvent:
    user: str
    diff_id: str
    start: int
    end: int

    @property
    def duration(self):
        return self.end - self.start

    def to_dict(self):
        return {
            'kind': 'review',
            'user': self.user,
            'diff': self.diff_id,
            'start': self.start,
            'end': self.end
        }


@dataclass(frozen=True)
class DiffMeta:
    diff_id: str
    author: str
    commit_ids: Tuple[str, ...]
    files_changed: int = 0
    loc: int = 0
    shared: bool = False
    platform_apps: Tuple[Tuple[str, str], ...] = ()
    landed_ts: Optional[int] = None
    # Touched paths, only needed for experiment group assignment
    files: Tuple[str, ...] = ()

    def to_dict(self):
        data = {
            'kind': 'diff',
            'diff': self.diff_id,
            'author': self.author,
            'commits': list(self.commit_ids),
            'files_changed': self.files_changed,
            'loc': self.loc,
            'shared': self.shared,
            'platform_apps': [list(pa) for pa in self.platform_apps],
            'landed_ts': self.landed_ts
        }
        if self.files:
            data['files'] = list(self.files)
        return data


@dataclass(frozen=True)
class ToolCatalog:
    classes: Mapping[str, ToolClass] = field(default_factory=dict)

    def class_of(self, tool):
        """Class of a tool, or None when the catalog does not know it"""
        return self.classes.get(tool)

    def resolve(self, tool):
        return self.classes.get(tool, ToolClass.NON_CODING)

    def __contains__(self, tool):
        return tool in self.classes

    def to_records(self):
        return [
            {'kind': 'tool', 'tool': tool, 'class': cls.value}
            for tool, cls in sorted(self.classes.items())
        ]


@dataclass(frozen=True)
class EventLog:
    activities: Tuple[ActivityEvent, ...] = ()
    vcs_events: Tuple[VcsEvent, ...] = ()
    reviews: Tuple[ReviewEvent, ...] = ()
    diffs: Tuple[DiffMeta, ...] = ()
    catalog: ToolCatalog = field(default_factory=ToolCatalog)

    @property
    def users(self):
        users = {a.user for a in self.activities}
        users.update(e.user for e in self.vcs_events)
        users.update(r.user for r in self.reviews)
        users.update(d.author for d in self.diffs)
        return sorted(users)

    def diff(self, diff_id):
        for meta in self.diffs:
            if meta.diff_id == diff_id:
                return meta
        return None


@dataclass(frozen=True)
class Violation:
    rule: str
    message: str
    ref: Optional[str] = None

    def to_dict(self):
        return {
            'rule': self.rule,
            'message': self.message,
            'ref': self.ref
        }


@dataclass(frozen=True)
class ValidationReport:
    violations: Tuple[Violation, ...] = ()

    @property
    def ok(self):
        return not self.violations

    def rules(self):
        return sorted({v.rule for v in self.violations})

    def to_dict(self):
        return {
            'ok': self.ok,
            'violation_count': len(self.violations),
            'violations': [v.to_dict() for v in self.violations]
        }


# Sessions and attribution

@dataclass(frozen=True)
class SessionConfig:
    merge_gap: int = 30_000
    idle_threshold: int = 300_000

    def __post_init__(self):
        if self.merge_gap <= 0 or self.idle_threshold <= 0:
            raise ValueError('merge_gap and idle_threshold must be positive')
        if self.merge_gap >= self.idle_threshold:
            raise ValueError('merge_gap must be smaller than idle_threshold')

    def to_dict(self):
        return {
            'merge_gap_ms': self.merge_gap,
            'idle_threshold_ms': self.idle_threshold
        }


@dataclass(frozen=True)
class Session:
    user: str
    tool: str
    workspace: str
    start: int
    end: int
    tool_class: ToolClass = ToolClass.NON_CODING

    @property
    def duration(self):
        return self.end - self.start

    def to_dict(self):
        return {
            'kind': 'session',
            'user': self.user,
            'tool': self.tool,
            'workspace': self.workspace,
            'class': self.tool_class.value,
            'start': self.start,
            'end': self.end
        }


@dataclass(frozen=True)
class SessionSet:
    """Sessions ordered by (user, start); per user they never overlap"""

    sessions: Tuple[Session, ...] = ()

    def __iter__(self):
        return iter(self.sessions)

    def __len__(self):
        return len(self.sessions)

    @property
    def users(self):
        return sorted({s.user for s in self.sessions})

    def for_user(self, user):
        return tuple(s for s in self.sessions if s.user == user)

    def of_class(self, *classes):
        return tuple(s for s in self.sessions if s.tool_class in classes)

    def coding_time(self, user):
        return sum(s.duration for s in self.sessions
                   if s.user == user and s.tool_class.is_coding)


@dataclass(frozen=True)
class AnchorConfig:
    max_gap: int = 1_800_000
    max_total: int = 7_200_000

    def __post_init__(self):
        if self.max_gap <= 0:
            raise ValueError('max_gap must be positive')
        if self.max_total < 0:
            raise ValueError('max_total cannot be negative')

    def to_dict(self):
        return {
            'max_gap_ms': self.max_gap,
            'max_total_ms': self.max_total
        }


@dataclass(frozen=True)
class CommitAttribution:
    by_commit: Mapping[str, Tuple[Session, ...]] = field(default_factory=dict)
    # ide time after the last commit-creation event of its workspace
    unattributed: Tuple[Session, ...] = ()
    # amend commit id -> id of the creation event it amends
    amends: Mapping[str, str] = field(default_factory=dict)

    def sessions_for(self, commit_id):
        return self.by_commit.get(commit_id, ())

    def attributed_time(self, user):
        return sum(s.duration for pieces in self.by_commit.values()
                   for s in pieces if s.user == user)

    def unattributed_time(self, user):
        return sum(s.duration for s in self.unattributed if s.user == user)


@dataclass(frozen=True)
class ContributingInterval:
    user: str
    tool: str
    workspace: str
    start: int
    end: int
    source: IntervalSource
    ref: str

    @property
    def duration(self):
        return self.end - self.start

    def to_dict(self):
        return {
            'user': self.user,
            'tool': self.tool,
            'workspace': self.workspace,
            'start': self.start,
            'end': self.end,
            'source': self.source.value,
            'ref': self.ref
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            user=data['user'],
            tool=data['tool'],
            workspace=data['workspace'],
            start=int(data['start']),
            end=int(data['end']),
            source=IntervalSource(data['source']),
            ref=data['ref']
        )


@dataclass(frozen=True)
class DiffDat:
    diff_id: str
    author: str
    author_precise: int = 0
    reviewer_precise: Mapping[str, int] = field(default_factory=dict)
    coauthor_precise: Mapping[str, int] = field(default_factory=dict)
    contributing_intervals: Tuple[ContributingInterval, ...] = ()
    anchor_extra: int = 0

    @property
    def anchor_dat(self):
        return self.author_precise + self.anchor_extra

    def intervals_of(self, *sources):
        return tuple(i for i in self.contributing_intervals if i.source in sources)

    def authoring_intervals(self):
        """Author time: precise commit pieces by the author plus anchors"""
        return tuple(
            i for i in self.contributing_intervals
            if i.user == self.author and i.source in (IntervalSource.COMMIT, IntervalSource.ANCHOR)
        )

    def to_dict(self):
        return {
            'kind': 'diff_dat',
            'diff': self.diff_id,
            'author': self.author,
            'author_precise_ms': self.author_precise,
            'anchor_extra_ms': self.anchor_extra,
            'anchor_dat_ms': self.anchor_dat,
            'reviewer_precise_ms': dict(sorted(self.reviewer_precise.items())),
            'coauthor_precise_ms': dict(sorted(self.coauthor_precise.items())),
            'intervals': [i.to_dict() for i in self.contributing_intervals]
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            diff_id=data['diff'],
            author=data['author'],
            author_precise=int(data.get('author_precise_ms', 0)),
            reviewer_precise={k: int(v) for k, v in data.get('reviewer_precise_ms', {}).items()},
            coauthor_precise={k: int(v) for k, v in data.get('coauthor_precise_ms', {}).items()},
            contributing_intervals=tuple(
                ContributingInterval.from_dict(i) for i in data.get('intervals', [])
            ),
            anchor_extra=int(data.get('anchor_extra_ms', 0))
        )


@dataclass(frozen=True)
class DatRun:
    sessions: SessionSet
    attribution: CommitAttribution
    dats: Tuple[DiffDat, ...] = ()

    def dat(self, diff_id):
        for dat in self.dats:
            if dat.diff_id == diff_id:
                return dat
        return None


# Baseline metrics

@dataclass(frozen=True)
class TsdRecord:
    user: str
    window_start: int
    window_end: int
    total_coding_time: int
    diffs_published: int
    tsd: Optional[float] = None

    def to_dict(self):
        return {
            'user': self.user,
            'window_start': self.window_start,
            'window_end': self.window_end,
            'total_coding_time_ms': self.total_coding_time,
            'diffs_published': self.diffs_published,
            'tsd_ms': self.tsd
        }


@dataclass(frozen=True)
class CgtRecord:
    diff_id: str
    coding_start: int
    landed: int

    @property
    def cgt(self):
        return self.landed - self.coding_start

    def to_dict(self):
        return {
            'diff': self.diff_id,
            'coding_start': self.coding_start,
            'landed': self.landed,
            'cgt_ms': self.cgt
        }


@dataclass(frozen=True)
class TrendPoint:
    bucket: str
    count: int
    winsorized_mean: Optional[float] = None

    def to_dict(self):
        return {
            'bucket': self.bucket,
            'count': self.count,
            'winsorized_mean_ms': self.winsorized_mean
        }


@dataclass(frozen=True)
class AggregateReport:
    winsorized_mean: Optional[float]
    percentile: float
    coverage: float
    n_diffs: int
    trendline: Tuple[TrendPoint, ...] = ()

    def to_dict(self):
        return {
            'winsorized_mean_ms': self.winsorized_mean,
            'percentile': self.percentile,
            'coverage': self.coverage,
            'n_diffs': self.n_diffs,
            'trendline': [p.to_dict() for p in self.trendline]
        }


@dataclass(frozen=True)
class EstimateRecord:
    diff_id: str
    dat: int
    estimate: int

    @property
    def difference(self):
        return self.estimate - self.dat

    @property
    def ratio(self):
        return self.estimate / self.dat if self.dat > 0 else None

    def to_dict(self):
        return {
            'diff': self.diff_id,
            'dat_ms': self.dat,
            'estimate_ms': self.estimate,
            'difference_ms': self.difference,
            'ratio': self.ratio
        }


@dataclass(frozen=True)
class EstimateReport:
    records: Tuple[EstimateRecord, ...]
    mean_difference: Optional[float]
    # mean (estimate - dat) per DAT-duration tercile, shortest first
    tercile_drift: Tuple[Optional[float], ...] = ()
    missing: Tuple[str, ...] = ()

    def to_dict(self):
        return {
            'n': len(self.records),
            'mean_difference_ms': self.mean_difference,
            'tercile_drift_ms': list(self.tercile_drift),
            'missing': list(self.missing),
            'records': [r.to_dict() for r in self.records]
        }


# Experiment statistics

@dataclass(frozen=True)
class GroupAssignment:
    diff_id: str
    group: ExperimentGroup

    def to_dict(self):
        return {'diff': self.diff_id, 'group': self.group.value}


@dataclass(frozen=True)
class ExperimentSample:
    diff_id: str
    group: ExperimentGroup
    files_changed: int
    dat: float


@dataclass(frozen=True)
class WelchResult:
    stratum: str
    n_control: int
    n_test: int
    mean_control: Optional[float] = None
    mean_test: Optional[float] = None
    pct_saved: Optional[float] = None
    t: Optional[float] = None
    df: Optional[float] = None
    p: Optional[float] = None

    @property
    def defined(self):
        return self.p is not None

    @property
    def size_ratio(self):
        return self.n_control / self.n_test if self.n_test else None

    def to_dict(self):
        return {
            'stratum': self.stratum,
            'n_control': self.n_control,
            'n_test': self.n_test,
            'size_ratio': self.size_ratio,
            'mean_control_ms': self.mean_control,
            'mean_test_ms': self.mean_test,
            'pct_saved': self.pct_saved,
            't': self.t,
            'df': self.df,
            'p': self.p
        }


@dataclass(frozen=True)
class DistributionShift:
    wasserstein: float
    pct_delta: float
    n_a: int
    n_b: int

    def to_dict(self):
        return {
            'wasserstein_ms': self.wasserstein,
            'pct_delta_dat': self.pct_delta,
            'n_a': self.n_a,
            'n_b': self.n_b
        }


@dataclass(frozen=True)
class BaselineTable:
    thresholds: Tuple[float, float]
    cells: Mapping[Tuple[str, str, int], float] = field(default_factory=dict)
    counts: Mapping[Tuple[str, str, int], int] = field(default_factory=dict)
    trim: float = 0.10

    def tercile_of(self, loc):
        # Ties go to the lower tercile
        low, high = self.thresholds
        if loc <= low:
            return 1
        if loc <= high:
            return 2
        return 3

    def to_dict(self):
        return {
            'thresholds': list(self.thresholds),
            'trim': self.trim,
            'cells': [
                {'platform': p, 'app': a, 'tercile': t,
                 'trimmed_mean_ms': value, 'n': self.counts.get((p, a, t), 0)}
                for (p, a, t), value in sorted(self.cells.items())
            ]
        }


@dataclass(frozen=True)
class SavingsRecord:
    diff_id: str
    tercile: int
    counterfactual: float
    actual: float

    @property
    def saved(self):
        return self.counterfactual - self.actual

    def to_dict(self):
        return {
            'diff': self.diff_id,
            'tercile': self.tercile,
            'counterfactual_ms': self.counterfactual,
            'actual_ms': self.actual,
            'saved_ms': self.saved
        }


@dataclass(frozen=True)
class SavingsReport:
    records: Tuple[SavingsRecord, ...]
    total_counterfactual: float
    total_saved: float

    @property
    def relative_improvement(self):
        if self.total_counterfactual <= 0:
            return None
        return self.total_saved / self.total_counterfactual

    def to_dict(self):
        return {
            'total_counterfactual_ms': self.total_counterfactual,
            'total_saved_ms': self.total_saved,
            'relative_improvement': self.relative_improvement,
            'records': [r.to_dict() for r in self.records]
        }


@dataclass(frozen=True)
class NetBenefit:
    """DAT saved by a feature against the DAT it took to build"""

    saved: float
    development_cost: float

    @property
    def net(self):
        return self.saved - self.development_cost

    @property
    def return_ratio(self):
        if self.development_cost <= 0:
            return None
        return self.saved / self.development_cost

    def to_dict(self):
        return {
            'saved_ms': self.saved,
            'development_cost_ms': self.development_cost,
            'net_ms': self.net,
            'return_ratio': self.return_ratio
        }


# Simulation

@dataclass(frozen=True)
class SimConfig:
    seed: int = 42
    n_developers: int = 5
    n_diffs_per_dev: int = 10
    sessions_per_diff: int = 8
    # lognormal session length in ms; exp(13.305) is roughly 10 minutes
    session_mu: float = 13.305
    session_sigma: float = 0.5
    interleave_prob: float = 0.0
    max_in_flight: int = 2
    untracked_tool_fraction: float = 0.1
    # offline gaps stay above the default idle threshold
    offline_gap_min: int = 360_000
    offline_gap_mean: int = 600_000
    noise_prob: float = 0.3
    review_prob: float = 0.5
    landing_delay_mean: int = 3_600_000
    effect_factor: float = 1.0
    effect_fraction: float = 0.0
    mixed_fraction: float = 0.0
    shared_fraction: float = 0.0
    loc_per_minute: float = 2.0
    start_ts: int = 1_704_099_600_000
    workday_hours: int = 8

    def to_dict(self):
        return {
            'seed': self.seed,
            'n_developers': self.n_developers,
            'n_diffs_per_dev': self.n_diffs_per_dev,
            'sessions_per_diff': self.sessions_per_diff,
            'session_mu': self.session_mu,
            'session_sigma': self.session_sigma,
            'interleave_prob': self.interleave_prob,
            'max_in_flight': self.max_in_flight,
            'untracked_tool_fraction': self.untracked_tool_fraction,
            'offline_gap_min_ms': self.offline_gap_min,
            'offline_gap_mean_ms': self.offline_gap_mean,
            'noise_prob': self.noise_prob,
            'review_prob': self.review_prob,
            'landing_delay_mean_ms': self.landing_delay_mean,
            'effect_factor': self.effect_factor,
            'effect_fraction': self.effect_fraction,
            'mixed_fraction': self.mixed_fraction,
            'shared_fraction': self.shared_fraction,
            'loc_per_minute': self.loc_per_minute,
            'start_ts': self.start_ts,
            'workday_hours': self.workday_hours
        }


@dataclass(frozen=True)
class LabeledInterval:
    user: str
    tool: str
    start: int
    end: int
    diff_id: str

    @property
    def duration(self):
        return self.end - self.start

    def to_dict(self):
        return {
            'user': self.user,
            'tool': self.tool,
            'start': self.start,
            'end': self.end
        }


@dataclass(frozen=True)
class GroundTruthDiff:
    diff_id: str
    author: str
    intervals: Tuple[LabeledInterval, ...] = ()
    group: Optional[ExperimentGroup] = None

    @property
    def true_duration(self):
        return sum(i.duration for i in self.intervals)

    def to_dict(self):
        return {
            'diff_id': self.diff_id,
            'author': self.author,
            'true_duration_ms': self.true_duration,
            'group': self.group.value if self.group else None,
            'intervals': [i.to_dict() for i in self.intervals]
        }

    @classmethod
    def from_dict(cls, data):
        diff_id = data['diff_id']
        return cls(
            diff_id=diff_id,
            author=data.get('author', ''),
            intervals=tuple(
                LabeledInterval(i['user'], i['tool'], int(i['start']), int(i['end']), diff_id)
                for i in data.get('intervals', [])
            ),
            group=ExperimentGroup(data['group']) if data.get('group') else None
        )


@dataclass(frozen=True)
class GroundTruth:
    diffs: Mapping[str, GroundTruthDiff] = field(default_factory=dict)

    def durations(self):
        return {diff_id: gt.true_duration for diff_id, gt in self.diffs.items()}


@dataclass(frozen=True)
class AccuracyReport:
    n_scored: int
    n_zero_truth: int
    mean_relative_error: Optional[float]
    within_band: Optional[float]
    band: float
    worst: Tuple[Tuple[str, int, int, float], ...] = ()

    def to_dict(self):
        return {
            'n_scored': self.n_scored,
            'n_zero_truth': self.n_zero_truth,
            'mean_relative_error': self.mean_relative_error,
            'within_band': self.within_band,
            'band': self.band,
            'worst': [
                {'diff': d, 'computed_ms': c, 'truth_ms': t, 'relative_error': e}
                for d, c, t, e in self.worst
            ]
        }


@dataclass(frozen=True)
class RunManifest:
    command: str
    inputs: Tuple[str, ...]
    config: Dict[str, object]
    version: str
    seed: Optional[int] = None

    def to_dict(self):
        return {
            'kind': 'manifest',
            'command': self.command,
            'inputs': list(self.inputs),
            'config': dict(sorted(self.config.items())),
            'version': self.version,
            'seed': self.seed
        }
