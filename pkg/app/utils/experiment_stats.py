"""
Statistics for DAT experiments: file-based group assignment, stratified Welch
t-tests, distribution shift, and counterfactual savings from code sharing.
"""
import logging
from collections import defaultdict
from typing import Iterable, List, Optional, Sequence, Set, Tuple

import numpy as np
from scipy import stats

from ..models import (
    BaselineTable, DiffDat, DiffMeta, DistributionShift, ExperimentGroup, ExperimentSample,
    GroupAssignment, NetBenefit, SavingsRecord, SavingsReport, WelchResult
)
from .baseline_metrics import nearest_rank
from .errors import StatisticsError, UnknownDiffError

logger = logging.getLogger(__name__)

DEFAULT_STRATA = (1, 2, 3, 4)
POOLED = 'variable'


def assign_groups(diffs: Iterable[DiffMeta], migrated_files: Set[str],
                  relevant_files: Optional[Set[str]] = None) -> List[GroupAssignment]:
    """
    Place each diff by the relevant files it touches.

    Args:
        diffs: diff metadata carrying touched files
        migrated_files: relevant files already migrated
        relevant_files: files the experiment covers; every touched file when None

    Returns:
        control (only migrated), test (only unmigrated) or mixed (both);
        diffs touching no relevant file are left out
    """
    migrated_files = set(migrated_files)
    assignments = []
    for meta in sorted(diffs, key=lambda d: d.diff_id):
        touched = set(meta.files)
        if relevant_files is not None:
            touched &= set(relevant_files)
        migrated = touched & migrated_files
        unmigrated = touched - migrated_files
        if migrated and unmigrated:
            group = ExperimentGroup.MIXED
        elif migrated:
            group = ExperimentGroup.CONTROL
        elif unmigrated:
            group = ExperimentGroup.TEST
        else:
            continue
        assignments.append(GroupAssignment(meta.diff_id, group))
    return assignments


def welch_t_test(a: Sequence[float], b: Sequence[float], stratum: str = POOLED) -> WelchResult:
    """
    Two-tailed Welch t-test of a (control) against b (test).

    Raises:
        StatisticsError: a side has fewer than two samples, or neither side varies
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if len(a) < 2 or len(b) < 2:
        raise StatisticsError(f'undersized group ({len(a)} vs {len(b)} samples)')

    var_a = a.var(ddof=1) / len(a)
    var_b = b.var(ddof=1) / len(b)
    if var_a + var_b <= 0:
        raise StatisticsError('no variance')

    t, p = stats.ttest_ind_from_stats(
        mean1=a.mean(), std1=a.std(ddof=1), nobs1=len(a),
        mean2=b.mean(), std2=b.std(ddof=1), nobs2=len(b),
        equal_var=False
    )
    df = (var_a + var_b) ** 2 / (var_a ** 2 / (len(a) - 1) + var_b ** 2 / (len(b) - 1))
    mean_a, mean_b = float(a.mean()), float(b.mean())
    return WelchResult(
        stratum=stratum,
        n_control=len(a),
        n_test=len(b),
        mean_control=mean_a,
        mean_test=mean_b,
        pct_saved=(mean_a - mean_b) / mean_a if mean_a else None,
        t=float(t),
        df=float(df),
        p=float(min(1.0, max(0.0, p)))
    )


def build_experiment_samples(dats: Iterable[DiffDat], diffs: Iterable[DiffMeta],
                             groups: Iterable[GroupAssignment]) -> List[ExperimentSample]:
    """Join Anchor-DAT, diff size and group; mixed diffs are discarded"""
    by_dat = {d.diff_id: d for d in dats}
    by_meta = {d.diff_id: d for d in diffs}
    samples = []
    for assignment in groups:
        if assignment.group == ExperimentGroup.MIXED:
            continue
        dat = by_dat.get(assignment.diff_id)
        meta = by_meta.get(assignment.diff_id)
        if dat is None or meta is None:
            logger.warning(f"no DAT for experiment diff {assignment.diff_id}, skipped")
            continue
        samples.append(ExperimentSample(
            diff_id=assignment.diff_id, group=assignment.group,
            files_changed=meta.files_changed, dat=float(dat.anchor_dat)
        ))
    return samples


def _row(stratum, control, test):
    try:
        return welch_t_test(control, test, stratum)
    except StatisticsError as e:
        logger.info(f"stratum {stratum}: {e}")
        return WelchResult(
            stratum=stratum,
            n_control=len(control),
            n_test=len(test),
            mean_control=float(np.mean(control)) if control else None,
            mean_test=float(np.mean(test)) if test else None
        )


def stratified_test(samples: Iterable[ExperimentSample], strata: Sequence[int] = DEFAULT_STRATA) -> List[WelchResult]:
    """
    One Welch row per files_changed stratum plus a pooled row over every
    size. Strata too small to test come back with statistics left empty.
    """
    samples = [s for s in samples if s.group != ExperimentGroup.MIXED]
    by_stratum = defaultdict(lambda: ([], []))
    control_all, test_all = [], []
    for sample in samples:
        side = 0 if sample.group == ExperimentGroup.CONTROL else 1
        by_stratum[sample.files_changed][side].append(sample.dat)
        (control_all if side == 0 else test_all).append(sample.dat)

    rows = [_row(str(s), *by_stratum[s]) for s in strata]
    rows.append(_row(POOLED, control_all, test_all))
    return rows


def wasserstein_1(a: Sequence[float], b: Sequence[float]) -> float:
    if len(a) == 0 or len(b) == 0:
        raise StatisticsError('empty sample')
    return float(stats.wasserstein_distance(a, b))


def pct_delta_dat(a: Sequence[float], b: Sequence[float]) -> float:
    """Relative drop in mean DAT from a (baseline) to b"""
    if len(a) == 0 or len(b) == 0:
        raise StatisticsError('empty sample')
    base = float(np.mean(a))
    if base <= 0:
        raise StatisticsError('zero baseline mean')
    return (base - float(np.mean(b))) / base


def distribution_shift(a: Sequence[float], b: Sequence[float]) -> DistributionShift:
    return DistributionShift(
        wasserstein=wasserstein_1(a, b),
        pct_delta=pct_delta_dat(a, b),
        n_a=len(a),
        n_b=len(b)
    )


def split_by_sharing(dats: Iterable[DiffDat], diffs: Iterable[DiffMeta]):
    """Pair diff metadata with Anchor-DAT, split into (unshared, shared)"""
    by_dat = {d.diff_id: d for d in dats}
    unshared, shared = [], []
    for meta in sorted(diffs, key=lambda d: d.diff_id):
        if meta.diff_id not in by_dat:
            continue
        pair = (meta, float(by_dat[meta.diff_id].anchor_dat))
        (shared if meta.shared else unshared).append(pair)
    return unshared, shared


def build_baseline_table(unshared: Iterable[Tuple[DiffMeta, float]], trim: float = 0.10) -> BaselineTable:
    """
    Trimmed-mean DAT per (platform, app, LOC tercile) over unshared diffs.

    Tercile thresholds are the 1/3 and 2/3 nearest-rank LOC quantiles of the
    unshared population; a LOC equal to a threshold falls in the lower tercile.
    """
    if not 0 <= trim < 0.5:
        raise StatisticsError(f'trim fraction {trim} outside [0, 0.5)')
    unshared = list(unshared)
    if not unshared:
        raise StatisticsError('no unshared diffs to build a baseline from')
    for meta, _ in unshared:
        if len(meta.platform_apps) != 1:
            raise StatisticsError(
                f'unshared diff {meta.diff_id} targets {len(meta.platform_apps)} platform-apps, expected 1'
            )

    locs = [meta.loc for meta, _ in unshared]
    thresholds = (nearest_rank(locs, 1 / 3), nearest_rank(locs, 2 / 3))
    table = BaselineTable(thresholds=thresholds, trim=trim)

    cells = defaultdict(list)
    for meta, dat in unshared:
        platform, app = meta.platform_apps[0]
        cells[(platform, app, table.tercile_of(meta.loc))].append(dat)

    return BaselineTable(
        thresholds=thresholds,
        cells={key: float(stats.trim_mean(values, trim)) for key, values in sorted(cells.items())},
        counts={key: len(values) for key, values in sorted(cells.items())},
        trim=trim
    )


def counterfactual_savings(shared: Iterable[Tuple[DiffMeta, float]], table: BaselineTable) -> SavingsReport:
    """
    What each shared diff would have cost written once per target, minus
    what it actually cost.

    Raises:
        StatisticsError: a target has no baseline cell at the diff's tercile
    """
    records = []
    for meta, actual in sorted(shared, key=lambda pair: pair[0].diff_id):
        tercile = table.tercile_of(meta.loc)
        counterfactual = 0.0
        for platform, app in meta.platform_apps:
            key = (platform, app, tercile)
            if key not in table.cells:
                raise StatisticsError(
                    f'no baseline for {platform}/{app} tercile {tercile} (needed by {meta.diff_id})'
                )
            counterfactual += table.cells[key]
        records.append(SavingsRecord(meta.diff_id, tercile, counterfactual, float(actual)))

    return SavingsReport(
        records=tuple(records),
        total_counterfactual=sum(r.counterfactual for r in records),
        total_saved=sum(r.saved for r in records)
    )


def net_benefit(report: SavingsReport, dats: Iterable[DiffDat], development_diffs: Iterable[str]) -> NetBenefit:
    """
    Weigh the savings of shared code against the one-time Anchor-DAT of the
    diffs that built the sharing support.

    Raises:
        UnknownDiffError: a development diff has no DAT record
    """
    by_id = {d.diff_id: d for d in dats}
    cost = 0
    for diff_id in sorted(set(development_diffs)):
        if diff_id not in by_id:
            raise UnknownDiffError(f'development diff {diff_id} not found')
        cost += by_id[diff_id].anchor_dat
    return NetBenefit(saved=report.total_saved, development_cost=float(cost))
