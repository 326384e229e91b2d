import sys

import click
from flask import Blueprint, current_app

from ..models import ExperimentGroup
from ..utils.dat_pipeline import compute_dat
from ..utils.errors import StatisticsError
from ..utils.experiment_stats import (
    DEFAULT_STRATA, assign_groups, build_baseline_table, build_experiment_samples,
    counterfactual_savings, distribution_shift, net_benefit, split_by_sharing, stratified_test
)
from ..utils.reports import csv_text, dump_json, load_file_list
from .common import (
    anchor_options, handle_dat_errors, pipeline_configs, pipeline_manifest, read_log, session_options
)

experiment = Blueprint('experiment', __name__, cli_group='experiment')

WELCH_COLUMNS = (
    'stratum', 'n_control', 'n_test', 'size_ratio', 'mean_control_ms', 'mean_test_ms',
    'pct_saved', 't', 'df', 'p'
)


@experiment.cli.command('run')
@click.argument('log', type=click.Path(exists=True, dir_okay=False))
@click.option('--migrated', type=click.Path(exists=True, dir_okay=False), required=True,
              help='Relevant files already migrated, one per line')
@click.option('--relevant', type=click.Path(exists=True, dir_okay=False), required=True,
              help='Every file the experiment covers, one per line')
@click.option('--format', 'fmt', type=click.Choice(['json', 'csv']), default='json')
@session_options
@anchor_options
@handle_dat_errors
def run_experiment(log, migrated, relevant, fmt, **kwargs):
    """Stratified Welch t-tests of Anchor-DAT, control against test."""
    scfg, acfg = pipeline_configs(kwargs)
    manifest = pipeline_manifest('experiment run', [log, migrated, relevant], scfg, acfg,
                                 {'strata': list(DEFAULT_STRATA)})
    event_log = read_log(log)
    run = compute_dat(event_log, scfg, acfg)

    groups = assign_groups(event_log.diffs, load_file_list(migrated), load_file_list(relevant))
    samples = build_experiment_samples(run.dats, event_log.diffs, groups)
    rows = stratified_test(samples)

    control = [s.dat for s in samples if s.group == ExperimentGroup.CONTROL]
    test = [s.dat for s in samples if s.group == ExperimentGroup.TEST]
    try:
        shift = distribution_shift(control, test).to_dict()
    except StatisticsError as e:
        current_app.logger.info(f"no distribution shift: {e}")
        shift = None

    if fmt == 'csv':
        click.echo(csv_text(manifest, [r.to_dict() for r in rows], WELCH_COLUMNS), nl=False)
    else:
        click.echo(dump_json({
            'manifest': manifest.to_dict(),
            'groups': {g.value: sum(1 for a in groups if a.group == g) for g in ExperimentGroup},
            'strata': [r.to_dict() for r in rows],
            'distribution_shift': shift
        }))

    if not rows[-1].defined:
        click.echo('error: pooled comparison is undefined', err=True)
        sys.exit(StatisticsError.exit_code)


@experiment.cli.command('sharing')
@click.argument('log', type=click.Path(exists=True, dir_okay=False))
@click.option('--trim', type=float, default=None, help='Fraction trimmed from each tail of a baseline cell')
@click.option('--development-diffs', type=click.Path(exists=True, dir_okay=False), default=None,
              help='Diffs that built the sharing support, one per line')
@session_options
@anchor_options
@handle_dat_errors
def sharing(log, trim, development_diffs, **kwargs):
    """Counterfactual DAT saved by code shared across platform-app targets."""
    scfg, acfg = pipeline_configs(kwargs)
    trim = current_app.config['DAT_TRIM'] if trim is None else trim
    inputs = [log] + ([development_diffs] if development_diffs else [])
    manifest = pipeline_manifest('experiment sharing', inputs, scfg, acfg, {'trim': trim})
    event_log = read_log(log)
    run = compute_dat(event_log, scfg, acfg)

    development = load_file_list(development_diffs) if development_diffs else set()
    # the one-time build cost is not part of the per-target baseline
    unshared, shared = split_by_sharing(run.dats, [d for d in event_log.diffs if d.diff_id not in development])
    table = build_baseline_table(unshared, trim)
    report = counterfactual_savings(shared, table)
    document = {
        'manifest': manifest.to_dict(),
        'baseline': table.to_dict(),
        'savings': report.to_dict()
    }
    if development_diffs:
        document['net_benefit'] = net_benefit(report, run.dats, development).to_dict()
    click.echo(dump_json(document))
