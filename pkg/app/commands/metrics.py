import os

import click
import pandas as pd
from flask import Blueprint, current_app

from ..utils.baseline_metrics import METRICS, aggregate_report, compare_estimates, compute_cgt, compute_tsd
from ..utils.dat_pipeline import compute_dat
from ..utils.reports import dump_json, load_estimates, write_csv
from .common import (
    anchor_options, handle_dat_errors, pipeline_configs, pipeline_manifest, read_log, session_options
)

metrics = Blueprint('metrics', __name__, cli_group='metrics')


def _default_window(event_log):
    stamps = [a.start for a in event_log.activities] + [a.end for a in event_log.activities]
    stamps += [d.landed_ts for d in event_log.diffs if d.landed_ts is not None]
    if not stamps:
        return 0, 1
    return min(stamps), max(stamps) + 1


@metrics.cli.command('aggregate')
@click.argument('log', type=click.Path(exists=True, dir_okay=False))
@click.option('--window-start', type=int, default=None, help='TSD window start (epoch ms)')
@click.option('--window-end', type=int, default=None, help='TSD window end, exclusive (epoch ms)')
@click.option('--period', default=None, help='Trendline bucket, a pandas period alias (D, W, M)')
@click.option('--winsorize-p', type=float, default=None, help='Winsorization quantile')
@click.option('--metric', type=click.Choice(METRICS), default='anchor')
@click.option('--output-dir', type=click.Path(file_okay=False), default=None,
              help='Also write tsd.csv, cgt.csv and trendline.csv here')
@session_options
@anchor_options
@handle_dat_errors
def aggregate(log, window_start, window_end, period, winsorize_p, metric, output_dir, **kwargs):
    """Winsorized mean, coverage, trendline, TSD and CGT."""
    scfg, acfg = pipeline_configs(kwargs)
    period = period or current_app.config['DAT_TREND_PERIOD']
    try:
        pd.Period('2024-01-01', freq=period)
    except ValueError:
        raise click.BadParameter(f'not a pandas period alias: {period}', param_hint='--period')
    p = current_app.config['DAT_WINSORIZE_P'] if winsorize_p is None else winsorize_p

    event_log = read_log(log)
    default_start, default_end = _default_window(event_log)
    window = (default_start if window_start is None else window_start,
              default_end if window_end is None else window_end)
    manifest = pipeline_manifest('metrics aggregate', [log], scfg, acfg, {
        'winsorize_p': p, 'period': period, 'metric': metric,
        'window_start': window[0], 'window_end': window[1]
    })

    run = compute_dat(event_log, scfg, acfg)
    report = aggregate_report(run.dats, event_log.diffs, p=p, period=period, metric=metric)
    tsd = compute_tsd(run.sessions, event_log.diffs, window)
    cgt, notes = compute_cgt(run.dats, event_log.diffs)

    if output_dir:
        os.makedirs(output_dir, exist_ok=True)
        write_csv(os.path.join(output_dir, 'tsd.csv'), manifest, [r.to_dict() for r in tsd],
                  ['user', 'window_start', 'window_end', 'total_coding_time_ms', 'diffs_published', 'tsd_ms'])
        write_csv(os.path.join(output_dir, 'cgt.csv'), manifest, [r.to_dict() for r in cgt],
                  ['diff', 'coding_start', 'landed', 'cgt_ms'])
        write_csv(os.path.join(output_dir, 'trendline.csv'), manifest, [t.to_dict() for t in report.trendline],
                  ['bucket', 'count', 'winsorized_mean_ms'])

    click.echo(dump_json({
        'manifest': manifest.to_dict(),
        'aggregate': report.to_dict(),
        'tsd': [r.to_dict() for r in tsd],
        'cgt': [r.to_dict() for r in cgt],
        'cgt_notes': notes
    }))


@metrics.cli.command('estimates')
@click.argument('log', type=click.Path(exists=True, dir_okay=False))
@click.argument('estimates', type=click.Path(exists=True, dir_okay=False))
@session_options
@anchor_options
@handle_dat_errors
def estimates(log, estimates, **kwargs):
    """Compare self-reported per-diff estimates with Anchor-DAT."""
    scfg, acfg = pipeline_configs(kwargs)
    manifest = pipeline_manifest('metrics estimates', [log, estimates], scfg, acfg)
    run = compute_dat(read_log(log), scfg, acfg)
    report = compare_estimates(run.dats, load_estimates(estimates))
    click.echo(dump_json({'manifest': manifest.to_dict(), 'estimates': report.to_dict()}))
