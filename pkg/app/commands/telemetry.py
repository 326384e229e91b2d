import sys

import click
from flask import Blueprint, current_app

from ..utils.baseline_metrics import coverage
from ..utils.dat_pipeline import check_dat_invariants, compute_dat
from ..utils.reports import dump_json, load_dat_results
from ..utils.sessionizer import build_sessions
from ..utils.telemetry import validate_event_log
from .common import anchor_options, handle_dat_errors, pipeline_configs, pipeline_manifest, read_log, session_options

telemetry = Blueprint('telemetry', __name__, cli_group='telemetry')


@telemetry.cli.command('validate')
@click.argument('log', type=click.Path(exists=True, dir_okay=False))
@click.option('--results', type=click.Path(exists=True, dir_okay=False), default=None,
              help='Check a DAT results file instead of recomputing')
@session_options
@anchor_options
@handle_dat_errors
def validate(log, results, **kwargs):
    """Check a log and its DAT against every structural invariant."""
    scfg, acfg = pipeline_configs(kwargs)
    inputs = [log] + ([results] if results else [])
    manifest = pipeline_manifest('telemetry validate', inputs, scfg, acfg)

    event_log = read_log(log, strict=False)
    log_report = validate_event_log(event_log)
    document = {'manifest': manifest.to_dict(), 'log': log_report.to_dict()}

    if log_report.ok:
        if results:
            sessions = build_sessions(event_log, scfg)
            dats = load_dat_results(results)
            attribution = None
        else:
            run = compute_dat(event_log, scfg, acfg)
            sessions, dats, attribution = run.sessions, run.dats, run.attribution
        dat_report = check_dat_invariants(event_log, sessions, dats, attribution)
        document['dat'] = dat_report.to_dict()
        document['coverage'] = coverage(dats, event_log.diffs) if event_log.diffs else None
        failed = dat_report.rules()
    else:
        failed = log_report.rules()

    click.echo(dump_json(document))
    if failed:
        current_app.logger.info(f"validation failed: {', '.join(failed)}")
        click.echo(f"invariant violated: {', '.join(failed)}", err=True)
        sys.exit(2)
