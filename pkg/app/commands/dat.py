import os

import click
from flask import Blueprint, current_app

from ..utils.dat_pipeline import compute_dat
from ..utils.reports import (
    DAT_COLUMNS, MANIFEST_PREFIX, csv_text, dat_row, dump_json, jsonl_lines, write_csv, write_jsonl
)
from ..utils.sessionizer import build_sessions
from ..utils.timeline import TimelineView, render_svg, render_text
from .common import (
    anchor_options, handle_dat_errors, pipeline_configs, pipeline_manifest, read_log, session_options
)

dat = Blueprint('dat', __name__, cli_group='dat')


@dat.cli.command('compute')
@click.argument('log', type=click.Path(exists=True, dir_okay=False))
@click.option('--output-dir', type=click.Path(file_okay=False), default=None,
              help='Write dat.jsonl and dat.csv here instead of printing')
@click.option('--format', 'fmt', type=click.Choice(['jsonl', 'csv']), default='jsonl',
              help='Format printed when no output directory is given')
@session_options
@anchor_options
@handle_dat_errors
def compute(log, output_dir, fmt, **kwargs):
    """Compute precise and Anchor-DAT per diff."""
    scfg, acfg = pipeline_configs(kwargs)
    manifest = pipeline_manifest('dat compute', [log], scfg, acfg)
    run = compute_dat(read_log(log), scfg, acfg)

    records = [d.to_dict() for d in run.dats]
    rows = [dat_row(d) for d in run.dats]
    if output_dir:
        os.makedirs(output_dir, exist_ok=True)
        write_jsonl(os.path.join(output_dir, 'dat.jsonl'), manifest, records)
        write_csv(os.path.join(output_dir, 'dat.csv'), manifest, rows, DAT_COLUMNS)
        current_app.logger.info(f"{len(records)} diffs written to {output_dir}")
    elif fmt == 'csv':
        click.echo(csv_text(manifest, rows, DAT_COLUMNS), nl=False)
    else:
        for line in jsonl_lines(manifest, records):
            click.echo(line)


@dat.cli.command('sessions')
@click.argument('log', type=click.Path(exists=True, dir_okay=False))
@session_options
@handle_dat_errors
def sessions(log, **kwargs):
    """Dump the sessionized activity as JSONL."""
    scfg, acfg = pipeline_configs(kwargs)
    manifest = pipeline_manifest('dat sessions', [log], scfg, acfg)
    session_set = build_sessions(read_log(log), scfg)
    for line in jsonl_lines(manifest, [s.to_dict() for s in session_set]):
        click.echo(line)


@dat.cli.command('timeline')
@click.argument('log', type=click.Path(exists=True, dir_okay=False))
@click.option('--diff', 'diff_id', default=None, help='Center the window on this diff')
@click.option('--user', default=None, help='Show this user')
@click.option('--start', type=int, default=None, help='Window start (epoch ms)')
@click.option('--end', type=int, default=None, help='Window end (epoch ms)')
@click.option('--format', 'fmt', type=click.Choice(['text', 'svg']), default='text')
@click.option('--width', type=int, default=None, help='Columns in the plot area')
@click.option('--output', type=click.Path(dir_okay=False), default=None)
@session_options
@anchor_options
@handle_dat_errors
def timeline(log, diff_id, user, start, end, fmt, width, output, **kwargs):
    """Render raw sessions, precise and anchor attribution as three rows."""
    if (diff_id is None) == (user is None):
        raise click.UsageError('give exactly one of --diff or --user')
    scfg, acfg = pipeline_configs(kwargs)
    width = width or current_app.config['DAT_TIMELINE_WIDTH']
    if width < 8:
        raise click.BadParameter('width must be at least 8', param_hint='--width')

    run = compute_dat(read_log(log), scfg, acfg)
    view = TimelineView(run, diff_id=diff_id, user=user, start=start, end=end)
    manifest = pipeline_manifest('dat timeline', [log], scfg, acfg, {'format': fmt, 'width': width})
    if fmt == 'svg':
        rendered = f'<!-- manifest {dump_json(manifest.to_dict())} -->\n' + render_svg(view, width)
    else:
        rendered = MANIFEST_PREFIX + dump_json(manifest.to_dict()) + '\n' + render_text(view, width)

    if output:
        with open(output, 'w', encoding='utf-8', newline='\n') as f:
            f.write(rendered)
    else:
        click.echo(rendered, nl=False)
