import os

import click
from flask import Blueprint, current_app

from ..models import SimConfig
from ..utils.baseline_metrics import METRICS
from ..utils.dat_pipeline import compute_dat
from ..utils.reports import dump_json
from ..utils.telemetry import serialize_event_log
from ..utils.workload_simulator import (
    generate_workload, ground_truth_lines, load_ground_truth, score_accuracy, write_file_lists
)
from .common import (
    anchor_options, build_manifest, handle_dat_errors, pipeline_configs, pipeline_manifest, read_log,
    session_options
)

simulation = Blueprint('sim', __name__, cli_group='sim')


@simulation.cli.command('generate')
@click.argument('output_dir', type=click.Path(file_okay=False))
@click.option('--seed', type=int, default=None)
@click.option('--developers', type=int, default=SimConfig.n_developers)
@click.option('--diffs', type=int, default=SimConfig.n_diffs_per_dev, help='Diffs per developer')
@click.option('--sessions', type=int, default=SimConfig.sessions_per_diff, help='Ide sessions per diff')
@click.option('--untracked', type=float, default=SimConfig.untracked_tool_fraction,
              help='Share of each diff spent in untracked coding tools')
@click.option('--interleave', type=float, default=SimConfig.interleave_prob)
@click.option('--noise', type=float, default=SimConfig.noise_prob)
@click.option('--review', type=float, default=SimConfig.review_prob)
@click.option('--effect-factor', type=float, default=SimConfig.effect_factor)
@click.option('--effect-fraction', type=float, default=SimConfig.effect_fraction)
@click.option('--mixed-fraction', type=float, default=SimConfig.mixed_fraction)
@click.option('--shared-fraction', type=float, default=SimConfig.shared_fraction)
@handle_dat_errors
def generate(output_dir, seed, developers, diffs, sessions, untracked, interleave, noise, review,
             effect_factor, effect_fraction, mixed_fraction, shared_fraction):
    """Write events.jsonl, ground_truth.jsonl, migrated.txt and relevant.txt."""
    cfg = SimConfig(
        seed=current_app.config['DAT_SIM_SEED'] if seed is None else seed,
        n_developers=developers,
        n_diffs_per_dev=diffs,
        sessions_per_diff=sessions,
        untracked_tool_fraction=untracked,
        interleave_prob=interleave,
        noise_prob=noise,
        review_prob=review,
        effect_factor=effect_factor,
        effect_fraction=effect_fraction,
        mixed_fraction=mixed_fraction,
        shared_fraction=shared_fraction
    )
    log, gt = generate_workload(cfg)
    manifest = build_manifest('sim generate', [], cfg.to_dict(), seed=cfg.seed)

    os.makedirs(output_dir, exist_ok=True)
    header = dump_json(manifest.to_dict())
    with open(os.path.join(output_dir, 'events.jsonl'), 'w', encoding='utf-8', newline='\n') as f:
        f.write('\n'.join([header] + serialize_event_log(log)) + '\n')
    with open(os.path.join(output_dir, 'ground_truth.jsonl'), 'w', encoding='utf-8', newline='\n') as f:
        f.write('\n'.join([header] + ground_truth_lines(gt)) + '\n')
    write_file_lists(output_dir)

    current_app.logger.info(f"wrote {len(log.diffs)} diffs to {output_dir}")
    click.echo(dump_json({'manifest': manifest.to_dict(), 'diffs': len(log.diffs),
                          'activities': len(log.activities)}))


@simulation.cli.command('score')
@click.argument('log', type=click.Path(exists=True, dir_okay=False))
@click.argument('ground_truth', type=click.Path(exists=True, dir_okay=False))
@click.option('--band', type=float, default=0.05, help='Relative error counted as accurate')
@click.option('--metric', type=click.Choice(METRICS), default='anchor')
@session_options
@anchor_options
@handle_dat_errors
def score(log, ground_truth, band, metric, **kwargs):
    """Score computed DAT against simulator ground truth."""
    scfg, acfg = pipeline_configs(kwargs)
    manifest = pipeline_manifest('sim score', [log, ground_truth], scfg, acfg, {'band': band, 'metric': metric})
    run = compute_dat(read_log(log), scfg, acfg)
    report = score_accuracy(run.dats, load_ground_truth(ground_truth), band=band, metric=metric)
    click.echo(dump_json({'manifest': manifest.to_dict(), 'accuracy': report.to_dict()}))
