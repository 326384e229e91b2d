import sys
from functools import wraps

import click
from flask import current_app

from .. import __version__
from ..models import AnchorConfig, RunManifest, SessionConfig
from ..utils.errors import ConfigError, DatError
from ..utils.telemetry import load_event_log


def handle_dat_errors(fn):
    """
    Decorator mapping DatError subclasses to their exit codes.

    The message goes to standard error. Anything else propagates.
    """
    @wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except DatError as e:
            click.echo(f'error: {e}', err=True)
            sys.exit(e.exit_code)
    return wrapper


def session_options(fn):
    """--merge-gap and --idle-threshold, in seconds"""
    fn = click.option('--idle-threshold', type=float, default=None,
                      help='Pauses this long or longer always split sessions (seconds)')(fn)
    fn = click.option('--merge-gap', type=float, default=None,
                      help='Gaps up to this are always merged (seconds)')(fn)
    return fn


def anchor_options(fn):
    """--anchor-max-gap and --anchor-max-total, in seconds"""
    fn = click.option('--anchor-max-total', type=float, default=None,
                      help='Cap on anchor time added per diff (seconds)')(fn)
    fn = click.option('--anchor-max-gap', type=float, default=None,
                      help='Largest gap an anchor walk may cross (seconds)')(fn)
    return fn


def _ms(value, config_key):
    seconds = current_app.config[config_key] if value is None else value
    return int(round(seconds * 1000))


def session_config(merge_gap=None, idle_threshold=None):
    return SessionConfig(
        merge_gap=_ms(merge_gap, 'DAT_MERGE_GAP_SECONDS'),
        idle_threshold=_ms(idle_threshold, 'DAT_IDLE_THRESHOLD_SECONDS')
    )


def anchor_config(anchor_max_gap=None, anchor_max_total=None):
    return AnchorConfig(
        max_gap=_ms(anchor_max_gap, 'DAT_ANCHOR_MAX_GAP_SECONDS'),
        max_total=_ms(anchor_max_total, 'DAT_ANCHOR_MAX_TOTAL_SECONDS')
    )


def pipeline_configs(kwargs):
    """Pop the shared session/anchor flags out of a command's kwargs"""
    try:
        scfg = session_config(kwargs.pop('merge_gap', None), kwargs.pop('idle_threshold', None))
        acfg = anchor_config(kwargs.pop('anchor_max_gap', None), kwargs.pop('anchor_max_total', None))
    except ValueError as e:
        raise ConfigError(str(e))
    return scfg, acfg


def build_manifest(command, inputs, config=None, seed=None):
    return RunManifest(
        command=command,
        inputs=tuple(str(i) for i in inputs),
        config=dict(config or {}),
        version=__version__,
        seed=seed
    )


def pipeline_manifest(command, inputs, scfg, acfg, extra=None, seed=None):
    config = {}
    config.update(scfg.to_dict())
    config.update({f'anchor_{k}': v for k, v in acfg.to_dict().items()})
    config.update(extra or {})
    return build_manifest(command, inputs, config, seed)


def read_log(path, strict=True):
    current_app.logger.debug(f"reading event log {path}")
    return load_event_log(path, strict=strict)
