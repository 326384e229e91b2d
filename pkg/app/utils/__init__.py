from .telemetry import parse_event_log, load_event_log, serialize_event_log, validate_event_log
from .sessionizer import build_sessions
from .precise_matcher import filter_vcs_events, match_commits_to_sessions, assemble_diff_dat
from .anchor_heuristic import extend_with_anchors
from .dat_pipeline import compute_dat, check_dat_invariants

__all__ = [
    'parse_event_log', 'load_event_log', 'serialize_event_log', 'validate_event_log',
    'build_sessions',
    'filter_vcs_events', 'match_commits_to_sessions', 'assemble_diff_dat',
    'extend_with_anchors',
    'compute_dat', 'check_dat_invariants'
]
