"""
Result files: JSONL with a leading manifest record, CSV with a manifest
comment line, and the readers for files other commands produce.
"""
import json
import logging
import os
from typing import Dict, Iterable, List, Mapping, Sequence, Set

import pandas as pd

from ..models import DiffDat, RunManifest

logger = logging.getLogger(__name__)

MANIFEST_PREFIX = '# manifest '


def dump_json(obj) -> str:
    """Stable single-line JSON"""
    return json.dumps(obj, sort_keys=True, separators=(',', ':'))


def jsonl_lines(manifest: RunManifest, records: Iterable[Mapping]) -> List[str]:
    return [dump_json(manifest.to_dict())] + [dump_json(r) for r in records]


def write_jsonl(path, manifest: RunManifest, records: Iterable[Mapping]):
    with open(path, 'w', encoding='utf-8', newline='\n') as f:
        for line in jsonl_lines(manifest, records):
            f.write(line + '\n')
    logger.info(f"wrote {path}")


def csv_text(manifest: RunManifest, rows: Sequence[Mapping], columns: Sequence[str]) -> str:
    frame = pd.DataFrame(list(rows), columns=list(columns))
    return MANIFEST_PREFIX + dump_json(manifest.to_dict()) + '\n' + frame.to_csv(index=False, lineterminator='\n')


def write_csv(path, manifest: RunManifest, rows: Sequence[Mapping], columns: Sequence[str]):
    with open(path, 'w', encoding='utf-8', newline='') as f:
        f.write(csv_text(manifest, rows, columns))
    logger.info(f"wrote {path}")


DAT_COLUMNS = (
    'diff', 'author', 'author_precise_ms', 'anchor_extra_ms', 'anchor_dat_ms',
    'reviewer_precise_ms', 'reviewers', 'coauthor_precise_ms', 'intervals'
)


def dat_row(dat: DiffDat) -> Dict[str, object]:
    """Flat CSV row for one DiffDat; per-user splits are joined as user:ms"""
    return {
        'diff': dat.diff_id,
        'author': dat.author,
        'author_precise_ms': dat.author_precise,
        'anchor_extra_ms': dat.anchor_extra,
        'anchor_dat_ms': dat.anchor_dat,
        'reviewer_precise_ms': sum(dat.reviewer_precise.values()),
        'reviewers': ';'.join(f'{u}:{ms}' for u, ms in sorted(dat.reviewer_precise.items())),
        'coauthor_precise_ms': ';'.join(f'{u}:{ms}' for u, ms in sorted(dat.coauthor_precise.items())),
        'intervals': len(dat.contributing_intervals)
    }


def _records(path):
    with open(path, 'r', encoding='utf-8') as f:
        for line_no, line in enumerate(f, start=1):
            line = line.strip()
            if line:
                yield line_no, json.loads(line)


def load_dat_results(path) -> List[DiffDat]:
    """Read the JSONL written by `dat compute`; the manifest record is skipped"""
    return [DiffDat.from_dict(r) for _, r in _records(path) if r.get('kind') == 'diff_dat']


def load_estimates(path) -> Dict[str, int]:
    estimates = {}
    for line_no, record in _records(path):
        if record.get('kind') == 'manifest':
            continue
        if 'diff' not in record or 'estimate_ms' not in record:
            logger.warning(f"{os.path.basename(path)} line {line_no}: missing diff or estimate_ms, skipped")
            continue
        estimates[record['diff']] = int(record['estimate_ms'])
    return estimates


def load_file_list(path) -> Set[str]:
    with open(path, 'r', encoding='utf-8') as f:
        return {line.strip() for line in f if line.strip() and not line.startswith('#')}
