"""
CSV and JSON emitters

Every file carries the fully resolved run config and a provenance block, so the file
itself can be passed back as --config to reproduce the run. Nothing time- or
machine-dependent is written, which keeps reruns byte-identical.
"""
import csv
import io
import json
import logging
import os
from typing import Any, Dict, List, Optional, Sequence

import config
from errors import ConfigError

logger = logging.getLogger(__name__)

CONFIG_PREFIX = '# config='
PROVENANCE_PREFIX = '# provenance='
SUMMARY_PREFIX = '# summary='


def _format_value(value: Any) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return config.CSV_FLOAT_FORMAT.format(value)
    return str(value)


def _compact(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(',', ':'), ensure_ascii=False)


def provenance(command: str, run_config: Dict[str, Any]) -> Dict[str, Any]:
    """Seed and version information for an output file"""
    mc = run_config.get('mc', {})
    return {
        'command': command,
        'version': config.VERSION,
        'seed': mc.get('seed'),
        'n_samples': mc.get('n_samples'),
        'block_size': config.MC_BLOCK_SIZE,
    }


def render_csv(columns: Sequence[str], rows: Sequence[Sequence[Any]],
               run_config: Dict[str, Any], command: str,
               summary: Optional[Dict[str, Any]] = None) -> str:
    """Header comments (config, provenance, optional summary), header row, then data"""
    buffer = io.StringIO()
    buffer.write(f"{CONFIG_PREFIX}{_compact(run_config)}\n")
    buffer.write(f"{PROVENANCE_PREFIX}{_compact(provenance(command, run_config))}\n")
    if summary:
        buffer.write(f"{SUMMARY_PREFIX}{_compact(summary)}\n")
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_format_value(v) for v in row])
    return buffer.getvalue()


def render_json(columns: Sequence[str], rows: Sequence[Sequence[Any]],
                run_config: Dict[str, Any], command: str,
                summary: Optional[Dict[str, Any]] = None) -> str:
    """Single object with "config", "data" and "provenance" keys"""
    data: Dict[str, Any] = {'rows': [dict(zip(columns, row)) for row in rows]}
    if summary:
        data['summary'] = summary
    document = {
        'config': run_config,
        'data': data,
        'provenance': provenance(command, run_config),
    }
    return json.dumps(document, indent=2, sort_keys=True, ensure_ascii=False) + '\n'


def write_output(columns: Sequence[str], rows: Sequence[Sequence[Any]],
                 run_config: Dict[str, Any], command: str,
                 path: Optional[str] = None, fmt: str = 'csv',
                 summary: Optional[Dict[str, Any]] = None) -> str:
    """
    Render a table and write it to `path` (stdout when None)

    Returns:
        The rendered text
    """
    if fmt == 'csv':
        text = render_csv(columns, rows, run_config, command, summary)
    elif fmt == 'json':
        text = render_json(columns, rows, run_config, command, summary)
    else:
        raise ConfigError(f"unknown output format {fmt!r} (use csv or json)")

    if path is None:
        print(text, end='')
        return text
    try:
        directory = os.path.dirname(os.path.abspath(path))
        os.makedirs(directory, exist_ok=True)
        with open(path, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
    except OSError as e:
        raise ConfigError(f"cannot write output {path}: {e}") from e
    logger.info(f"✅ Wrote {len(rows)} rows to {path}")
    return text


def load_embedded_config(path: str) -> Dict[str, Any]:
    """
    Read a run config from a config file or a previous output file

    Accepts a plain JSON config, a JSON output (its "config" key) or a CSV output
    (its leading "# config=" line).

    Raises:
        ConfigError: unreadable file or no config found
    """
    try:
        with open(path, 'r', encoding='utf-8') as f:
            text = f.read()
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e

    try:
        if text.startswith(CONFIG_PREFIX):
            first_line = text.split('\n', 1)[0]
            return json.loads(first_line[len(CONFIG_PREFIX):])
        document = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON in {path}: {e}") from e

    if not isinstance(document, dict):
        raise ConfigError(f"config in {path} must be a JSON object")
    if 'config' in document and 'provenance' in document:
        return document['config']
    return document


def read_csv_rows(text: str) -> List[Dict[str, str]]:
    """Data rows of a rendered CSV, comment lines skipped"""
    lines = [line for line in text.split('\n') if line and not line.startswith('#')]
    return list(csv.DictReader(lines))
