"""
Report emission for PrimeLab
Stable JSON and flat CSV rendering with fixed 17-digit floats
"""

import csv
import dataclasses
import io
import json
import logging
import math
import pathlib
import re
import sys

import numpy as np

from .config import FLOAT_DIGITS

logger = logging.getLogger('PrimeLab.Report')

_FLOAT_TAG = '@@float:'
_FLOAT_PATTERN = re.compile(r'"' + re.escape(_FLOAT_TAG) + r'([^"]*)"')

# Factor-set fields repeated in the CSV preamble when a result carries them inline
FACTOR_SET_KEYS = ('complete', 'coverage', 'method', 'prime_bound', 'scan_bound', 'spec')


def render_float(value):
    """17 significant digits; always carries a '.' or exponent so it stays a float"""
    value = float(value)
    if not math.isfinite(value):
        return None
    text = format(value, f'.{FLOAT_DIGITS}g')
    if not any(ch in text for ch in '.e'):
        text += '.0'
    return text


def plain(obj):
    """Dataclasses, tuples and numpy scalars as JSON-ready builtins"""
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [plain(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj)
    return obj


def _tag_floats(obj):
    if isinstance(obj, dict):
        return {k: _tag_floats(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_tag_floats(v) for v in obj]
    if isinstance(obj, float):
        text = render_float(obj)
        return None if text is None else _FLOAT_TAG + text
    return obj


def to_json_text(obj):
    """Sorted keys, two-space indent, floats in fixed 17-digit form"""
    text = json.dumps(_tag_floats(plain(obj)), indent=2, sort_keys=True, ensure_ascii=False)
    return _FLOAT_PATTERN.sub(r'\1', text) + '\n'


def _csv_cell(value):
    if isinstance(value, (bool, np.bool_)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        text = render_float(value)
        return '' if text is None else text
    if value is None:
        return ''
    return value


def to_csv_text(rows):
    """First row is the header; cells are quoted only when they hold a comma"""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    for row in rows:
        writer.writerow([_csv_cell(v) for v in row])
    return buffer.getvalue()


def flatten(obj, prefix=''):
    """Nested report object as (key, value) pairs with dotted keys"""
    pairs = []
    if isinstance(obj, dict):
        for key in sorted(obj):
            pairs.extend(flatten(obj[key], f"{prefix}.{key}" if prefix else str(key)))
    elif isinstance(obj, list):
        if all(not isinstance(v, (dict, list)) for v in obj):
            pairs.append((prefix, ' '.join(str(_csv_cell(v)) for v in obj)))
        else:
            for i, v in enumerate(obj):
                pairs.extend(flatten(v, f"{prefix}.{i}"))
    else:
        pairs.append((prefix, obj))
    return pairs


def csv_preamble(payload):
    """'# key=value' lines carrying everything in a report except its series

    That is the command, the resolved config and the log base, plus the
    summary of the factor set the result was computed from.
    """
    meta = {k: v for k, v in payload.items() if k != 'result'}
    result = payload.get('result') or {}
    if isinstance(result.get('factor_set'), dict):
        meta['factor_set'] = result['factor_set']
    elif 'complete' in result:
        meta['factor_set'] = {k: result[k] for k in FACTOR_SET_KEYS if k in result}
    return [f"# {key}={_csv_cell(value)}" for key, value in flatten(plain(meta))]


def render(payload, fmt, csv_rows=None):
    """JSON text of `payload`, or CSV of `csv_rows` (key,value pairs if absent)

    Series CSV starts with the csv_preamble comment lines, so every report
    names the config it was produced with.
    """
    if fmt == 'json':
        return to_json_text(payload)
    if csv_rows is None:
        return to_csv_text([('key', 'value')] + flatten(plain(payload)))
    return ''.join(line + '\n' for line in csv_preamble(payload)) + to_csv_text(csv_rows)


def write_report(text, out=None):
    """Write to `out`, or to stdout when no path is given"""
    if out is None or str(out) == '-':
        sys.stdout.write(text)
        sys.stdout.flush()
        return None
    path = pathlib.Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    logger.info(f"Report written to {path}")
    return path
