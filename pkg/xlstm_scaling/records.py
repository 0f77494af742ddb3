"""
Input files: run records, latency measurements, point lists, configs and config tables.

CSV files are read with pandas as strings and converted field by field, so
parsing does not depend on the locale and errors carry file line numbers.
"""

import json
import logging
import os

import pandas as pd

from xlstm_scaling.arch_accounting import ArchConfig
from xlstm_scaling.errors import DataError, InvalidConfigError, ScalingError
from xlstm_scaling.flop_counting import DEFAULT_FACTORS, training_compute
from xlstm_scaling.planner import ConfigTable
from xlstm_scaling.runtime_model import LatencyMeasurement
from xlstm_scaling.scaling_fit import RunRecord

logger = logging.getLogger(__name__)

DATA_DIR = os.path.join(os.path.dirname(__file__), 'data')
BUILTIN_TABLES = ('xlstm_tokenparam', 'transformer_tokenparam', 'xlstm_isoflop',
                  'transformer_isoflop')
RUN_COLUMNS = ('kind', 'N', 'D', 'T_ctx', 'loss')
LATENCY_COLUMNS = ('config_id', 'metric', 'B', 'T_p', 'seconds')


def _infer_format(path, fmt):
    if fmt is not None:
        return fmt
    return 'jsonl' if os.path.splitext(path)[1].lower() in ('.jsonl', '.ndjson') else 'csv'


def _iter_csv(path, required):
    """Yield (line number, row dict) for every data row of a CSV file."""
    try:
        frame = pd.read_csv(path, dtype=str, keep_default_na=False, skipinitialspace=True)
    except FileNotFoundError:
        raise DataError(f'no such file: {path}')
    except pd.errors.EmptyDataError:
        raise DataError('file is empty, expected a header row', line=1)
    except pd.errors.ParserError as exc:
        raise DataError(f'cannot parse {path}: {exc}')
    frame.columns = [str(c).strip() for c in frame.columns]
    missing = [c for c in required if c not in frame.columns]
    if missing:
        raise DataError(f'missing column(s) {", ".join(missing)}', line=1)
    for idx, row in enumerate(frame.to_dict('records')):
        yield idx + 2, {k: v.strip() if isinstance(v, str) else v for k, v in row.items()}


def _iter_jsonl(path):
    try:
        with open(path) as f:
            lines = f.readlines()
    except FileNotFoundError:
        raise DataError(f'no such file: {path}')
    for number, text in enumerate(lines, start=1):
        if not text.strip():
            continue
        try:
            row = json.loads(text)
        except ValueError as exc:
            raise DataError(f'invalid JSON: {exc}', line=number)
        if not isinstance(row, dict):
            raise DataError('expected a JSON object', line=number)
        yield number, row


def _number(row, name, line, cast=float, required=True):
    value = row.get(name, '')
    if value is None or (isinstance(value, str) and value == ''):
        if required:
            raise DataError(f'missing value for {name}', line=line)
        return None
    try:
        number = float(value)
    except (TypeError, ValueError):
        raise DataError(f'{name}={value!r} is not a number', line=line)
    if cast is int:
        if not number.is_integer():
            raise DataError(f'{name}={value!r} is not an integer', line=line)
        return int(number)
    return number


def _resolve_compute(row_kind, N, D, T_ctx, config_table, factors, line):
    table = config_table.get(row_kind) if isinstance(config_table, dict) else config_table
    config = table.nearest(N) if table is not None else None
    if config is None:
        raise DataError('C is missing and no architecture config resolves this run', line=line)
    if config.kind.value != row_kind:
        raise DataError(f'config {config.name} is {config.kind.value}, run is {row_kind}',
                        line=line)
    return training_compute(config, T_ctx, D, factors)


def _run_from_row(row, line, config_table, factors):
    kind = str(row.get('kind', '')).strip()
    N = _number(row, 'N', line)
    D = _number(row, 'D', line)
    T_ctx = _number(row, 'T_ctx', line, cast=int)
    loss = _number(row, 'loss', line)
    C = _number(row, 'C', line, required=False)
    m_reported = _number(row, 'M', line, required=False)
    if C is None:
        try:
            C = float(_resolve_compute(kind, N, D, T_ctx, config_table, factors, line))
        except InvalidConfigError as exc:
            raise DataError(str(exc), line=line)
    try:
        record = RunRecord(N=N, D=D, T_ctx=T_ctx, C=C, loss=loss, kind=kind,
                           m_reported=m_reported)
    except DataError as exc:
        raise DataError(exc.message, line=line)
    violations = record.violations()
    if violations:
        raise DataError('; '.join(violations), line=line)
    return record


def load_runs(path, fmt=None, strict=False, config_table=None, factors=DEFAULT_FACTORS,
              errors=None):
    """
    Load and validate training-run records.

    Args:
        path: CSV with header ``kind,N,D,T_ctx,C,loss`` (C and M optional) or
            JSON lines with the same keys.
        fmt: 'csv' or 'jsonl'; inferred from the file suffix when None.
        strict: raise on the first invalid row instead of skipping it.
        config_table: ConfigTable, or dict of kind to ConfigTable, used to
            compute C for rows that omit it.
        factors: CostFactors for computed C.
        errors: optional list that collects the DataError of every skipped row.

    Returns:
        List of RunRecords in file order.
    """
    fmt = _infer_format(path, fmt)
    if fmt == 'csv':
        rows = _iter_csv(path, RUN_COLUMNS)
    elif fmt == 'jsonl':
        rows = _iter_jsonl(path)
    else:
        raise DataError(f'unknown run file format {fmt!r}')
    records = []
    for line, row in rows:
        try:
            records.append(_run_from_row(row, line, config_table, factors))
        except DataError as exc:
            if strict:
                raise
            logger.warning(f'{path}: skipping {exc}')
            if errors is not None:
                errors.append(exc)
    logger.info(f'Loaded {len(records)} runs from {path}')
    return records


def load_latencies(path, strict=True):
    """Load latency measurements from CSV ``config_id,metric,B,T_p,seconds``."""
    measurements = []
    for line, row in _iter_csv(path, LATENCY_COLUMNS):
        try:
            measurements.append(LatencyMeasurement(
                config_id=row['config_id'], metric=row['metric'],
                B=_number(row, 'B', line, cast=int), T_p=_number(row, 'T_p', line, cast=int),
                seconds=_number(row, 'seconds', line)))
        except (DataError, ValueError) as exc:
            error = exc if isinstance(exc, DataError) and exc.line is not None \
                else DataError(str(exc), line=line)
            if strict:
                raise error
            logger.warning(f'{path}: skipping {error}')
    logger.info(f'Loaded {len(measurements)} latency measurements from {path}')
    return measurements


def load_points(path):
    """
    Load (x, y) points from a CSV with ``x,y`` columns, or its first two columns.

    Returns:
        Tuple of two lists (xs, ys).
    """
    xs, ys = [], []
    rows = list(_iter_csv(path, ()))
    for line, row in rows:
        names = ('x', 'y') if 'x' in row and 'y' in row else list(row)[:2]
        if len(names) < 2:
            raise DataError('expected two columns', line=line)
        xs.append(_number(row, names[0], line))
        ys.append(_number(row, names[1], line))
    return xs, ys


def load_json(path):
    try:
        with open(path) as f:
            return json.load(f)
    except FileNotFoundError:
        raise DataError(f'no such file: {path}')
    except ValueError as exc:
        raise DataError(f'{path} is not valid JSON: {exc}')


def load_arch_config(path):
    data = load_json(path)
    if not isinstance(data, dict):
        raise DataError(f'{path}: architecture config must be a JSON object')
    return ArchConfig.from_dict(data)


def _table_from_dict(data, source):
    kind = data.get('kind')
    configs, listed = [], {}
    for number, entry in enumerate(data.get('configs', []), start=1):
        entry = dict(entry)
        millions = entry.pop('params_millions', None)
        entry.setdefault('kind', kind)
        try:
            config = ArchConfig.from_dict(entry)
        except ScalingError as exc:
            raise DataError(f'{source}: config {number}: {exc}')
        configs.append(config)
        if millions is not None:
            listed[config.name] = millions
    return ConfigTable(name=data.get('name', source), configs=configs,
                       context_length=data.get('context_length'), listed_millions=listed)


def load_config_table(name_or_path):
    """Load a built-in config table by name or a user table from a JSON file."""
    if name_or_path in BUILTIN_TABLES:
        path = os.path.join(DATA_DIR, name_or_path + '.json')
    else:
        path = name_or_path
    return _table_from_dict(load_json(path), name_or_path)


def builtin_config_tables():
    return {name: load_config_table(name) for name in BUILTIN_TABLES}
