"""File formats: returns CSV input, provenance-stamped CSV/JSON outputs, config files."""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .errors import ConfigurationError, DataError

DATE_COLUMNS = {"date", "time", "timestamp", "datetime"}


def read_returns_csv(path) -> tuple[list[str], list[str] | None, np.ndarray]:
    """Read a returns file with one row per date and one column per asset.

    The first row holds asset identifiers. A leading column named ``date``
    (or time/timestamp/datetime) is kept as labels and excluded from the
    numbers. Empty or non-numeric cells are rejected with their row and
    column. Returns ``(asset_ids, dates, Y)`` with ``Y`` shaped assets x T.
    """
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path} is empty")
    header = [h.strip() for h in rows[0]]
    has_date = bool(header) and header[0].lower() in DATE_COLUMNS
    assets = header[1:] if has_date else header
    if len(assets) < 2:
        raise DataError(f"{path}: need at least two asset columns")
    if len(set(assets)) != len(assets):
        raise DataError(f"{path}: duplicate asset identifiers")
    dates = [] if has_date else None
    values = []
    for i, row in enumerate(rows[1:], start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(header):
            raise DataError(f"{path}: row {i} has {len(row)} cells, expected {len(header)}")
        if has_date:
            dates.append(row[0].strip())
            row = row[1:]
        parsed = []
        for j, cell in enumerate(row):
            col = assets[j]
            text = cell.strip()
            if not text:
                raise DataError(f"{path}: missing value at row {i}, column {col!r}")
            try:
                x = float(text)
            except ValueError:
                raise DataError(f"{path}: non-numeric value {text!r} at row {i}, column {col!r}") from None
            if not math.isfinite(x):
                raise DataError(f"{path}: non-finite value at row {i}, column {col!r}")
            parsed.append(x)
        values.append(parsed)
    if len(values) < 2:
        raise DataError(f"{path}: need at least two observations")
    return assets, dates, np.array(values).T


def config_hash(obj) -> str:
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def provenance(seed, cfg_hash: str, **extra) -> dict:
    meta = {"version": __version__, "seed": "none" if seed is None else int(seed), "config_hash": cfg_hash}
    meta.update(extra)
    return meta


def fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    if isinstance(x, (np.integer,)):
        return str(int(x))
    return str(x)


def write_csv(path, meta: dict, columns, rows) -> Path:
    """CSV preceded by ``# key=value`` provenance lines."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        for k, v in meta.items():
            fh.write(f"# {k}={v}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([fmt(x) for x in row])
    return path


def write_json(path, meta: dict, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    doc = {"meta": meta, **payload}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def _json_default(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


def read_csv_body(path) -> tuple[dict, list[str], list[list[str]]]:
    """Parse a file written by :func:`write_csv` back into (meta, header, rows)."""
    meta, lines = {}, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("# "):
            k, _, v = line[2:].partition("=")
            meta[k] = v
        else:
            lines.append(line)
    rows = list(csv.reader(lines))
    return meta, rows[0], rows[1:]


def load_config(path) -> dict:
    """Load a YAML (or JSON, which is valid YAML) mapping."""
    try:
        data = yaml.safe_load(Path(path).read_text())
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"config {path} is not valid YAML: {exc}") from exc
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigurationError(f"config {path} must be a key-value mapping")
    return data
