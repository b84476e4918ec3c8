"""UCI / OpenML Adult income loader.

Columns are matched by name (case, dashes, underscores and dots ignored), so
the different mirrors of the file load the same way.  ``?`` or empty
categorical values map to the shared missing index 0; vocabularies are the
sorted observed values, which makes the encoding a function of the file
contents only.
"""
from __future__ import annotations

import csv
import gzip
import hashlib
import io
import re
from pathlib import Path

import numpy as np

from .tabular import CATEGORICAL, NUMERIC, TabularDataset

FIELDS = [
    ("age", NUMERIC),
    ("workclass", CATEGORICAL),
    ("fnlwgt", NUMERIC),
    ("education", CATEGORICAL),
    ("education-num", NUMERIC),
    ("marital-status", CATEGORICAL),
    ("occupation", CATEGORICAL),
    ("relationship", CATEGORICAL),
    ("race", CATEGORICAL),
    ("sex", CATEGORICAL),
    ("capital-gain", NUMERIC),
    ("capital-loss", NUMERIC),
    ("hours-per-week", NUMERIC),
    ("native-country", CATEGORICAL),
]
LABEL_COLUMNS = ("class", "income", "label", "target")
POSITIVE = ">50k"
NEGATIVE = "<=50k"
DEFAULT_PATH = Path(__file__).resolve().parents[3] / "data" / "adult.csv.gz"


class DataError(ValueError):
    pass


def _key(name: str) -> str:
    return re.sub(r"[\s_\-.]", "", name.strip().lower())


def _read_bytes(path) -> bytes:
    raw = Path(path).read_bytes()
    return gzip.decompress(raw) if raw[:2] == b"\x1f\x8b" else raw


def load_adult(path=DEFAULT_PATH) -> TabularDataset:
    raw_file = Path(path).read_bytes()
    text = _read_bytes(path).decode("utf-8")
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise DataError(f"{path}: empty file") from None
    keys = {_key(h): i for i, h in enumerate(header)}
    missing = [name for name, _ in FIELDS if _key(name) not in keys]
    label_col = next((keys[_key(c)] for c in LABEL_COLUMNS if _key(c) in keys), None)
    if missing or label_col is None:
        missing += [] if label_col is not None else ["class"]
        raise DataError(f"{path}: missing columns {missing}")
    cols = [keys[_key(name)] for name, _ in FIELDS]

    raw = {name: [] for name, _ in FIELDS}
    labels = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) < len(header):
            raise DataError(f"{path}: row {lineno} has {len(row)} columns, expected {len(header)}")
        for (name, kind), c in zip(FIELDS, cols):
            value = row[c].strip()
            if kind == NUMERIC:
                if value in ("", "?"):
                    raw[name].append(np.nan)
                    continue
                try:
                    raw[name].append(float(value))
                except ValueError:
                    raise DataError(f"{path}: row {lineno}, column {name!r}: not a number: {value!r}") from None
            else:
                raw[name].append("" if value == "?" else value)
        label = row[label_col].strip().rstrip(".").lower()
        if label == POSITIVE:
            labels.append(1)
        elif label == NEGATIVE:
            labels.append(0)
        else:
            raise DataError(f"{path}: row {lineno}: unrecognised label {row[label_col]!r}")

    categorical, vocabularies, numeric = {}, {}, {}
    for name, kind in FIELDS:
        if kind == NUMERIC:
            numeric[name] = np.asarray(raw[name], dtype=np.float64)
        else:
            vocab = sorted({v for v in raw[name] if v})
            lookup = {v: i + 1 for i, v in enumerate(vocab)}
            categorical[name] = np.array([lookup.get(v, 0) for v in raw[name]], dtype=np.int64)
            vocabularies[name] = vocab
    return TabularDataset(
        field_names=[n for n, _ in FIELDS],
        field_types=[k for _, k in FIELDS],
        categorical=categorical,
        vocabularies=vocabularies,
        numeric=numeric,
        labels=np.asarray(labels, dtype=np.int64),
        hash=hashlib.sha256(raw_file).hexdigest(),
    )


def read_split_file(path) -> np.ndarray:
    """Test-row indices, separated by commas and/or whitespace."""
    text = Path(path).read_text()
    tokens = [t for t in re.split(r"[,\s]+", text) if t]
    try:
        return np.array([int(t) for t in tokens], dtype=np.int64)
    except ValueError as exc:
        raise DataError(f"{path}: split file must hold integer row indices ({exc})") from None
