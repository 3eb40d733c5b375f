"""Result tables with provenance headers, deterministic serialization and a matching reader."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass, field


@dataclass
class ResultTable:
    columns: tuple
    rows: list
    meta: dict = field(default_factory=dict)
    document: dict = None  # set for JSON outputs (gate truth tables)

    def __post_init__(self):
        self.columns = tuple(self.columns)
        width = len(self.columns)
        for i, row in enumerate(self.rows):
            if len(row) != width:
                raise ValueError(f"row {i} has {len(row)} cells, expected {width}")

    def column(self, name):
        j = self.columns.index(name)
        return [row[j] for row in self.rows]


def format_cell(value):
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            return repr(value)
        return "%.17g" % value
    if hasattr(value, "item"):  # numpy scalar
        return format_cell(value.item())
    return str(value)


def parse_cell(text):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    return text


def render_csv(table):
    buf = io.StringIO()
    for key, value in table.meta.items():
        buf.write(f"# {key}: {value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([format_cell(v) for v in row])
    return buf.getvalue()


def render_json(table):
    doc = {"meta": dict(table.meta), **(table.document or {})}
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n"


def atomic_write(path, text):
    """Write via a temporary sibling and rename, so a failure never leaves a partial file."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".partial-", dir=directory)
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_table(table, path):
    text = render_json(table) if table.document is not None else render_csv(table)
    atomic_write(path, text)
    return text


def loads_csv(text):
    meta, body = {}, []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(":")
            meta[key.strip()] = value.strip()
        elif line:
            body.append(line)
    reader = csv.reader(body)
    columns = next(reader)
    rows = [tuple(parse_cell(c) for c in r) for r in reader]
    return ResultTable(columns, rows, meta)


def read_table(path):
    """Parse a CSV or JSON file written by :func:`write_table`."""
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        meta = doc.pop("meta", {})
        return ResultTable((), [], meta, doc)
    return loads_csv(text)
