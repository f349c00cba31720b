"""Result tables and their deterministic CSV / JSON serialization.

CSV layout: ``# key: value`` provenance lines, one header row, then data
rows. Floats use 12 significant digits, lines end in ``\\n``.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, TextIO

from . import __version__

SIG_DIGITS = 12


@dataclass
class ResultTable:
    columns: Dict[str, list]
    provenance: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        lengths = {len(v) for v in self.columns.values()}
        if len(lengths) > 1:
            raise ValueError(f"column lengths differ: { {k: len(v) for k, v in self.columns.items()} }")
        self.provenance.setdefault("artifact_version", __version__)

    @property
    def n_rows(self) -> int:
        return len(next(iter(self.columns.values()), []))

    def rows(self) -> List[dict]:
        names = list(self.columns)
        return [{k: self.columns[k][i] for k in names} for i in range(self.n_rows)]


def format_value(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, (int, str)):
        return str(v)
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return f"{v:.{SIG_DIGITS}g}"


def _parse_value(s: str):
    for conv in (int, float):
        try:
            return conv(s)
        except ValueError:
            pass
    return s


def _round(v):
    if isinstance(v, (bool, int)):
        return int(v)
    if isinstance(v, str):
        return v
    return float(format_value(v))


def to_csv(table: ResultTable) -> str:
    buf = io.StringIO()
    for k in sorted(table.provenance):
        buf.write(f"# {k}: {table.provenance[k]}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(table.columns))
    for row in table.rows():
        w.writerow([format_value(v) for v in row.values()])
    return buf.getvalue()


def to_json(table: ResultTable) -> str:
    doc = {
        "provenance": dict(sorted(table.provenance.items())),
        "columns": {k: [_round(v) for v in vals] for k, vals in table.columns.items()},
    }
    return json.dumps(doc, indent=2) + "\n"


def emit(table: ResultTable, fmt: str, sink: TextIO) -> None:
    if fmt == "csv":
        text = to_csv(table)
    elif fmt == "json":
        text = to_json(table)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    sink.write(text)


def read_csv(text: str) -> ResultTable:
    prov, body = {}, []
    for line in text.split("\n"):
        if line.startswith("# "):
            k, _, v = line[2:].partition(": ")
            prov[k] = v
        elif line:
            body.append(line)
    reader = csv.reader(body)
    header = next(reader)
    cols = {h: [] for h in header}
    for row in reader:
        for h, s in zip(header, row):
            cols[h].append(_parse_value(s))
    return ResultTable(columns=cols, provenance=prov)


def read_json(text: str) -> ResultTable:
    doc = json.loads(text)
    return ResultTable(columns=doc["columns"], provenance=doc["provenance"])
