"""Column-oriented result bundles with lossless CSV and JSON serialisation.

CSV layout::

    # figure: fig6
    # metadata: {"dt": 0.001, ...}
    # columns: ["sensitivity", "detection probability by the horizon"]
    kappa[1/atomic_time],P_inf[probability]
    0.5,0.1234...

Floats are written with ``repr`` so parsing returns bit-identical values.
"""
from __future__ import annotations

import csv
import io
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

_HEADER = re.compile(r"^(?P<name>[^\[\]]+)\[(?P<unit>[^\[\]]*)\]$")


@dataclass(frozen=True)
class Column:
    name: str
    unit: str
    description: str = ""

    @property
    def header(self) -> str:
        return f"{self.name}[{self.unit}]"


@dataclass(frozen=True, eq=False)
class FigureBundle:
    figure_id: str
    columns: tuple
    data: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        cols = tuple(c if isinstance(c, Column) else Column(*c) for c in self.columns)
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2 or data.shape[1] != len(cols):
            raise ValueError(f"data must have shape (rows, {len(cols)})")
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "data", data)
        # normalise through JSON so emitted and parsed metadata compare equal
        object.__setattr__(self, "metadata", json.loads(json.dumps(self.metadata, sort_keys=True)))

    @classmethod
    def from_columns(cls, figure_id: str, columns, arrays, metadata=None) -> "FigureBundle":
        data = np.column_stack([np.asarray(a, dtype=float) for a in arrays])
        return cls(figure_id, tuple(columns), data, metadata or {})

    def column(self, name: str) -> np.ndarray:
        for i, c in enumerate(self.columns):
            if c.name == name:
                return self.data[:, i]
        raise KeyError(name)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FigureBundle):
            return NotImplemented
        return (
            self.figure_id == other.figure_id
            and self.columns == other.columns
            and self.metadata == other.metadata
            and self.data.shape == other.data.shape
            and bool(np.array_equal(self.data, other.data))
        )

    __hash__ = None


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, allow_nan=False)


def to_csv(bundle: FigureBundle) -> str:
    buf = io.StringIO()
    buf.write(f"# figure: {bundle.figure_id}\n")
    buf.write(f"# metadata: {_dumps(bundle.metadata)}\n")
    buf.write(f"# columns: {_dumps([c.description for c in bundle.columns])}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([c.header for c in bundle.columns])
    for row in bundle.data:
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def from_csv(text: str) -> FigureBundle:
    lines = text.splitlines()
    meta = {}
    for line in lines:
        if not line.startswith("# "):
            break
        key, _, value = line[2:].partition(": ")
        meta[key] = value
    try:
        figure_id = meta["figure"]
        metadata = json.loads(meta["metadata"])
        descriptions = json.loads(meta["columns"])
    except KeyError as exc:
        raise ValueError(f"CSV bundle is missing the {exc.args[0]!r} comment line") from exc
    rows = list(csv.reader(lines[len(meta):]))
    if not rows:
        raise ValueError("CSV bundle has no header row")
    columns = []
    for header, desc in zip(rows[0], descriptions, strict=True):
        m = _HEADER.match(header)
        if not m:
            raise ValueError(f"column header {header!r} lacks a [unit] annotation")
        columns.append(Column(m["name"], m["unit"], desc))
    data = np.array([[float(v) for v in r] for r in rows[1:]], dtype=float).reshape(-1, len(columns))
    return FigureBundle(figure_id, tuple(columns), data, metadata)


def to_json(bundle: FigureBundle) -> str:
    payload = {
        "figure": bundle.figure_id,
        "metadata": bundle.metadata,
        "columns": [{"name": c.name, "unit": c.unit, "description": c.description} for c in bundle.columns],
        "data": bundle.data.tolist(),
    }
    return json.dumps(payload, sort_keys=True, indent=1, allow_nan=False) + "\n"


def from_json(text: str) -> FigureBundle:
    payload = json.loads(text)
    cols = tuple(Column(c["name"], c["unit"], c.get("description", "")) for c in payload["columns"])
    data = np.array(payload["data"], dtype=float).reshape(-1, len(cols))
    return FigureBundle(payload["figure"], cols, data, payload["metadata"])


def emit(bundle: FigureBundle, fmt: str) -> str:
    if fmt == "csv":
        return to_csv(bundle)
    if fmt == "json":
        return to_json(bundle)
    raise ValueError(f"unknown format {fmt!r}")


def parse(text: str, fmt: str) -> FigureBundle:
    if fmt == "csv":
        return from_csv(text)
    if fmt == "json":
        return from_json(text)
    raise ValueError(f"unknown format {fmt!r}")


def write(bundle: FigureBundle, directory: str | Path, fmt: str) -> Path:
    path = Path(directory) / f"{bundle.figure_id}.{fmt}"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(emit(bundle, fmt))
    return path


def read(path: str | Path) -> FigureBundle:
    path = Path(path)
    return parse(path.read_text(), path.suffix.lstrip("."))
