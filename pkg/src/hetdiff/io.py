"""Plot-ready tables, run manifests and atomic file output.

Tables serialize to CSV (``#`` metadata lines, a header row, LF endings)
or to a JSON object holding ``manifest`` and ``table``. Floats are always
written with 17 significant digits so both formats round-trip exactly.
"""
from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

FORMATS = ("csv", "json")


def fmt(v: float) -> str:
    return "%.17g" % v


@dataclass(frozen=True)
class OutputTable:
    """Rectangular table of finite reals with named, unit-tagged columns."""

    columns: tuple
    units: tuple
    rows: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        cols = tuple(str(c) for c in self.columns)
        units = tuple(str(u) for u in self.units) if self.units else ("",) * len(cols)
        rows = np.asarray(self.rows, dtype=float)
        if rows.size == 0:
            rows = rows.reshape(0, len(cols))
        if rows.ndim != 2 or rows.shape[1] != len(cols) or len(units) != len(cols):
            raise ValueError("table must be rectangular with one unit per column")
        if not np.all(np.isfinite(rows)):
            raise ValueError("table rows must be finite")
        for c in cols:
            if not c or any(ch in c for ch in ",\n\r#"):
                raise ValueError(f"bad column name {c!r}")
        meta = {str(k): str(v) for k, v in self.meta.items()}
        for k, v in meta.items():
            if not k or k == "units" or ": " in k or any(ch in k + v for ch in "\n\r"):
                raise ValueError(f"bad metadata entry {k!r}")
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "units", units)
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "meta", meta)

    @classmethod
    def from_columns(cls, data: dict, units: dict | None = None, meta: dict | None = None):
        names = list(data)
        rows = np.column_stack([np.asarray(data[n], dtype=float) for n in names])
        units = units or {}
        return cls(tuple(names), tuple(units.get(n, "") for n in names), rows, meta or {})

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]

    def __eq__(self, other):
        return (isinstance(other, OutputTable) and self.columns == other.columns
                and self.units == other.units and self.meta == other.meta
                and self.rows.shape == other.rows.shape
                and bool(np.all(self.rows == other.rows)))

    # -- csv ---------------------------------------------------------------
    def to_csv(self) -> str:
        lines = [f"# {k}: {v}" for k, v in sorted(self.meta.items())]
        lines.append("# units: " + ",".join(self.units))
        lines.append(",".join(self.columns))
        lines.extend(",".join(fmt(v) for v in row) for row in self.rows)
        return "\n".join(lines) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "OutputTable":
        meta, units, header, rows = {}, None, None, []
        for line in text.split("\n"):
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[2:].partition(": ")
                if key == "units":
                    units = tuple(val.split(","))
                else:
                    meta[key] = val
            elif header is None:
                header = tuple(line.split(","))
            else:
                rows.append([float(v) for v in line.split(",")])
        if header is None:
            raise ValueError("csv table has no header row")
        if units is None or units == ("",) and len(header) > 1:
            units = ("",) * len(header)
        return cls(header, units, np.array(rows, dtype=float).reshape(-1, len(header)), meta)

    # -- json --------------------------------------------------------------
    def to_json(self, manifest: dict | None = None) -> str:
        # rows are spliced in by hand to keep the 17-digit format; keys stay sorted
        head = json.dumps({"columns": list(self.columns), "meta": self.meta}, sort_keys=True)
        rows = ",".join("[" + ",".join(fmt(v) for v in row) + "]" for row in self.rows)
        table = (head[:-1] + ', "rows": [' + rows + '], "units": '
                 + json.dumps(list(self.units)) + "}")
        return ('{"manifest": ' + json.dumps(manifest or {}, sort_keys=True)
                + ', "table": ' + table + "}\n")

    @classmethod
    def from_json(cls, text: str) -> "OutputTable":
        tab = json.loads(text)["table"]
        rows = np.array(tab["rows"], dtype=float).reshape(-1, len(tab["columns"]))
        return cls(tuple(tab["columns"]), tuple(tab["units"]), rows, tab["meta"])

    def serialize(self, fmt_tag: str, manifest: dict | None = None) -> str:
        if fmt_tag == "csv":
            return self.to_csv()
        if fmt_tag == "json":
            return self.to_json(manifest)
        raise ValueError(f"unknown format {fmt_tag!r}")


def load_table(path) -> OutputTable:
    text = Path(path).read_text()
    if str(path).endswith(".json"):
        return OutputTable.from_json(text)
    return OutputTable.from_csv(text)


@dataclass
class RunManifest:
    """Everything needed to repeat a run: argv, parameters, seeds, version, digests."""

    command: list
    params: dict
    seeds: list
    version: str
    wall_time: float = 0.0
    outputs: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunManifest":
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def load(cls, path) -> "RunManifest":
        return cls.from_dict(json.loads(Path(path).read_text()))


def sha256_text(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def atomic_write(path, text: str) -> str:
    """Write ``text`` via a temporary file and rename; returns its sha256."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as f:
            f.write(text)
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return sha256_text(text)


def manifest_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".manifest.json")
