"""CSV tables with '#' metadata headers, JSON manifests and a matching reader."""
from __future__ import annotations

import hashlib
import json
import math
import os
import platform
import time
from dataclasses import dataclass, field

import numpy as np
import scipy

from openrabi import __version__

CONVENTIONS = {
    "units": "energies and rates in omega; time in 1/omega",
    "alpha": "<a> = sqrt(Delta/omega) * alpha",
    "quadratures": "x_a = (a + a^dag)/sqrt2, p_a = (a - a^dag)/(i sqrt2)",
    "basis": "spin (x) Fock, spin slowest, spin index 0 = up",
    "floats": "%.17g",
}

KINDS = ("float", "int", "str", "complex", "bool")


class IoError(OSError):
    pass


def fmt_float(v) -> str:
    if v is None:
        return "nan"
    return "%.17g" % float(v)


def expand_schema(schema: list[tuple[str, str]]) -> list[str]:
    cols = []
    for name, kind in schema:
        if kind not in KINDS:
            raise ValueError(f"unknown column kind {kind}")
        if kind == "complex":
            cols += [f"{name}_re", f"{name}_im"]
        else:
            cols.append(name)
    return cols


def format_row(schema, row) -> list[str]:
    out = []
    for (_, kind), v in zip(schema, row):
        if kind == "complex":
            z = complex(v) if v is not None else complex(math.nan, math.nan)
            out += [fmt_float(z.real), fmt_float(z.imag)]
        elif kind == "float":
            out.append(fmt_float(v))
        elif kind == "int":
            out.append(str(int(v)))
        elif kind == "bool":
            out.append("1" if v else "0")
        else:
            s = "" if v is None else str(v)
            if any(c in s for c in ",\n\r"):
                s = s.replace(",", ";").replace("\n", " ").replace("\r", " ")
            out.append(s)
    return out


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()


def header_lines(mode: str, config: dict, schema, extra: dict | None = None) -> list[str]:
    lines = [
        f"# openrabi {__version__}",
        f"# mode: {mode}",
        "# config: " + json.dumps(config, sort_keys=True, default=str),
        "# versions: " + json.dumps(versions(), sort_keys=True),
        "# conventions: " + json.dumps(CONVENTIONS, sort_keys=True),
        "# schema: " + json.dumps([list(s) for s in schema]),
    ]
    for k, v in sorted((extra or {}).items()):
        lines.append(f"# {k}: " + json.dumps(v, sort_keys=True, default=_json_default))
    return lines


def _json_default(o):
    if isinstance(o, complex):
        return [o.real, o.imag]
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    return str(o)


def versions() -> dict:
    return {"openrabi": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


class TableWriter:
    """Streams rows to a CSV; ``append`` reopens an existing file to continue it."""

    def __init__(self, path, mode, config, schema, extra=None, append=False):
        self.path = str(path)
        self.schema = [tuple(s) for s in schema]
        self.rows = 0
        try:
            if append:
                self._fh = open(self.path, "a", newline="")
            else:
                self._fh = open(self.path, "w", newline="")
                for line in header_lines(mode, config, self.schema, extra):
                    self._fh.write(line + "\n")
                self._fh.write(",".join(expand_schema(self.schema)) + "\n")
        except OSError as e:
            raise IoError(str(e)) from e

    def write(self, row):
        self._fh.write(",".join(format_row(self.schema, row)) + "\n")
        self.rows += 1

    def flush(self):
        self._fh.flush()
        os.fsync(self._fh.fileno())

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def emit_table(path, mode, config, schema, rows, extra=None) -> int:
    with TableWriter(path, mode, config, schema, extra) as w:
        for r in rows:
            w.write(r)
        return w.rows


def write_manifest(out_dir, mode, config, files: list[dict], status="complete", **fields) -> str:
    path = os.path.join(str(out_dir), "manifest.json")
    doc = {
        "mode": mode,
        "config": config,
        "config_hash": config_hash(config),
        "files": files,
        "status": status,
        "versions": versions(),
        "conventions": CONVENTIONS,
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
    }
    doc.update(fields)
    tmp = path + ".tmp"
    try:
        with open(tmp, "w") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True, default=_json_default)
            fh.write("\n")
        os.replace(tmp, path)
    except OSError as e:
        raise IoError(str(e)) from e
    return path


def read_manifest(out_dir) -> dict | None:
    path = os.path.join(str(out_dir), "manifest.json")
    if not os.path.exists(path):
        return None
    with open(path) as fh:
        return json.load(fh)


@dataclass
class Table:
    meta: dict
    schema: list[tuple[str, str]]
    columns: dict = field(default_factory=dict)

    def __len__(self):
        return len(next(iter(self.columns.values()))) if self.columns else 0

    def rows(self):
        names = [n for n, _ in self.schema]
        return list(zip(*(self.columns[n] for n in names)))


def _parse(kind, s):
    if kind == "float":
        return float(s)
    if kind == "int":
        return int(s)
    if kind == "bool":
        return s == "1"
    return s


def read_table(path) -> Table:
    meta = {}
    with open(path, newline="") as fh:
        lines = fh.read().split("\n")
    i = 0
    while i < len(lines) and lines[i].startswith("#"):
        body = lines[i][2:]
        if ": " in body:
            k, v = body.split(": ", 1)
            try:
                meta[k] = json.loads(v)
            except json.JSONDecodeError:
                meta[k] = v
        else:
            meta["banner"] = body
        i += 1
    schema = [tuple(s) for s in meta.get("schema", [])]
    header = lines[i].split(",") if i < len(lines) else []
    if header != expand_schema(schema):
        raise IoError(f"header {header} does not match schema")
    cols = {n: [] for n, _ in schema}
    for line in lines[i + 1:]:
        if not line:
            continue
        parts = line.split(",")
        j = 0
        for name, kind in schema:
            if kind == "complex":
                cols[name].append(complex(float(parts[j]), float(parts[j + 1])))
                j += 2
            else:
                cols[name].append(_parse(kind, parts[j]))
                j += 1
    return Table(meta, schema, cols)


def count_data_rows(path) -> int:
    n = 0
    seen_header = False
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                continue
            if not seen_header:
                seen_header = True
                continue
            if line.strip():
                n += 1
    return n
