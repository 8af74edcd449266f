"""Files on disk: atomic writes, the time-series CSV, support-field snapshots
and plot-ready boundary curves.

Every float is written with 17 significant digits so that a value read back
is bit-identical to the one written.  Files are written to a temporary name in
the destination directory and renamed into place, so an interrupted run never
leaves a truncated file under a final path.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .functionals import CSV_COLUMNS, FunctionalReport
from .sphere import SupportField, boundary_embedding

SNAPSHOT_PATTERN = "snapshot_{step:06d}.json"
BOUNDARY_PATTERN = "boundary_{step:06d}.csv"


def fmt(x) -> str:
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def atomic_write_text(path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def _csv_text(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(v) for v in row])
    return buf.getvalue()


def timeseries_csv(reports: Iterable[FunctionalReport]) -> str:
    return _csv_text(CSV_COLUMNS, (r.row() for r in reports))


def write_timeseries(path, reports: Iterable[FunctionalReport]) -> Path:
    return atomic_write_text(path, timeseries_csv(reports))


def read_timeseries(path) -> list[FunctionalReport]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        missing = [c for c in CSV_COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise ValueError(f"{path}: missing columns {missing}")
        return [FunctionalReport.from_row(row) for row in reader]


def dump_json(obj) -> str:
    return json.dumps(obj, indent=1, allow_nan=True) + "\n"


def write_json(path, obj) -> Path:
    return atomic_write_text(path, dump_json(obj))


def write_snapshot(path, h: SupportField, **extra) -> Path:
    d = h.to_dict()
    d.update(extra)
    return write_json(path, d)


def read_snapshot(path, derivative: str = "fd4") -> SupportField:
    return SupportField.from_json(Path(path).read_text(encoding="utf-8"), derivative)


def boundary_csv(h: SupportField) -> str:
    X = boundary_embedding(h)
    header = [f"X{i + 1}" for i in range(X.shape[1])]
    return _csv_text(header, X)


def emit_plotdata(reports, snapshots, out_dir) -> list[Path]:
    """Write ``timeseries.csv`` and one ``boundary_<step>.csv`` per snapshot.

    ``snapshots`` holds ``(step, t, SupportField)`` triples as recorded by
    :func:`torsionflow.flow.run`.  For dim 3 the curve is the generating
    meridian in the ``x1 x3`` plane.
    """
    out = Path(out_dir)
    paths = [write_timeseries(out / "timeseries.csv", reports)]
    for step, _t, h in snapshots:
        paths.append(atomic_write_text(out / BOUNDARY_PATTERN.format(step=step), boundary_csv(h)))
    return paths


def load_density_file(path, n_nodes: int) -> np.ndarray:
    """Density values from a JSON snapshot (``h`` or ``f`` key) or a text column."""
    p = Path(path)
    text = p.read_text(encoding="utf-8")
    if p.suffix.lower() == ".json":
        d = json.loads(text)
        vals = np.asarray(d.get("f", d.get("h")), dtype=float)
    else:
        vals = np.loadtxt(io.StringIO(text), dtype=float, ndmin=1)
    if vals.shape != (n_nodes,):
        raise ValueError(f"{path}: expected {n_nodes} density values, found {vals.size}")
    return vals
