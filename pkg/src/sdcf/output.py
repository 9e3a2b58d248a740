"""CSV and JSON renderers. Everything is rendered to text first so callers can write all-or-nothing."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .binomial import Lattice
from .lsm import ExerciseBoundary


def fmt(x) -> str:
    """17 significant digits: enough to round-trip any double."""
    return format(float(x), ".17g")


def csv_text(header: Iterable[str], rows: Iterable[Iterable]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(header))
    for row in rows:
        writer.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def lattice_csv(lattice: Lattice) -> str:
    return csv_text(("t", "j", "value"), ((t, j, float(v)) for t, j, v in lattice.nodes()))


def boundary_csv(boundary: ExerciseBoundary) -> str:
    rows = zip(boundary.times, boundary.lower, boundary.upper, boundary.sign_at_zero)
    return csv_text(("t", "L", "U", "sign_at_zero"), ((float(t), float(lo), float(hi), int(s)) for t, lo, hi, s in rows))


def phi_csv(times, phi) -> str:
    return csv_text(("t", "prob"), ((float(t), float(p)) for t, p in zip(times, phi)))


def exercise_times_csv(times, exercise_step) -> str:
    """One row per path; ``step`` is ``-1`` and ``t`` empty for paths never exercised."""
    rows = ((n, int(s), float(times[s]) if s >= 0 else "") for n, s in enumerate(exercise_step))
    return csv_text(("path", "step", "t"), rows)


def _plain(value):
    if isinstance(value, Mapping):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_plain(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        return value.item()
    return value


def json_text(document) -> str:
    """JSON with floats written by ``repr``, the shortest string that round-trips."""
    return json.dumps(_plain(document), indent=2, allow_nan=True) + "\n"


def write_all(files: Mapping[str, str], out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, text in files.items():
        path = out / name
        path.write_text(text)
        written.append(path)
    return written
