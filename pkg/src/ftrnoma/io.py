"""CSV serialization of sweep results.

One file per (metric, user, analysis kind); fixed column order
`gamma_bar_db, value, ci_lo, ci_hi, kind, user, metric` with one row per
grid point at 17 significant digits, plus `# key=value` comment lines
carrying the scenario fingerprint.
"""
from __future__ import annotations

import csv
from pathlib import Path

from .montecarlo import SweepResult

__all__ = ["write_sweep_csv", "read_sweep_csv", "COLUMNS"]

COLUMNS = ("gamma_bar_db", "value", "ci_lo", "ci_hi", "kind", "user", "metric")


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_sweep_csv(path: Path, sweep: SweepResult, kind: str, user: str) -> None:
    path = Path(path)
    with path.open("w", newline="") as fh:
        for key in sorted(sweep.meta):
            fh.write(f"# {key}={sweep.meta[key]}\n")
        writer = csv.writer(fh)
        writer.writerow(COLUMNS)
        for x, v, h in zip(sweep.axis, sweep.estimate, sweep.ci_half_width):
            writer.writerow([_fmt(x), _fmt(v), _fmt(v - h), _fmt(v + h), kind, user, sweep.metric])


def read_sweep_csv(path: Path):
    """(SweepResult, kind, user); half-widths recomputed from the bounds."""
    path = Path(path)
    meta: dict[str, str] = {}
    rows = []
    with path.open() as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = value
                continue
            rows.append(line)
    reader = csv.reader(rows)
    header = next(reader)
    if tuple(header) != COLUMNS:
        raise ValueError(f"unexpected CSV header {header}")
    axis, est, half = [], [], []
    kind = user = metric = ""
    for row in reader:
        axis.append(float(row[0]))
        v = float(row[1])
        est.append(v)
        half.append((float(row[3]) - float(row[2])) / 2.0)
        kind, user, metric = row[4], row[5], row[6]
    return (
        SweepResult(tuple(axis), metric, tuple(est), tuple(half), meta),
        kind,
        user,
    )
