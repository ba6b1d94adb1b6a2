"""Shared helpers for the experiment scripts."""
from __future__ import annotations

import csv
import sys
from pathlib import Path

from excursion.cli import load_law


def law_arg(path: str):
    return load_law(path)


def write_rows(path: str | None, columns, rows) -> None:
    handle = open(path, "w", newline="") if path else sys.stdout
    try:
        w = csv.writer(handle, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([f"{v:.10g}" if isinstance(v, float) else v for v in r])
    finally:
        if path:
            handle.close()


DEFAULT_LAW = str(Path(__file__).resolve().parent.parent / "laws" / "dstar.json")
POSITIVE_LAW = str(Path(__file__).resolve().parent.parent / "laws" / "positive.json")
