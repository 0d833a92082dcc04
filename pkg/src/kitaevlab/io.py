"""CSV tables with a JSON metadata companion; outputs are byte-deterministic."""

from __future__ import annotations

import csv
import json
import os
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__

FLOAT_FMT = "{:.17g}"


def _cell(x):
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return FLOAT_FMT.format(float(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return str(x)


def config_comment(config: dict) -> str:
    return "# " + json.dumps({"config": _jsonable(config)}, sort_keys=True)


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence], comment: str | None = None) -> Path:
    """Write a table; ``comment`` becomes a leading ``#`` line (``pandas.read_csv(comment="#")``)."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        if comment:
            fh.write(comment if comment.startswith("#") else "# " + comment)
            fh.write("\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(x) for x in row])
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and not r[0].startswith("#")]
    return rows[0], rows[1:]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return str(obj)
    return obj


def write_metadata(path, config: dict, extra: dict | None = None) -> Path:
    path = Path(path)
    doc = {"program": "kitaevlab", "version": __version__, "config": _jsonable(config)}
    if extra:
        doc["results"] = _jsonable(extra)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


class OutputSet:
    """Tracks files written by one command so a failed run can remove them."""

    def __init__(self, directory, stem: str):
        self.dir = Path(directory)
        self.stem = stem
        self.created: list[Path] = []

    def path(self, suffix: str) -> Path:
        p = self.dir / f"{self.stem}{suffix}"
        self.created.append(p)
        return p

    def cleanup(self) -> None:
        for p in self.created:
            try:
                os.remove(p)
            except FileNotFoundError:
                pass
        self.created.clear()
