"""Result tables: CSV with metadata header lines and 17-significant-digit floats."""

import csv
import io
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__


def format_value(v):
    """CSV text of a cell: floats with 17 significant digits, booleans as true/false."""
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, float) or hasattr(v, "dtype"):
        x = float(v)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return "%.17g" % x
    return str(v)


@dataclass
class ResultTable:
    """Rows of one CSV report; `columns` fixes the header order."""

    columns: list
    rows: list = field(default_factory=list)
    config_hash: str = ""
    timestamp: str = ""

    def add(self, row):
        missing = [c for c in self.columns if c not in row]
        if missing:
            raise KeyError(f"row lacks columns {missing}")
        self.rows.append(row)

    def body(self):
        """The header row and data rows (everything except the metadata lines)."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([format_value(r[c]) for c in self.columns])
        return buf.getvalue()

    def text(self):
        ts = self.timestamp or datetime.now(timezone.utc).isoformat(timespec="seconds")
        meta = (f"# version: {__version__}\n# config_hash: {self.config_hash}\n"
                f"# timestamp: {ts}\n")
        return meta + self.body()

    def write(self, path):
        with open(path, "w", newline="") as fh:
            fh.write(self.text())
        return path


def read_table(path):
    """(metadata dict, list of row dicts as strings) from a CSV written by ResultTable."""
    meta, lines = {}, []
    with open(path) as fh:
        for line in fh:
            if line.startswith("# "):
                key, _, val = line[2:].partition(":")
                meta[key.strip()] = val.strip()
            else:
                lines.append(line)
    return meta, list(csv.DictReader(lines))
