"""Check records, JSON/CSV report emission and the residual study table."""

import csv
import io
import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timezone

from . import __version__


@dataclass(frozen=True)
class Record:
    name: str
    status: str
    value: object = None
    threshold: object = None
    units: str = ""

    @property
    def failed(self):
        return self.status == "fail"


def _clean(v):
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return float(f"{v:.12g}")
    if isinstance(v, complex):
        return str(v)
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if hasattr(v, "item"):
        return _clean(v.item())
    return v


@dataclass
class Report:
    command: str
    config: dict
    records: list = field(default_factory=list)
    timestamp: str = None

    def add(self, name, passed, value=None, threshold=None, units=""):
        status = passed if isinstance(passed, str) else ("pass" if passed else "fail")
        self.records.append(Record(name, status, value, threshold, units))

    @property
    def ok(self):
        return not any(r.failed for r in self.records)

    def as_dict(self):
        out = {"version": __version__, "command": self.command, "config": self.config,
               "records": [{"name": r.name, "status": r.status, "value": _clean(r.value),
                            "threshold": _clean(r.threshold), "units": r.units}
                           for r in self.records]}
        if self.timestamp is not None:
            out["timestamp"] = self.timestamp
        return out

    def to_json(self):
        return json.dumps(self.as_dict(), indent=2, sort_keys=True) + "\n"

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "status", "value", "threshold", "units"])
        for r in self.records:
            w.writerow([r.name, r.status, _fmt(_clean(r.value)), _fmt(_clean(r.threshold)), r.units])
        return buf.getvalue()

    def stamp(self):
        self.timestamp = datetime.now(timezone.utc).isoformat(timespec="seconds")


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, list):
        return " ".join(str(x) for x in v)
    return str(v)


STUDY_COLUMNS = ["equation", "grid_h", "max_abs", "l2", "excluded", "ratio_vs_previous"]


def write_study_csv(path, rows):
    """Rows from :func:`kwlab.convergence.study_table`."""
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=STUDY_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: (f"{v:.12g}" if isinstance(v, float) else v) for k, v in row.items()})


def write_rows_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([f"{v:.12g}" if isinstance(v, float) else v for v in row])
