"""Report rows: the tabular pass/fail records every experiment emits."""

import csv
from dataclasses import dataclass

from .errors import ConfigError

__all__ = ["ReportRow", "write_rows", "read_rows", "all_passed"]

_COLUMNS = ["experiment", "epsilon", "t", "metric", "value", "tolerance", "pass"]


def _fmt(v):
    """Floats at 9 significant digits so regressions diff cleanly."""
    if isinstance(v, float):
        return f"{v:.9g}"
    return str(v)


@dataclass
class ReportRow:
    experiment: str
    epsilon: float
    t: float
    metric: str
    value: float
    tolerance: str
    passed: bool

    def as_list(self):
        return [
            self.experiment, _fmt(float(self.epsilon)), _fmt(float(self.t)),
            self.metric, _fmt(float(self.value)), self.tolerance,
            "pass" if self.passed else "FAIL",
        ]


def write_rows(path, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_COLUMNS)
        for r in rows:
            w.writerow(r.as_list())


def read_rows(path):
    rows = []
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd, None)
        if header != _COLUMNS:
            raise ConfigError(f"{path}: not a report CSV (header {header})")
        for rec in rd:
            rows.append(
                ReportRow(
                    experiment=rec[0], epsilon=float(rec[1]), t=float(rec[2]),
                    metric=rec[3], value=float(rec[4]), tolerance=rec[5],
                    passed=(rec[6] == "pass"),
                )
            )
    return rows


def all_passed(rows):
    return all(r.passed for r in rows)
