"""Verification records and deterministic report emission.

Reports are written atomically (temp file + rename).  Floats are serialized
with 17 significant digits so values round-trip exactly; the wall-time field
is kept on the record but excluded from emitted files unless requested,
because reports must be byte-identical across reruns with the same seed.
"""
import csv
import json
import os
import tempfile
from dataclasses import dataclass, field

__all__ = ["VerificationReport", "emit_report", "CSV_COLUMNS"]

CSV_COLUMNS = ["check", "params", "value", "reference", "residual_or_slack",
               "tolerance", "pass"]


@dataclass
class VerificationReport:
    """One check: computed value vs reference, residual/slack, verdict."""

    check: str
    params: dict
    value: float
    reference: float
    residual_or_slack: float
    tolerance: float
    passed: bool
    wall_time_s: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_dict(self, timings=False):
        out = {
            "check": self.check,
            "params": _stable(self.params),
            "value": _fmt_value(self.value),
            "reference": _fmt_value(self.reference),
            "residual_or_slack": _fmt_value(self.residual_or_slack),
            "tolerance": _fmt_value(self.tolerance),
            "pass": bool(self.passed),
        }
        if self.extra:
            out["extra"] = _stable(self.extra)
        if timings:
            out["wall_time_s"] = round(self.wall_time_s, 6)
        return out


def _fmt_value(x):
    if isinstance(x, bool) or x is None or isinstance(x, (int, str)):
        return x
    return float(f"{float(x):.17g}")


def _stable(obj):
    if isinstance(obj, dict):
        return {k: _stable(obj[k]) for k in sorted(obj)}
    if isinstance(obj, (list, tuple)):
        return [_stable(v) for v in obj]
    return _fmt_value(obj)


def _atomic_write(path, writer):
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".report-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            writer(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def emit_report(records, path, fmt="json", timings=False):
    """Write records to ``path`` as JSON (array of objects) or CSV.

    Column order is fixed and records keep their given order, so identical
    inputs produce byte-identical files.
    """
    if not records:
        raise ValueError("no records to emit")
    rows = [r.to_dict(timings=timings) for r in records]
    if fmt == "json":
        def write(fh):
            json.dump(rows, fh, indent=1, sort_keys=True)
            fh.write("\n")
    elif fmt == "csv":
        cols = CSV_COLUMNS + (["wall_time_s"] if timings else [])

        def write(fh):
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for row in rows:
                out = []
                for c in cols:
                    v = row.get("pass" if c == "pass" else c)
                    if c == "params":
                        v = json.dumps(v, sort_keys=True)
                    elif isinstance(v, float):
                        v = f"{v:.17g}"
                    out.append(v)
                w.writerow(out)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    _atomic_write(path, write)
    return path
