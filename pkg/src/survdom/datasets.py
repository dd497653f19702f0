"""CSV ingestion, bundled fixtures and step-curve coordinate files."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .estimators import StepCurve, SurvivalSample

__all__ = [
    "DataError",
    "DatasetRecord",
    "FIXTURES",
    "fixture_path",
    "read_records",
    "ingest_csv",
    "load_fixture",
    "write_step_csv",
    "read_step_csv",
]

FIXTURES = ("lung", "kidney")


class DataError(ValueError):
    """Malformed input data; messages carry the offending line number."""


@dataclass(frozen=True)
class DatasetRecord:
    time: float
    status: int
    group: str


def fixture_path(name: str) -> Path:
    stem = Path(name).stem if name.endswith(".csv") else name
    if stem not in FIXTURES:
        raise DataError(f"unknown fixture {name!r}; available: {', '.join(FIXTURES)}")
    return Path(str(resources.files("survdom") / "data" / f"{stem}.csv"))


def _resolve(path) -> Path:
    p = Path(path)
    if p.exists():
        return p
    # bare fixture names fall back to the bundled copies
    if p.parent == Path(".") and (p.stem in FIXTURES):
        return fixture_path(p.stem)
    raise DataError(f"cannot read {path}: no such file")


def read_records(
    path,
    *,
    time_col="time",
    status_col="status",
    group_col="group",
    event_value=1,
):
    """Parse a ``time,status,group`` CSV into :class:`DatasetRecord` rows.

    A status equal to ``event_value`` marks an event. Censorings are coded
    0, or 0/1 when the event code is something other than 1 (the 1/2
    convention of R's ``survival`` data). Anything else is rejected.
    """
    p = _resolve(path)
    try:
        text = p.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    censor_values = {0} if event_value == 1 else {0, 1} - {event_value}
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise DataError(f"{path}: empty file") from None
    cols = {}
    for key, name in (("time", time_col), ("status", status_col), ("group", group_col)):
        if name not in header:
            raise DataError(f"{path}: line 1: missing column {name!r}")
        cols[key] = header.index(name)
    records = []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise DataError(f"{path}: line {lineno}: expected {len(header)} fields, got {len(row)}")
        raw_t, raw_s, group = (row[cols[k]].strip() for k in ("time", "status", "group"))
        try:
            t = float(raw_t)
        except ValueError:
            raise DataError(f"{path}: line {lineno}: time {raw_t!r} is not a number") from None
        if not math.isfinite(t) or t <= 0:
            raise DataError(f"{path}: line {lineno}: time must be positive, got {raw_t}")
        try:
            s_val = float(raw_s)
        except ValueError:
            raise DataError(f"{path}: line {lineno}: status {raw_s!r} is not a number") from None
        if s_val == event_value:
            status = 1
        elif s_val in censor_values:
            status = 0
        else:
            raise DataError(f"{path}: line {lineno}: unexpected status code {raw_s}")
        if not group:
            raise DataError(f"{path}: line {lineno}: empty group label")
        records.append(DatasetRecord(t, status, group))
    if not records:
        raise DataError(f"{path}: no data rows")
    return records


def ingest_csv(path, *, groups=None, **mapping):
    """Read a two-group CSV into a pair of :class:`SurvivalSample`.

    Parameters
    ----------
    groups : (str, str), optional
        Labels to extract, in order. Defaults to the two groups in order of
        first appearance; files must then contain exactly two groups.
    **mapping
        ``time_col``, ``status_col``, ``group_col``, ``event_value``.
    """
    records = read_records(path, **mapping)
    present = list(dict.fromkeys(r.group for r in records))
    if groups is None:
        if len(present) != 2:
            raise DataError(f"{path}: expected exactly two groups, found {len(present)}: {present}")
        groups = present
    else:
        groups = list(groups)
        if len(groups) != 2 or groups[0] == groups[1]:
            raise DataError("exactly two distinct groups must be selected")
    samples = []
    for g in groups:
        rows = [r for r in records if r.group == g]
        if not rows:
            raise DataError(f"{path}: group {g!r} has no observations (available: {present})")
        samples.append(SurvivalSample([r.time for r in rows], [r.status for r in rows], label=g))
    return tuple(samples)


def load_fixture(name: str, groups=None):
    """Samples from a bundled dataset (``"lung"`` or ``"kidney"``)."""
    return ingest_csv(fixture_path(name), groups=groups)


def write_step_csv(curves: dict, path=None) -> str:
    """Step coordinates ``group,time,survival``, starting at ``(0, 1)``.

    Floats are written with ``repr`` so :func:`read_step_csv` recovers the
    curves exactly.
    """
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["group", "time", "survival"])
    for label, curve in curves.items():
        w.writerow([label, "0.0", "1.0"])
        for t, v in zip(curve.times.tolist(), curve.values.tolist()):
            w.writerow([label, repr(t), repr(v)])
    text = out.getvalue()
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def read_step_csv(source) -> dict:
    """Inverse of :func:`write_step_csv`; ``source`` is a path or CSV text."""
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source):
        source = Path(source).read_text(encoding="utf-8")
    rows = list(csv.DictReader(io.StringIO(source)))
    curves = {}
    for label in dict.fromkeys(r["group"] for r in rows):
        pts = [(float(r["time"]), float(r["survival"])) for r in rows if r["group"] == label]
        pts = [p for p in pts if p[0] > 0]
        curves[label] = StepCurve([p[0] for p in pts], [p[1] for p in pts])
    return curves
