"""Annotate published p-values with Bayes factor bounds.

Input is a CSV with header ``study_id,p_value[,reported_bf][,stopped]``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ParseError, ValidationError
from .evidence import INV_E, bf_bound

REQUIRED = ("study_id", "p_value")
OPTIONAL = ("reported_bf", "stopped")
ANNOTATED_COLUMNS = ("study_id", "p_value", "reported_bf", "stopped",
                     "bf_bound", "reciprocal_bound", "flag")

OK = "ok"
EXCEEDS_BOUND = "exceeds_bound"
BOUND_NA = "bound_na"
STOPPED_NA = "stopped_na"


@dataclass(frozen=True)
class StudyRecord:
    study_id: str
    p_value: float
    reported_bf: float | None = None
    stopped: bool = False


@dataclass(frozen=True)
class AnnotatedRecord:
    record: StudyRecord
    bf_bound: float | None
    reciprocal_bound: float | None
    flag: str


def _text_stream(source):
    if isinstance(source, (bytes, bytearray)):
        return io.StringIO(source.decode("utf-8"))
    if isinstance(source, str):
        return io.StringIO(source)
    if isinstance(source, io.TextIOBase):
        return source
    return io.TextIOWrapper(source, encoding="utf-8", newline="")


def _number(text, name, line):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"{name} is not a number: {text!r}", line) from None
    if not math.isfinite(value):
        raise ValidationError(f"{name} must be finite, got {text!r}", line)
    return value


def parse_study_csv(source) -> list[StudyRecord]:
    """Read and validate study records.

    ``source`` may be bytes, a string, or a binary or text file object.
    Errors carry the 1-based line number of the offending row.
    """
    reader = csv.reader(_text_stream(source))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty input, expected a header", 1) from None
    header = [h.strip() for h in header]
    if header and header[0].startswith("\ufeff"):
        header[0] = header[0][1:]
    if tuple(header[:2]) != REQUIRED:
        raise ParseError(f"header must start with study_id,p_value; got {','.join(header)}", 1)
    extra = header[2:]
    if any(h not in OPTIONAL for h in extra) or len(set(extra)) != len(extra):
        raise ParseError(f"unexpected header columns: {','.join(extra)}", 1)

    records, seen = [], set()
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", line)
        cells = dict(zip(header, (c.strip() for c in row)))
        sid = cells["study_id"]
        if not sid:
            raise ValidationError("study_id is empty", line)
        if sid in seen:
            raise ValidationError(f"duplicate study_id {sid!r}", line)
        p = _number(cells["p_value"], "p_value", line)
        if not 0.0 < p < 1.0:
            raise ValidationError(f"p_value must lie in (0, 1), got {p!r}", line)
        rbf = None
        if cells.get("reported_bf"):
            rbf = _number(cells["reported_bf"], "reported_bf", line)
            if rbf <= 0:
                raise ValidationError("reported_bf must be positive", line)
        stopped = False
        flag = cells.get("stopped", "").lower()
        if flag in ("true", "false"):
            stopped = flag == "true"
        elif flag:
            raise ValidationError(f"stopped must be true or false, got {cells['stopped']!r}", line)
        seen.add(sid)
        records.append(StudyRecord(sid, p, rbf, stopped))
    return records


def emit_study_csv(records, fh) -> None:
    """Write records back in the input format; floats round-trip exactly."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(REQUIRED + OPTIONAL)
    for r in records:
        writer.writerow([r.study_id, repr(r.p_value),
                         "" if r.reported_bf is None else repr(r.reported_bf),
                         "true" if r.stopped else "false"])


def annotate_record(rec: StudyRecord) -> AnnotatedRecord:
    if rec.stopped:
        return AnnotatedRecord(rec, None, None, STOPPED_NA)
    bound = bf_bound(rec.p_value)
    if bound is None:
        return AnnotatedRecord(rec, None, None, BOUND_NA)
    flag = EXCEEDS_BOUND if rec.reported_bf is not None and rec.reported_bf > bound else OK
    return AnnotatedRecord(rec, bound, 1.0 / bound, flag)


def annotate_bounds(records) -> list[AnnotatedRecord]:
    """Attach the p-value bound and a consistency flag to every record.

    Stopped studies get no bound, since their p-values are not proper.
    """
    return [annotate_record(r) for r in records]


def _g6(x):
    return "" if x is None else f"{x:.6g}"


def write_annotated_csv(rows, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(ANNOTATED_COLUMNS)
    for a in rows:
        r = a.record
        writer.writerow([r.study_id, _g6(r.p_value), _g6(r.reported_bf),
                         "true" if r.stopped else "false",
                         _g6(a.bf_bound), _g6(a.reciprocal_bound), a.flag])


def emit_bound_curve(p_lo: float, p_hi: float, points: int):
    """Bound and its reciprocal on a log-spaced p grid (plot-ready rows)."""
    if int(points) != points or points < 2:
        raise DomainError("points must be an integer >= 2")
    if not (0.0 < p_lo < p_hi <= INV_E * (1.0 + 4.0 * np.finfo(float).eps)):
        raise DomainError("need 0 < p_lo < p_hi <= 1/e")
    ps = np.geomspace(p_lo, p_hi, int(points))
    ps[0], ps[-1] = p_lo, p_hi
    rows = []
    for p in ps:
        b = bf_bound(float(p))
        rows.append((float(p), b, 1.0 / b))
    return rows


def write_curve_csv(rows, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["p_value", "bf_bound", "reciprocal_bound"])
    for p, b, r in rows:
        writer.writerow([_g6(p), _g6(b), _g6(r)])
