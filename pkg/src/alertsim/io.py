"""CSV ingestion, report serialization, model files, and config files.

Score streams (``patient_id,time,score,outcome``) carry one row per patient
per recorded time; times are admission-relative integers and may have gaps.
Full cohort files add the simulator covariates and the alert flag.

Ingestion errors carry ``row``: the 1-based data row (the header is row 0).
"""

from __future__ import annotations

import configparser
import csv
import io as _io
import json
import math
import os
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence, TextIO, Union

from .core import Cohort, ConfusionCounts, Metrics, Mode, Strategy, Trajectory
from .risk_model import LogisticModel, ScoreThresholdPolicy
from .trial import TrialResult, compare_arms

SCHEMA_VERSION = 1
SCORE_COLUMNS = ("patient_id", "time", "score", "outcome")
COHORT_COLUMNS = ("patient_id", "time", "position", "velocity", "acceleration", "score",
                  "alert", "outcome")
COUNTS_COLUMNS = ("strategy", "threshold", "tp", "fp", "fn", "tn", "positives")
TRIAL_COLUMNS = ("label", "prevented", "alerts", "n", "prevented_per_patient",
                 "alerts_per_patient")

Source = Union[str, os.PathLike, TextIO]


# --------------------------------------------------------------------------
# ingestion errors


class IngestError(ValueError):
    def __init__(self, message: str, row: Optional[int] = None):
        self.row = row
        super().__init__(message if row is None else f"row {row}: {message}")


class HeaderError(IngestError):
    pass


class FieldError(IngestError):
    pass


class ScoreRangeError(IngestError):
    pass


class UnsortedTimeError(IngestError):
    pass


class DuplicateRecordError(IngestError):
    pass


class OutcomeNotFinalError(IngestError):
    pass


class EmptyInputError(IngestError):
    pass


def _open_text(source: Source):
    if hasattr(source, "read"):
        return source, False
    return open(source, newline="", encoding="utf-8"), True


def _float(value: str, name: str, row: int, allow_empty: bool = False) -> float:
    if value == "" and allow_empty:
        return math.nan
    try:
        x = float(value)
    except ValueError:
        raise FieldError(f"{name} {value!r} is not a number", row) from None
    if not math.isfinite(x):
        raise FieldError(f"{name} must be finite", row)
    return x


def _int(value: str, name: str, row: int) -> int:
    try:
        return int(value)
    except ValueError:
        raise FieldError(f"{name} {value!r} is not an integer", row) from None


def _flag(value: str, name: str, row: int) -> bool:
    if value not in ("0", "1"):
        raise FieldError(f"{name} must be 0 or 1, got {value!r}", row)
    return value == "1"


def _read_records(source: Source, columns: Sequence[str], parse_row) -> dict[str, list]:
    """Single pass: check every row in file order, group parsed rows by patient.

    ``parse_row(d, row)`` validates the non-key fields and returns a tuple whose
    last element is the outcome flag.
    """
    fh, close = _open_text(source)
    try:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise EmptyInputError("input is empty", 0) from None
        header = [h.strip().lstrip("\ufeff") for h in header]
        if tuple(header) != tuple(columns):
            missing = [c for c in columns if c not in header]
            detail = f"missing {missing}" if missing else f"got {','.join(header)}"
            raise HeaderError(f"header must be exactly {','.join(columns)} ({detail})", 0)
        patients: dict[str, list] = {}
        last_time: dict[str, int] = {}
        seen: set[tuple[str, int]] = set()
        finished: set[str] = set()
        row = 0
        for rec in reader:
            row += 1
            if len(rec) != len(columns):
                raise FieldError(f"expected {len(columns)} fields, got {len(rec)}", row)
            d = dict(zip(columns, (v.strip() for v in rec)))
            pid = d["patient_id"]
            if not pid:
                raise FieldError("patient_id is empty", row)
            t = _int(d["time"], "time", row)
            if t < 0:
                raise FieldError("time must be >= 0", row)
            if (pid, t) in seen:
                raise DuplicateRecordError(f"duplicate record for ({pid}, {t})", row)
            if pid in last_time and t < last_time[pid]:
                raise UnsortedTimeError(f"{pid}: time {t} after {last_time[pid]}", row)
            if pid in finished:
                raise OutcomeNotFinalError(f"{pid}: record after the outcome", row)
            parsed = parse_row(d, row)
            if parsed[-1]:
                finished.add(pid)
            seen.add((pid, t))
            last_time[pid] = t
            patients.setdefault(pid, []).append((t, *parsed))
        if not patients:
            raise EmptyInputError("no data rows", row)
        return patients
    finally:
        if close:
            fh.close()


def _score(value: str, row: int, allow_empty: bool = False) -> float:
    s = _float(value, "score", row, allow_empty)
    if not math.isnan(s) and not (0.0 <= s <= 1.0):
        raise ScoreRangeError(f"score {s} outside [0, 1]", row)
    return s


def read_score_csv(source: Source) -> Cohort:
    """Parse a score stream into a silent, covariate-free cohort.

    Times are taken as already admission-relative; gaps are allowed. The
    score may be left empty on an outcome row, where no decision is made.
    """
    def parse(d, row):
        outcome = _flag(d["outcome"], "outcome", row)
        return _score(d["score"], row, allow_empty=outcome), outcome

    patients = _read_records(source, SCORE_COLUMNS, parse)
    trajectories = []
    for pid, recs in patients.items():
        time, score, outcome = zip(*recs)
        trajectories.append(Trajectory.from_scores(pid, time, score, outcome))
    return Cohort(tuple(trajectories), Mode.SILENT)


def read_cohort_csv(source: Source) -> Cohort:
    """Parse a full cohort file as written by ``write_cohort``. The file
    carries no provenance, so the cohort comes back silent with seed 0.
    Frozen rows after an outcome are expected here, so outcome finality is
    checked by ``Trajectory`` instead."""
    def parse(d, row):
        return (_float(d["position"], "position", row, True),
                _float(d["velocity"], "velocity", row, True),
                _float(d["acceleration"], "acceleration", row, True),
                _score(d["score"], row, True),
                _flag(d["alert"], "alert", row),
                _flag(d["outcome"], "outcome", row),
                False)

    patients = _read_records(source, COHORT_COLUMNS, parse)
    trajectories = []
    for pid, recs in patients.items():
        cols = list(zip(*recs))
        try:
            trajectories.append(Trajectory(
                patient_id=pid, time=cols[0], position=cols[1], velocity=cols[2],
                acceleration=cols[3], score=cols[4], alert=cols[5], outcome=cols[6]))
        except ValueError as exc:
            raise FieldError(f"{pid}: {exc}") from None
    return Cohort(tuple(trajectories), Mode.SILENT)


def read_any_cohort(source: Union[str, os.PathLike]) -> Cohort:
    """Dispatch on the header: score stream or full cohort file."""
    with open(source, newline="", encoding="utf-8-sig") as fh:
        header = fh.readline().strip()
    if tuple(header.split(",")) == SCORE_COLUMNS:
        return read_score_csv(source)
    return read_cohort_csv(source)


def _num(x: float) -> str:
    return "" if math.isnan(x) else repr(float(x))


def write_cohort(cohort: Cohort, dest: Optional[Source] = None, kind: str = "full") -> str:
    """Serialise to CSV. ``kind="scores"`` writes a score stream, dropping
    frozen rows after each outcome; ``kind="full"`` writes every column."""
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if kind == "scores":
        w.writerow(SCORE_COLUMNS)
        for tr in cohort:
            k = tr.outcome_index
            stop = len(tr) if k is None else k + 1
            for i in range(stop):
                if math.isnan(tr.score[i]) and i != k:
                    raise ValueError(f"{tr.patient_id}: score stream needs a score at every row")
                w.writerow([tr.patient_id, int(tr.time[i]), _num(tr.score[i]),
                            int(tr.outcome[i])])
    elif kind == "full":
        w.writerow(COHORT_COLUMNS)
        for tr in cohort:
            for i in range(len(tr)):
                w.writerow([tr.patient_id, int(tr.time[i]), _num(tr.position[i]),
                            _num(tr.velocity[i]), _num(tr.acceleration[i]), _num(tr.score[i]),
                            int(tr.alert[i]), int(tr.outcome[i])])
    else:
        raise ValueError(f"unknown cohort file kind {kind!r}")
    text = buf.getvalue()
    if dest is not None:
        _write_text(dest, text)
    return text


def _write_text(dest: Source, text: str):
    if hasattr(dest, "write"):
        dest.write(text)
    else:
        with open(dest, "w", newline="", encoding="utf-8") as fh:
            fh.write(text)


def threshold_policy(threshold: float, snooze: bool = True) -> ScoreThresholdPolicy:
    return ScoreThresholdPolicy(threshold, snooze)


# --------------------------------------------------------------------------
# models


def model_to_json(model: LogisticModel, threshold: Optional[float] = None) -> str:
    d = {"schema_version": SCHEMA_VERSION, **model.to_dict()}
    if threshold is not None:
        d["threshold"] = threshold
    return json.dumps(d, indent=2, sort_keys=True) + "\n"


def save_model(model: LogisticModel, path, threshold: Optional[float] = None) -> None:
    _write_text(path, model_to_json(model, threshold))


def load_model(path) -> tuple[LogisticModel, Optional[float]]:
    with open(path, encoding="utf-8") as fh:
        d = json.load(fh)
    if d.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported model schema_version {d.get('schema_version')!r}")
    return LogisticModel.from_dict(d), d.get("threshold")


# --------------------------------------------------------------------------
# reports

def _kind_of(obj) -> str:
    if isinstance(obj, ConfusionCounts):
        return "evaluation"
    if isinstance(obj, Metrics):
        return "metrics"
    if isinstance(obj, TrialResult):
        return "trial"
    if isinstance(obj, (list, tuple)):
        if all(isinstance(x, ConfusionCounts) for x in obj):
            return "evaluation"
        if all(isinstance(x, (list, tuple)) and len(x) == 2 for x in obj):
            return "sensitivity"
    raise TypeError(f"no report format for {type(obj).__name__}")


def _opt(x) -> str:
    if x is None:
        return ""
    return repr(float(x)) if isinstance(x, float) else str(x)


def _csv(rows: Iterable[Sequence[Any]], header: Sequence[str]) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_opt(v) for v in r])
    return buf.getvalue()


METRICS_COLUMNS = ("sensitivity", "specificity", "ppv", "positives")
SENSITIVITY_COLUMNS = ("rho", "prevented")

# column name -> parser for csv rows; empty cells read back as None
_CSV_TYPES = {
    "strategy": str, "label": str, "threshold": float, "tp": int, "fp": int, "fn": int,
    "tn": int, "positives": int, "sensitivity": float, "specificity": float, "ppv": float,
    "prevented": int, "alerts": int, "n": int, "prevented_per_patient": float,
    "alerts_per_patient": float,
}
# expected prevented outcomes are fractional
_SENSITIVITY_TYPES = {"rho": float, "prevented": float}
_CSV_HEADERS = {
    "evaluation": COUNTS_COLUMNS,
    "metrics": METRICS_COLUMNS,
    "trial": TRIAL_COLUMNS,
    "sensitivity": SENSITIVITY_COLUMNS,
}


def report_rows(obj) -> tuple[tuple[str, ...], list[tuple]]:
    """Header and typed rows of the csv rendering of ``obj``."""
    kind = _kind_of(obj)
    if kind == "evaluation":
        items = [obj] if isinstance(obj, ConfusionCounts) else obj
        rows = [(c.strategy.value, c.threshold, c.tp, c.fp, c.fn, c.tn, c.positives)
                for c in items]
    elif kind == "metrics":
        rows = [(obj.sensitivity, obj.specificity, obj.ppv, obj.positives)]
    elif kind == "trial":
        rows = [(r.label, r.prevented, r.alerts, r.n, r.prevented_per_patient,
                 r.alerts_per_patient) for r in compare_arms(obj)]
    else:
        rows = [(float(r), float(p)) for r, p in obj]
    return _CSV_HEADERS[kind], rows


_STRATEGY_TITLE = {
    Strategy.AGGREGATED_TIME: "Aggregated Time",
    Strategy.FIXED_TIME: "Fixed Time",
    Strategy.FIRST_ALERT: "First Alert",
}


def pretty_table(header: Sequence[str], rows: Sequence[Sequence[str]]) -> str:
    widths = [max([len(h)] + [len(r[i]) for r in rows]) for i, h in enumerate(header)]

    def line(cells):
        return " | ".join(c.rjust(w) for c, w in zip(cells, widths)).rstrip()

    sep = "-+-".join("-" * w for w in widths)
    return "\n".join([line(header), sep, *(line(r) for r in rows)]) + "\n"


def _fmt(x: Optional[float], nd: int = 4) -> str:
    return "-" if x is None else f"{x:.{nd}g}"


def write_report(obj, format: str = "json") -> bytes:
    """Render counts, metrics, a trial result or a sensitivity table.

    JSON documents are ``{"schema_version": 1, "kind": ..., "data": ...}`` with
    kind one of evaluation, metrics, trial, sensitivity.
    """
    kind = _kind_of(obj)
    if format == "csv":
        header, rows = report_rows(obj)
        return _csv(rows, header).encode()
    if kind == "evaluation" and isinstance(obj, ConfusionCounts):
        obj = [obj]
    if format == "json":
        if kind == "evaluation":
            data = [{**c.to_dict(), "positives": c.positives} for c in obj]
        elif kind == "metrics":
            data = obj.to_dict()
        elif kind == "trial":
            data = {**obj.to_dict(), "comparisons": [
                {"label": r.label, "threshold": r.threshold, "prevented": r.prevented,
                 "alerts": r.alerts, "n": r.n, "prevented_per_patient": r.prevented_per_patient,
                 "alerts_per_patient": r.alerts_per_patient} for r in compare_arms(obj)]}
        else:
            data = [{"rho": float(r), "prevented": float(p)} for r, p in obj]
        doc = {"schema_version": SCHEMA_VERSION, "kind": kind, "data": data}
        return (json.dumps(doc, indent=2, sort_keys=True) + "\n").encode()
    if format == "pretty":
        if kind == "evaluation":
            text = pretty_table(
                ("Evaluation", "Threshold", "True Positives", "Positives"),
                [(_STRATEGY_TITLE[c.strategy], _fmt(c.threshold), str(c.tp), str(c.positives))
                 for c in obj])
        elif kind == "metrics":
            text = pretty_table(("Sensitivity", "Specificity", "PPV", "Positives"),
                                 [(_fmt(obj.sensitivity), _fmt(obj.specificity), _fmt(obj.ppv),
                                   str(obj.positives))])
        elif kind == "trial":
            text = pretty_table(("Threshold", "Prevented Outcomes", "Alerts"),
                                 [(r.label, str(r.prevented), str(r.alerts))
                                  for r in compare_arms(obj)])
        else:
            text = pretty_table(("Risk Ratio", "Prevented Outcomes"),
                                 [(_fmt(r), _fmt(p, 6)) for r, p in obj])
        return text.encode()
    raise ValueError(f"unknown report format {format!r}")


def read_report(data: Union[bytes, str], format: str = "json"):
    """Inverse of ``write_report``.

    JSON gives back the original object. CSV gives back ``report_rows``:
    the header and the typed rows.
    """
    text = data.decode() if isinstance(data, bytes) else data
    if format == "json":
        doc = json.loads(text)
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {doc.get('schema_version')!r}")
        kind, d = doc["kind"], doc["data"]
        if kind == "evaluation":
            out = [ConfusionCounts.from_dict({k: v for k, v in c.items() if k != "positives"})
                   for c in d]
            return out
        if kind == "metrics":
            return Metrics.from_dict(d)
        if kind == "trial":
            return TrialResult.from_dict({k: v for k, v in d.items() if k != "comparisons"})
        if kind == "sensitivity":
            return [(r["rho"], r["prevented"]) for r in d]
        raise ValueError(f"unknown report kind {kind!r}")
    if format == "csv":
        reader = csv.reader(_io.StringIO(text))
        header = tuple(next(reader))
        if header not in _CSV_HEADERS.values():
            raise ValueError(f"unrecognised report header {header}")
        types = _SENSITIVITY_TYPES if header == SENSITIVITY_COLUMNS else _CSV_TYPES
        parsers = [types[h] for h in header]
        rows = [tuple(None if v == "" else p(v) for p, v in zip(parsers, rec)) for rec in reader]
        return header, rows
    raise ValueError(f"cannot read report format {format!r}")


# --------------------------------------------------------------------------
# config files

CONFIG_SECTION = "alertsim"


def load_config(path) -> dict[str, str]:
    """Read a flat ``key = value`` file (``#`` comments allowed, no sections).

    Keys are CLI option names with dashes or underscores, e.g.::

        patients = 500
        wind-sd = 0.1
        thresholds = 0.2,0.4,0.6,0.8
    """
    text = Path(path).read_text(encoding="utf-8")
    cp = configparser.ConfigParser(interpolation=None, comment_prefixes=("#", ";"))
    cp.optionxform = str
    cp.read_string(f"[{CONFIG_SECTION}]\n{text}")
    return {k.replace("-", "_"): v for k, v in cp[CONFIG_SECTION].items()}
