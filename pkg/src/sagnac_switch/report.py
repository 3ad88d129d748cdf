"""Plot-ready result files: CSV (primary) and a JSON mirror.

Sweep CSV layout::

    voltage_V,mean_c1,std_c1,mean_c2,std_c2,p1_analytic,p2_analytic
    <one row per voltage>

    # summary
    # repetitions,20
    # visibility,0.9763...
    ...

Floats are written with ``repr`` so a reader recovers them exactly; the
summary is always recomputed from the rows, which keeps ``analyze``
idempotent with the embedded block.
"""
from __future__ import annotations

import csv
import io
import json
import math

from .experiment import ExperimentResult, FitError, extinction_ratio_db, fit_fringe, sweep_visibility

SCHEMA_VERSION = 1
SWEEP_COLUMNS = ("voltage_V", "mean_c1", "std_c1", "mean_c2", "std_c2", "p1_analytic", "p2_analytic")
SCAN_COLUMNS = ("delay_s", "mean_c1", "std_c1", "phi_cw", "phi_ccw")
SUMMARY_KEYS = ("repetitions", "visibility", "visibility_stderr", "extinction_db",
                "v_pi_fit", "fit_visibility", "fit_offset", "fit_residual")


class SchemaError(ValueError):
    pass


def _num(x) -> str:
    if x is None:
        return "nan"
    if isinstance(x, int):
        return str(x)
    return repr(float(x))


def sweep_rows(result: ExperimentResult) -> list:
    return [list(r) for r in zip(result.settings, result.mean_c1, result.std_c1, result.mean_c2,
                                 result.std_c2, result.p1_analytic, result.p2_analytic)]


def scan_rows(result: ExperimentResult) -> list:
    return [list(r) for r in zip(result.settings, result.mean_c1, result.std_c1,
                                 result.phi_cw, result.phi_ccw)]


def summarize(rows, repetitions: int) -> dict:
    """Visibility, extinction and fringe fit recomputed from sweep rows."""
    volts = [r[0] for r in rows]
    m1, s1, m2, s2 = ([r[k] for r in rows] for k in (1, 2, 3, 4))
    vis, se = sweep_visibility(m1, m2, s1, s2, repetitions)
    out = {"repetitions": repetitions, "visibility": vis, "visibility_stderr": se,
           "extinction_db": extinction_ratio_db(vis)}
    try:
        fit = fit_fringe(volts, m1)
        out.update(v_pi_fit=fit.v_pi, fit_visibility=fit.visibility, fit_offset=fit.offset,
                   fit_residual=fit.residual_norm)
    except FitError as exc:
        out.update(v_pi_fit=None, fit_visibility=None, fit_offset=None, fit_residual=None,
                   fit_error=str(exc))
    return out


def format_summary(summary: dict) -> str:
    lines = ["# summary"]
    for key in SUMMARY_KEYS:
        lines.append(f"# {key},{_num(summary.get(key))}")
    if "fit_error" in summary:
        lines.append(f"# fit_error,{summary['fit_error']}")
    return "\n".join(lines) + "\n"


def _csv(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_num(x) for x in row])
    return buf.getvalue()


def _json(kind, columns, rows, summary=None) -> str:
    doc = {"schema_version": SCHEMA_VERSION, "kind": kind, "columns": list(columns),
           "rows": [[_json_num(x) for x in r] for r in rows]}
    if summary is not None:
        doc["summary"] = {k: _json_num(v) if not isinstance(v, str) else v for k, v in summary.items()}
    return json.dumps(doc, indent=2) + "\n"


def _json_num(x):
    # JSON has no inf/nan; encode as strings the reader maps back
    if x is None:
        return None
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    return x


def write_sweep(result: ExperimentResult, fmt: str = "csv") -> str:
    rows = sweep_rows(result)
    summary = summarize(rows, result.repetitions)
    if fmt == "json":
        return _json("voltage_sweep", SWEEP_COLUMNS, rows, summary)
    return _csv(SWEEP_COLUMNS, rows) + "\n" + format_summary(summary)


def write_scan(result: ExperimentResult, fmt: str = "csv") -> str:
    rows = scan_rows(result)
    if fmt == "json":
        return _json("delay_scan", SCAN_COLUMNS, rows)
    return _csv(SCAN_COLUMNS, rows)


def read_sweep(text: str) -> tuple:
    """(rows, embedded summary) from a sweep file in either format."""
    if text.lstrip().startswith("{"):
        return _read_json(text)
    lines = text.splitlines()
    data = [ln for ln in lines if ln.strip() and not ln.startswith("#")]
    if not data:
        raise SchemaError("empty results file")
    header = next(csv.reader([data[0]]))
    if tuple(header) != SWEEP_COLUMNS:
        raise SchemaError(f"expected columns {','.join(SWEEP_COLUMNS)}, got {','.join(header)}")
    rows = []
    for lineno, row in enumerate(csv.reader(data[1:]), start=2):
        if len(row) != len(SWEEP_COLUMNS):
            raise SchemaError(f"row {lineno}: expected {len(SWEEP_COLUMNS)} fields, got {len(row)}")
        try:
            rows.append([float(x) for x in row])
        except ValueError as exc:
            raise SchemaError(f"row {lineno}: {exc}") from None
    summary = {}
    for ln in lines:
        if ln.startswith("# ") and "," in ln:
            key, _, value = ln[2:].partition(",")
            summary[key] = value
    return rows, summary


def _read_json(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from None
    if doc.get("schema_version") != SCHEMA_VERSION or doc.get("kind") != "voltage_sweep":
        raise SchemaError("not a voltage_sweep document with schema_version 1")
    if tuple(doc.get("columns", ())) != SWEEP_COLUMNS:
        raise SchemaError("unexpected column list")
    rows = []
    for r in doc.get("rows", []):
        if len(r) != len(SWEEP_COLUMNS):
            raise SchemaError("row length does not match columns")
        rows.append([float(x) for x in r])
    summary = {k: ("nan" if v is None else str(v)) for k, v in doc.get("summary", {}).items()}
    return rows, summary
