"""CSV / JSON serialization with 9 significant digits and a versioned schema."""

from __future__ import annotations

import csv
import io
import json
import math

from .keyrate import KeyRateReport

SCHEMA_VERSION = 1
SIG_DIGITS = 9


def fmt_float(x):
    if isinstance(x, float) and not math.isfinite(x):
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return f"{x:.{SIG_DIGITS}g}"


def round_sig(x):
    """Round to 9 significant digits; the result's repr parses back bit-exactly."""
    return float(fmt_float(float(x)))


def _jsonable(obj):
    if isinstance(obj, bool) or obj is None or isinstance(obj, (str, int)):
        return obj
    if isinstance(obj, float) or hasattr(obj, "__float__") and not isinstance(obj, (list, tuple, dict)):
        x = float(obj)
        return round_sig(x) if math.isfinite(x) else None
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def report_to_dict(report: KeyRateReport):
    """Key-rate report payload.  Infinite PLOB (zero length) is written as null."""
    return {
        "schema": f"cvmdi.keyrate/{SCHEMA_VERSION}",
        "i_ab": report.i_ab,
        "kappa": list(report.kappa),
        "chi_be": report.chi_be,
        "key_rate": report.key_rate,
        "plob": report.plob,
        "scenario": report.metadata.get("scenario", {}),
    }


def emit_json(payload, kind="table"):
    if isinstance(payload, KeyRateReport):
        doc = report_to_dict(payload)
    elif isinstance(payload, list):
        doc = {"schema": f"cvmdi.{kind}/{SCHEMA_VERSION}", "rows": payload}
    else:
        doc = dict(payload)
        doc.setdefault("schema", f"cvmdi.{kind}/{SCHEMA_VERSION}")
    return (json.dumps(_jsonable(doc), indent=2) + "\n").encode()


def emit_csv(rows, columns):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([fmt_float(float(v)) if isinstance(v, float) or _is_numpy_float(v) else v
                         for v in (row.get(c, "") for c in columns)])
    return buf.getvalue().encode()


def _is_numpy_float(v):
    return type(v).__module__ == "numpy" and hasattr(v, "dtype") and v.dtype.kind == "f"


def emit(payload, fmt="csv", columns=None, kind="table"):
    """Serialize a table (list of row dicts) or a report to bytes."""
    if fmt == "json":
        return emit_json(payload, kind)
    if fmt == "csv":
        if isinstance(payload, KeyRateReport):
            d = report_to_dict(payload)
            k1, k2, k3 = d.pop("kappa")
            d.pop("scenario")
            d.pop("schema")
            d.update(kappa_1=k1, kappa_2=k2, kappa_3=k3)
            payload = [d]
        if columns is None:
            columns = list(payload[0]) if payload else []
        return emit_csv(payload, columns)
    raise ValueError(f"unknown format {fmt!r}")


def parse_csv(data):
    """Parse emitted CSV back into row dicts, converting numeric cells to float."""
    reader = csv.DictReader(io.StringIO(data.decode() if isinstance(data, bytes) else data))
    rows = []
    for row in reader:
        out = {}
        for k, v in row.items():
            try:
                out[k] = float(v)
            except ValueError:
                out[k] = v
        rows.append(out)
    return reader.fieldnames or [], rows
