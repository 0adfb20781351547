"""CSV/JSON emission, schemas and structured logging."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
from pathlib import Path

import numpy as np

CSV_COLUMNS = {
    "rho_up": "target spin-up density",
    "rho_down": "target spin-down density",
    "rho": "total density actually used (closed-shell balls may differ from the target)",
    "L": "box side",
    "quantity": "measured quantity, '<group>.<name>'",
    "value": "measured value (repr of a float; empty if the row failed)",
    "status": "ok or error",
    "message": "error text for failed rows",
}


def format_value(v) -> str:
    if v is None:
        return ""
    v = float(v)
    if math.isnan(v):
        return "nan"
    return repr(v)


def write_csv(path, rows) -> None:
    """RFC 4180 CSV with a header row; values written as repr(float)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n", quoting=csv.QUOTE_MINIMAL)
    w.writerow(list(CSV_COLUMNS))
    for r in rows:
        w.writerow([format_value(r["rho_up"]), format_value(r["rho_down"]), format_value(r["rho"]),
                    format_value(r["L"]), r["quantity"], format_value(r["value"]), r["status"],
                    r.get("message", "")])
    Path(path).write_bytes(buf.getvalue().encode("utf-8"))


def csv_schema() -> dict:
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "sweep.csv columns",
        "type": "object",
        "properties": {k: {"type": "string", "description": d} for k, d in CSV_COLUMNS.items()},
        "required": list(CSV_COLUMNS),
        "additionalProperties": False,
    }


_NUM = {"type": ["number", "null"]}


def trial_report_schema() -> dict:
    return {
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "trial energy report",
        "type": "object",
        "properties": {
            "rho_up": {"type": "number"},
            "rho_down": {"type": "number"},
            "L": {"type": "number"},
            "cap": {"type": ["integer", "null"]},
            "pieces": {
                "type": "object",
                "properties": {k: _NUM for k in ("E_HF", "H0", "X", "Q1", "Q2", "Q3", "Q4")},
                "required": ["E_HF", "H0", "X", "Q1", "Q2", "Q3", "Q4"],
            },
            "correlation": {"type": "number"},
            "total": {"type": "number"},
            "predicted_first_order": {"type": "number"},
            "leakage": {"type": "number", "minimum": 0},
            "dims": {"type": "object"},
            "checks": {"type": "object"},
            "params": {"type": "object"},
        },
        "required": ["rho_up", "rho_down", "L", "pieces", "correlation", "total",
                     "predicted_first_order", "leakage"],
    }


def fits_schema() -> dict:
    fit = {
        "type": "object",
        "properties": {
            "quantity": {"type": "string"},
            "exponent": _NUM,
            "stderr": _NUM,
            "reference": _NUM,
            "points": {"type": "array"},
            "error": {"type": "string"},
        },
        "required": ["quantity"],
    }
    return {"$schema": "https://json-schema.org/draft/2020-12/schema", "title": "sweep fits",
            "type": "array", "items": fit}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")


def run_id(text: str) -> str:
    """Stable short id derived from the run configuration."""
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:12]


class _KV(logging.Formatter):
    def __init__(self, rid: str):
        super().__init__()
        self.rid = rid

    def format(self, record):
        return f"run={self.rid} level={record.levelname.lower()} module={record.name} {record.getMessage()}"


def setup_logging(rid: str, level: str = "INFO", stream=None) -> logging.Logger:
    root = logging.getLogger("dilute_fermi")
    for h in list(root.handlers):
        root.removeHandler(h)
    h = logging.StreamHandler(stream)
    h.setFormatter(_KV(rid))
    root.addHandler(h)
    root.setLevel(level)
    root.propagate = False
    return root


def kv(event: str, **fields) -> str:
    """'event=<e> k=v ...' with floats in repr form."""
    parts = [f"event={event}"]
    for k, v in fields.items():
        if isinstance(v, float):
            v = f"{v:.6e}"
        parts.append(f"{k}={v}")
    return " ".join(parts)
