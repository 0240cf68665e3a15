"""Report files: canonical JSON, CSV tables, atomic writes.

Payload files must be byte-identical across reruns of an unchanged
configuration, so floats are serialized in shortest round-trip form, JSON
keys are sorted, and anything time- or host-dependent goes to the separate
metadata file that idempotence checks ignore.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "CheckResult",
    "jsonable",
    "canonical_json",
    "write_text_atomic",
    "format_cell",
    "csv_text",
    "write_report",
    "META_FILENAME",
    "REPORT_FILENAME",
]

REPORT_FILENAME = "report.json"
META_FILENAME = "run_meta.json"


@dataclass
class CheckResult:
    """Outcome of one named check plus everything needed to serialize it.

    ``verdict`` states whether the underlying bound held; ``expect`` is
    "pass" or "fail"; the check counts as ok when the verdict matches the
    expectation, which is how counterexamples assert that a bound breaks.
    ``tables`` maps a table name to ``(header, rows)``; names starting with
    ``plot_`` become plot-data files.
    """

    name: str
    kind: str
    verdict: bool
    expect: str = "pass"
    summary: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.verdict == (self.expect == "pass")


def jsonable(obj):
    """Recursively convert numpy containers and scalars to JSON-safe values."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if np.isnan(x):
            return "nan"
        if np.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def canonical_json(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_text_atomic(path, text: str) -> None:
    path = str(path)
    dirname = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=dirname, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def format_cell(value) -> str:
    if isinstance(value, (np.bool_, bool)):
        return "true" if value else "false"
    if isinstance(value, (np.integer, int)):
        return str(int(value))
    if isinstance(value, (np.floating, float)):
        return repr(float(value))
    text = str(value)
    if any(ch in text for ch in ",\"\n"):
        text = '"' + text.replace('"', '""') + '"'
    return text


def csv_text(header, rows) -> str:
    lines = [",".join(str(h) for h in header)]
    for row in rows:
        lines.append(",".join(format_cell(c) for c in row))
    return "\n".join(lines) + "\n"


def write_report(out_dir, config, results: list[CheckResult], meta: dict,
                 formats=("json", "csv")) -> dict:
    """Write report.json, per-check CSV tables, and the metadata file.

    Returns a map of logical names to the paths written.  Everything except
    the metadata file depends only on the configuration and the numerics.
    """
    os.makedirs(out_dir, exist_ok=True)
    written = {}

    payload = {
        "schema": 1,
        "config": config,
        "checks": [
            {
                "name": r.name,
                "kind": r.kind,
                "verdict": r.verdict,
                "expect": r.expect,
                "ok": r.ok,
                "summary": r.summary,
            }
            for r in results
        ],
        "all_ok": all(r.ok for r in results),
    }
    if "json" in formats:
        path = os.path.join(out_dir, REPORT_FILENAME)
        write_text_atomic(path, canonical_json(payload))
        written["report"] = path

    if "csv" in formats:
        for r in results:
            for tname, (header, rows) in r.tables.items():
                fname = f"{r.name}_{tname}.csv"
                path = os.path.join(out_dir, fname)
                write_text_atomic(path, csv_text(header, rows))
                written[fname] = path

    meta_path = os.path.join(out_dir, META_FILENAME)
    write_text_atomic(meta_path, canonical_json(meta))
    written["meta"] = meta_path
    return written
