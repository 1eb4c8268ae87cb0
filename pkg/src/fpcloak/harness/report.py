"""CSV / summary / metadata writers for experiment reports."""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path

from .experiments import ExperimentReport


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(round(v, 12))
    return str(v)


def rows_to_csv(rows: list[dict], drop: tuple[str, ...] = ()) -> str:
    if not rows:
        return ""
    cols: list[str] = []
    for r in rows:
        cols.extend(k for k in r if k not in cols and k not in drop)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in cols])
    return buf.getvalue()


def write_report(report: ExperimentReport, out_dir: str | Path) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stem = report.experiment.replace("-", "_")
    written = []
    p = out / f"{stem}.csv"
    p.write_text(rows_to_csv(report.rows))
    written.append(p)
    for name, rows in report.extra_tables.items():
        p = out / f"{name}.csv"
        p.write_text(rows_to_csv(rows))
        written.append(p)
    p = out / f"{stem}_summary.txt"
    p.write_text("\n".join(report.summary) + "\n")
    written.append(p)
    p = out / f"{stem}_meta.json"
    meta = {"experiment": report.experiment, "seeds": report.seeds, "timing_columns": list(report.timing_columns)}
    meta.update(report.provenance)
    p.write_text(json.dumps(meta, indent=2, sort_keys=True, default=str) + "\n")
    written.append(p)
    return written
