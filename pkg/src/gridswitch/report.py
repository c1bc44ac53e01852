"""Result rows and their CSV / JSON / text-table renderings."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

CSV_COLUMNS = ("method", "load_shed_mw", "violations", "time_s", "best_candidates")


@dataclass
class ScenarioReport:
    label: str
    total_shed_mw: float
    violation_count: int | None
    wall_time_s: float | None
    best_candidates: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        shed = None if _isnan(self.total_shed_mw) else self.total_shed_mw
        t = None if self.wall_time_s is None else round(self.wall_time_s, 3)
        return {"label": self.label, "total_shed_mw": shed,
                "violation_count": self.violation_count, "wall_time_s": t,
                "best_candidates": list(self.best_candidates)}

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioReport":
        shed = d["total_shed_mw"]
        return cls(d["label"], math.nan if shed is None else float(shed),
                   d["violation_count"], d["wall_time_s"], list(d["best_candidates"]))

    def without_timing(self) -> "ScenarioReport":
        return ScenarioReport(self.label, self.total_shed_mw, self.violation_count, None,
                              list(self.best_candidates))


def _isnan(x) -> bool:
    return isinstance(x, float) and math.isnan(x)


def _fmt_mw(x) -> str:
    return "" if x is None or _isnan(x) else f"{x:.4f}"


def _fmt_time(t) -> str:
    return "" if t is None else f"{t:.3f}"


def _fmt_best(ids) -> str:
    return ",".join(str(i) for i in ids) if ids else "-"


def emit_table(rows, fmt: str = "table") -> str:
    """Render scenario rows as ``csv``, ``json`` or an aligned ``table``."""
    rows = list(rows)
    if not rows:
        raise ValueError("nothing to emit")
    if fmt == "json":
        return json.dumps([r.to_dict() for r in rows], indent=2) + "\n"
    cells = [(r.label, _fmt_mw(r.total_shed_mw),
              "" if r.violation_count is None else str(r.violation_count),
              _fmt_time(r.wall_time_s), _fmt_best(r.best_candidates)) for r in rows]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        w.writerows(cells)
        return buf.getvalue()
    if fmt == "table":
        header = ("Method", "Load shed (MW)", "Violations", "Time (s)", "Best TS candidates")
        return render_aligned(header, cells)
    raise ValueError(f"unknown output format {fmt!r}")


def render_aligned(header, cells) -> str:
    widths = [max(len(str(x)) for x in col) for col in zip(header, *cells)]
    line = lambda row: "  ".join(str(x).ljust(w) for x, w in zip(row, widths)).rstrip()
    out = [line(header), "  ".join("-" * w for w in widths)]
    out += [line(row) for row in cells]
    return "\n".join(out) + "\n"


def parse_rows(text: str) -> list[ScenarioReport]:
    """Inverse of ``emit_table(rows, "json")``."""
    return [ScenarioReport.from_dict(d) for d in json.loads(text)]


def jsonable(obj):
    """Recursively swap NaN/inf for None so ``json.dumps`` stays strict."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    return obj
