"""Simulation reports: raw per-replication records plus derived aggregates.

JSON layout (``schema_version`` 1)::

    {
      "schema_version": 1,
      "config": {...},                       # simulation config echo
      "alpha": 0.05,
      "records": [                           # one per replication
        {"rep": 0, "model_size": 6, "signals_captured": 5,
         "tests": [{"step": 1, "group": 3, "is_signal": true,
                    "statistic": 7.1, "pvalue": 0.01,
                    "naive_pvalue": 1e-9, "error": null}, ...]},
        ...
      ],
      "aggregates": {
        "model_size_histogram": {"6": 511, ...},
        "signals_captured_histogram": {"5": 876, ...},
        "power_by_step": {"1": {"count": 1000, "rejections": 532, "rate": 0.532}, ...},
        "null_rejection_by_step": {...},    # same shape, null groups
        "ecdf": {"signal": {"1": [[p, F(p)], ...]}, "null": {...}}
      }
    }

The TSV layout has one row per tested group (``step`` empty for a
replication whose model is empty); aggregates are recomputed on load.
"""

from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field

SCHEMA_VERSION = 1
TSV_COLUMNS = ("rep", "model_size", "signals_captured", "step", "group", "is_signal",
               "statistic", "pvalue", "naive_pvalue", "error")


def _rate_table(pvals_by_step, alpha):
    out = {}
    for step in sorted(pvals_by_step):
        ps = pvals_by_step[step]
        rej = sum(1 for p in ps if p < alpha)
        out[str(step)] = {"count": len(ps), "rejections": rej,
                          "rate": rej / len(ps) if ps else math.nan}
    return out


def _ecdf(pvals_by_step):
    out = {}
    for step in sorted(pvals_by_step):
        ps = sorted(pvals_by_step[step])
        m = len(ps)
        out[str(step)] = [[p, (i + 1) / m] for i, p in enumerate(ps)]
    return out


def aggregate(records: list[dict], alpha: float = 0.05) -> dict:
    """Histograms, per-step rejection rates and ECDFs from raw records."""
    sizes = Counter(r["model_size"] for r in records)
    captured = Counter(r["signals_captured"] for r in records)
    signal, null = defaultdict(list), defaultdict(list)
    for r in records:
        for t in r["tests"]:
            if t["error"] is not None or t["pvalue"] is None or math.isnan(t["pvalue"]):
                continue
            (signal if t["is_signal"] else null)[t["step"]].append(t["pvalue"])
    return {
        "model_size_histogram": {str(k): sizes[k] for k in sorted(sizes)},
        "signals_captured_histogram": {str(k): captured[k] for k in sorted(captured)},
        "power_by_step": _rate_table(signal, alpha),
        "null_rejection_by_step": _rate_table(null, alpha),
        "ecdf": {"signal": _ecdf(signal), "null": _ecdf(null)},
        "errors": sum(1 for r in records for t in r["tests"] if t["error"] is not None),
    }


@dataclass
class Report:
    config: dict
    records: list[dict]
    alpha: float = 0.05
    aggregates: dict = field(default_factory=dict)

    @classmethod
    def from_records(cls, config, records, alpha=0.05) -> "Report":
        return cls(config=dict(config), records=list(records), alpha=alpha,
                   aggregates=aggregate(records, alpha))

    def model_size_mode(self) -> int | None:
        hist = self.aggregates["model_size_histogram"]
        if not hist:
            return None
        return int(max(hist, key=lambda k: (hist[k], -int(k))))

    def power(self, step: int) -> float:
        row = self.aggregates["power_by_step"].get(str(step))
        return row["rate"] if row else math.nan

    def fraction_captured(self, count: int) -> float:
        if not self.records:
            return math.nan
        return self.aggregates["signals_captured_histogram"].get(str(count), 0) / len(self.records)

    def to_json(self) -> str:
        doc = {"schema_version": SCHEMA_VERSION, "config": self.config, "alpha": self.alpha,
               "records": self.records, "aggregates": self.aggregates}
        return json.dumps(_jsonable(doc), sort_keys=True, indent=1, allow_nan=False) + "\n"

    def to_tsv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, delimiter="\t", lineterminator="\n")
        w.writerow(TSV_COLUMNS)
        for r in self.records:
            head = [r["rep"], r["model_size"], r["signals_captured"]]
            if not r["tests"]:
                w.writerow(head + [""] * 7)
            for t in r["tests"]:
                w.writerow(head + [t["step"], t["group"], int(t["is_signal"]),
                                   _fmt(t["statistic"]), _fmt(t["pvalue"]),
                                   _fmt(t["naive_pvalue"]), t["error"] or ""])
        return buf.getvalue()


def _fmt(x):
    return "nan" if x is None or (isinstance(x, float) and math.isnan(x)) else repr(float(x))


def _jsonable(obj):
    # NaN is not valid JSON; failed tests carry null instead
    if isinstance(obj, float) and (math.isnan(obj) or math.isinf(obj)):
        return None
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def emit_report(report: Report, fmt: str, path) -> None:
    """Write ``report`` as ``json`` or ``tsv``; output is byte-stable for fixed input."""
    if fmt == "json":
        text = report.to_json()
    elif fmt == "tsv":
        text = report.to_tsv()
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def load_report(path, fmt: str | None = None) -> Report:
    """Parse a report written by :func:`emit_report` and recompute aggregates."""
    if fmt is None:
        fmt = "json" if str(path).endswith(".json") else "tsv"
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if fmt == "json":
        doc = json.loads(text)
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise ValueError("unsupported report schema_version")
        recs = doc["records"]
        for r in recs:
            for t in r["tests"]:
                for key in ("statistic", "pvalue", "naive_pvalue"):
                    if t[key] is None:
                        t[key] = math.nan
        return Report.from_records(doc["config"], recs, alpha=doc["alpha"])
    rows = list(csv.reader(io.StringIO(text), delimiter="\t"))
    if not rows or tuple(rows[0]) != TSV_COLUMNS:
        raise ValueError("not a report TSV")
    by_rep: dict[int, dict] = {}
    for row in rows[1:]:
        rec = dict(zip(TSV_COLUMNS, row))
        rep = int(rec["rep"])
        entry = by_rep.setdefault(rep, {"rep": rep, "model_size": int(rec["model_size"]),
                                        "signals_captured": int(rec["signals_captured"]),
                                        "tests": []})
        if rec["step"] == "":
            continue
        entry["tests"].append({
            "step": int(rec["step"]), "group": int(rec["group"]),
            "is_signal": rec["is_signal"] == "1",
            "statistic": float(rec["statistic"]), "pvalue": float(rec["pvalue"]),
            "naive_pvalue": float(rec["naive_pvalue"]),
            "error": rec["error"] or None,
        })
    return Report.from_records({}, [by_rep[k] for k in sorted(by_rep)])
