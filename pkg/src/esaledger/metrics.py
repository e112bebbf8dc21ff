"""Throughput and latency figures over a simulation trace.

Throughput per block is ``tx count / time since the previous commit`` (the first
block is measured from the start of the run).  It is averaged over a validator's
blocks and then over validators.  Latency per transaction is the median, across
the validators that committed it, of ``commit - submit``.  It is then averaged
over transactions.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from statistics import fmean
from typing import Iterable, Optional

import numpy as np

from .netsim import Trace

CSV_COLUMNS = ("scenario", "N", "input_rate", "tps_avg", "latency_avg_ms", "uncommitted", "anchor_latency_p50_ms")


class MetricsError(ValueError):
    pass


def block_tps(blocks, start: float = 0.0) -> list[float]:
    out, prev = [], start
    for b in blocks:
        dt = b.commit_time - prev
        if dt <= 0:
            raise MetricsError(f"non-positive interval before height {b.height}")
        out.append(b.ntx / dt)
        prev = b.commit_time
    return out


def validator_tps(trace: Trace) -> dict[str, float]:
    res = {}
    for i in trace.honest:
        blocks = trace.blocks[i]
        if not blocks:
            raise MetricsError(f"validator {trace.validator_ids[i]} committed no block")
        res[trace.validator_ids[i]] = fmean(block_tps(blocks, trace.start_time))
    return res


def tps_avg(trace: Trace) -> float:
    per = validator_tps(trace)
    if not per:
        raise MetricsError("trace has no honest validators")
    return fmean(per.values())


def _latencies(trace: Trace) -> np.ndarray:
    rows = list(trace.honest)
    lat = trace.commit_times[rows] - trace.submit_times[np.newaxis, :]
    committed = ~np.all(np.isnan(lat), axis=0)
    # median of an even count is the mean of the two central values
    return np.nanmedian(lat[:, committed], axis=0) if committed.any() else np.zeros(0)


def latency_avg(trace: Trace) -> float:
    med = _latencies(trace)
    if med.size == 0:
        raise MetricsError("no committed transactions")
    return float(np.mean(med))


def uncommitted(trace: Trace) -> int:
    if trace.tx_count == 0:
        return 0
    rows = list(trace.honest)
    return int(np.sum(np.all(np.isnan(trace.commit_times[rows]), axis=0)))


@dataclass(frozen=True)
class MetricsReport:
    scenario: str
    n: int
    input_rate: float
    tps_avg: float
    latency_avg: float  # seconds
    uncommitted: int
    validator_tps: dict = field(default_factory=dict)
    block_tps: dict = field(default_factory=dict)
    anchor_latency_p50_ms: Optional[float] = None
    anchor_latency_max_ms: Optional[float] = None

    def row(self) -> dict:
        return {
            "scenario": self.scenario,
            "N": self.n,
            "input_rate": _num(self.input_rate),
            "tps_avg": _num(self.tps_avg),
            "latency_avg_ms": _num(self.latency_avg * 1000.0),
            "uncommitted": self.uncommitted,
            "anchor_latency_p50_ms": "" if self.anchor_latency_p50_ms is None else _num(self.anchor_latency_p50_ms),
        }


def _num(x: float):
    return int(x) if float(x).is_integer() else round(float(x), 6)


def compute_report(trace: Trace) -> MetricsReport:
    if trace.tx_count == 0 or not any(trace.blocks[i] for i in trace.honest):
        raise MetricsError("empty trace")
    anchors = [a for a in trace.anchor_latencies_ms if a is not None]
    return MetricsReport(
        scenario=trace.scenario,
        n=trace.n,
        input_rate=trace.rate,
        tps_avg=tps_avg(trace),
        latency_avg=latency_avg(trace),
        uncommitted=uncommitted(trace),
        validator_tps=validator_tps(trace),
        block_tps={trace.validator_ids[i]: block_tps(trace.blocks[i], trace.start_time) for i in trace.honest},
        anchor_latency_p50_ms=float(np.median(anchors)) if anchors else None,
        anchor_latency_max_ms=float(max(anchors)) if anchors else None,
    )


def render_csv(reports: Iterable[MetricsReport]) -> str:
    reports = list(reports)
    if not reports:
        raise MetricsError("nothing to export")
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in reports:
        w.writerow(r.row())
    return buf.getvalue()


def export_csv(reports: Iterable[MetricsReport], path) -> None:
    text = render_csv(reports)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def export_summary(report: MetricsReport) -> dict:
    d = report.row()
    d["latency_avg_s"] = report.latency_avg
    d["validator_tps"] = dict(report.validator_tps)
    d["anchor_latency_max_ms"] = report.anchor_latency_max_ms
    if not all(math.isfinite(v) for v in (report.tps_avg, report.latency_avg)):
        raise MetricsError("non-finite metric")
    return d
