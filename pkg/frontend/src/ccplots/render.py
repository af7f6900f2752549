"""Threshold-curve rendering from the sweep CSV.

Input is the exact CSV the simulation side emits (header
``d,epsilon,pp_rate,rounds,shots,failures,rate_per_round,ci_low,ci_high,seed``).
The figure shows one logical-error-rate curve per code distance against the
parity-projection error rate, log-scaled y axis, confidence bands from the
stored Wilson intervals, and a dashed vertical line at the estimated (or
supplied) crossing.  Rendering is deterministic: fixed style, no embedded
timestamps.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

CSV_HEADER = ["d", "epsilon", "pp_rate", "rounds", "shots", "failures",
              "rate_per_round", "ci_low", "ci_high", "seed"]

_COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
           "#8c564b", "#17becf"]


class PlotDataError(ValueError):
    """Raised for missing, empty, or malformed input CSV files."""


@dataclass(frozen=True)
class Record:
    d: int
    pp_rate: float
    rate: float
    ci_low: float
    ci_high: float


@dataclass
class PlotSpec:
    csv_path: str
    out_path: str
    threshold: Optional[float] = None     # in units of the pp error rate
    x_range: Optional[tuple[float, float]] = None
    y_range: Optional[tuple[float, float]] = None
    title: str = "Logical error rate per round"
    vector_path: Optional[str] = None     # defaults to out_path with .svg

    def resolved_vector_path(self) -> str:
        if self.vector_path:
            return self.vector_path
        stem = self.out_path.rsplit(".", 1)[0]
        return stem + ".svg"


def load_records(path: str) -> list[Record]:
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise PlotDataError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise PlotDataError(
                f"{path}: expected header {','.join(CSV_HEADER)}, "
                f"got {reader.fieldnames}")
        records = []
        for i, row in enumerate(reader):
            try:
                records.append(Record(
                    d=int(row["d"]),
                    pp_rate=float(row["pp_rate"]),
                    rate=float(row["rate_per_round"]),
                    ci_low=float(row["ci_low"]),
                    ci_high=float(row["ci_high"]),
                ))
            except (TypeError, ValueError) as exc:
                raise PlotDataError(f"{path}: bad row {i + 2}: {exc}") from exc
    if not records:
        raise PlotDataError(f"{path}: no data rows")
    return records


def estimate_crossing(records: list[Record]) -> Optional[float]:
    """Crossing of consecutive-distance log-log linear fits, if inside the
    scanned window; None otherwise."""
    by_d: dict[int, list[Record]] = {}
    for rec in records:
        if rec.rate > 0:
            by_d.setdefault(rec.d, []).append(rec)
    fits = {}
    for d, recs in by_d.items():
        if len(recs) < 2:
            continue
        lx = np.log([r.pp_rate for r in recs])
        ly = np.log([r.rate for r in recs])
        b, a = np.polyfit(lx, ly, 1)
        fits[d] = (a, b)
    ds = sorted(fits)
    xs, ws = [], []
    window = (min(r.pp_rate for r in records), max(r.pp_rate for r in records))
    for d1, d2 in zip(ds, ds[1:]):
        a1, b1 = fits[d1]
        a2, b2 = fits[d2]
        if abs(b2 - b1) < 1e-12:
            continue
        x = math.exp((a1 - a2) / (b2 - b1))
        if window[0] * 0.8 <= x <= window[1] * 1.25:
            xs.append(x)
            ws.append(1.0)
    if not xs:
        return None
    return float(np.average(xs, weights=ws))


def render_threshold_plot(spec: PlotSpec) -> list[str]:
    """Write the figure; returns the paths written (PNG and vector)."""
    records = load_records(spec.csv_path)
    threshold = spec.threshold
    if threshold is None:
        threshold = estimate_crossing(records)

    by_d: dict[int, list[Record]] = {}
    for rec in records:
        by_d.setdefault(rec.d, []).append(rec)

    plt.rcParams.update({
        "figure.dpi": 120,
        "font.size": 11,
        "svg.hashsalt": "ccplots",
    })
    fig, ax = plt.subplots(figsize=(5.2, 4.0))
    for i, d in enumerate(sorted(by_d)):
        recs = sorted(by_d[d], key=lambda r: r.pp_rate)
        x = np.array([r.pp_rate for r in recs])
        y = np.array([r.rate for r in recs])
        lo = np.array([r.ci_low for r in recs])
        hi = np.array([r.ci_high for r in recs])
        color = _COLORS[i % len(_COLORS)]
        ax.plot(x, y, "o-", color=color, markersize=4, label=f"d = {d}")
        ax.fill_between(x, np.maximum(lo, 1e-12), hi, color=color, alpha=0.2,
                        linewidth=0)
    if threshold is not None:
        ax.axvline(threshold, color="k", linestyle="--", linewidth=1)
        ax.annotate(f"{100 * threshold:.2f}%",
                    xy=(threshold, ax.get_ylim()[0]),
                    xytext=(4, 6), textcoords="offset points", fontsize=9)
    ax.set_yscale("log")
    ax.set_xlabel("parity projection error rate")
    ax.set_ylabel("logical error rate per round")
    ax.set_title(spec.title)
    if spec.x_range:
        ax.set_xlim(*spec.x_range)
    if spec.y_range:
        ax.set_ylim(*spec.y_range)
    ax.legend(frameon=False)
    ax.grid(True, which="both", alpha=0.25)
    fig.tight_layout()

    written = []
    png_metadata = {"Software": "ccplots"}
    fig.savefig(spec.out_path, metadata=png_metadata)
    written.append(spec.out_path)
    svg_path = spec.resolved_vector_path()
    fig.savefig(svg_path, metadata={"Date": None, "Creator": "ccplots"})
    written.append(svg_path)
    plt.close(fig)
    return written
