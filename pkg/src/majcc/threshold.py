"""Monte Carlo threshold sweeps, statistics, and crossing estimation."""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .code import build_code
from .decoder import Decoder
from .noisesim import ErrorParams

CSV_HEADER = ["d", "epsilon", "pp_rate", "rounds", "shots", "failures",
              "rate_per_round", "ci_low", "ci_high", "seed"]


@dataclass
class SweepConfig:
    """Point grid and execution policy of a threshold sweep."""

    d_list: list[int]
    eps_list: list[float]            # epsilon values; the x axis is 5*eps
    shots: int = 10_000
    rounds: Optional[int] = None     # None -> R = d
    seed: int = 2024
    weighting: str = "log"
    workers: int = 0                 # 0 -> os.cpu_count()
    out: Optional[str] = None

    def __post_init__(self):
        if not self.d_list or not self.eps_list:
            raise ValueError("d_list and eps_list must be non-empty")
        for d in self.d_list:
            if d % 4 != 1 or d < 5:
                raise ValueError(f"unsupported d={d}")
        for e in self.eps_list:
            if not 0.0 < e <= 0.04:
                raise ValueError(f"epsilon {e} outside (0, 0.04]")
        if self.shots < 1:
            raise ValueError("shots must be >= 1")

    @classmethod
    def from_dict(cls, data: dict) -> "SweepConfig":
        known = {f for f in cls.__dataclass_fields__}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown config fields: {sorted(extra)}")
        return cls(**data)


@dataclass
class ThresholdRecord:
    d: int
    epsilon: float
    rounds: int
    shots: int
    failures: int
    seed: int

    @property
    def pp_rate(self) -> float:
        return 5.0 * self.epsilon

    @property
    def rate_per_round(self) -> float:
        return self.failures / (self.shots * self.rounds)

    def wilson_interval(self, z: float = 1.96) -> tuple[float, float]:
        """95% Wilson interval on the per-shot rate, scaled per round."""
        n = self.shots
        p = min(1.0, self.failures / n)
        denom = 1 + z * z / n
        center = (p + z * z / (2 * n)) / denom
        half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
        lo = max(0.0, center - half) / self.rounds
        hi = min(1.0, center + half) / self.rounds
        return lo, hi

    def to_row(self) -> list:
        lo, hi = self.wilson_interval()
        return [self.d, f"{self.epsilon:.10g}", f"{self.pp_rate:.10g}", self.rounds,
                self.shots, self.failures, f"{self.rate_per_round:.8g}",
                f"{lo:.8g}", f"{hi:.8g}", self.seed]


def _run_chunk(args) -> int:
    """Worker task: decode a contiguous range of shots for one sweep point."""
    d, eps, rounds, seed, shot_lo, shot_hi, weighting = args
    layout = build_code(d)
    dec = Decoder(layout, rounds=rounds, params=ErrorParams(eps),
                  weighting=weighting)
    fails = 0
    for s in range(shot_lo, shot_hi):
        rng = np.random.default_rng((seed, d, int(round(eps * 1e9)), s))
        ev, frame = dec.model.sample_shot(rng)
        fails += dec.decode_events(ev, frame).logical_failure
    return fails


def run_threshold(cfg: SweepConfig, progress=None) -> list[ThresholdRecord]:
    """Simulate every (d, epsilon) point; deterministic for a fixed seed.

    Shots are seeded individually from (seed, d, epsilon, shot), so the
    aggregated counts do not depend on the worker split.
    """
    workers = cfg.workers or os.cpu_count() or 1
    records = []
    tasks = []
    for d in sorted(cfg.d_list):
        rounds = cfg.rounds or d
        for eps in sorted(cfg.eps_list):
            chunk = max(200, cfg.shots // max(1, 4 * workers))
            bounds = list(range(0, cfg.shots, chunk)) + [cfg.shots]
            point_tasks = [(d, eps, rounds, cfg.seed, lo, hi, cfg.weighting)
                           for lo, hi in zip(bounds[:-1], bounds[1:])]
            tasks.append(((d, eps, rounds), point_tasks))

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for (d, eps, rounds), point_tasks in tasks:
                fails = sum(pool.map(_run_chunk, point_tasks))
                rec = ThresholdRecord(d=d, epsilon=eps, rounds=rounds,
                                      shots=cfg.shots, failures=fails,
                                      seed=cfg.seed)
                records.append(rec)
                if progress:
                    progress(rec)
    else:
        for (d, eps, rounds), point_tasks in tasks:
            fails = sum(_run_chunk(t) for t in point_tasks)
            rec = ThresholdRecord(d=d, epsilon=eps, rounds=rounds,
                                  shots=cfg.shots, failures=fails, seed=cfg.seed)
            records.append(rec)
            if progress:
                progress(rec)
    return records


def records_to_csv(records: Sequence[ThresholdRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for rec in sorted(records, key=lambda r: (r.d, r.epsilon)):
        writer.writerow(rec.to_row())
    return buf.getvalue()


def load_csv(path: str) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        return [row for row in reader]


# -- Crossing estimation --------------------------------------------------------


@dataclass
class CrossingEstimate:
    crossing: Optional[float]            # in units of 5*eps; None if absent
    uncertainty: Optional[float]
    pairwise: dict = field(default_factory=dict)  # (d1, d2) -> (x, err) or None

    @property
    def found(self) -> bool:
        return self.crossing is not None


def _loglog_fit(xs, ys, sigmas):
    """Weighted linear fit of log(y) on log(x): returns (a, b, cov)."""
    lx = np.log(xs)
    ly = np.log(ys)
    w = 1.0 / np.maximum(np.asarray(sigmas) / np.asarray(ys), 1e-6) ** 2
    A = np.vstack([np.ones_like(lx), lx]).T
    cov = np.linalg.inv(A.T @ (w[:, None] * A))
    coef = cov @ (A.T @ (w * ly))
    return coef[0], coef[1], cov


def estimate_threshold(records: Sequence[ThresholdRecord]) -> CrossingEstimate:
    """Crossing abscissa of per-d log-log linear fits, with propagated error.

    Requires at least two distances and three epsilon values; points with
    zero failures are dropped from the fits.  When no fitted pair of curves
    crosses inside the scanned window, the result reports no crossing
    rather than an extrapolated guess.
    """
    by_d: dict[int, list[ThresholdRecord]] = {}
    for rec in records:
        by_d.setdefault(rec.d, []).append(rec)
    if len(by_d) < 2:
        raise ValueError("need at least two distances")
    fits = {}
    window = (min(r.pp_rate for r in records), max(r.pp_rate for r in records))
    for d, recs in sorted(by_d.items()):
        recs = [r for r in recs if r.failures > 0]
        if len(recs) < 3:
            continue
        xs = np.array([r.pp_rate for r in recs])
        ys = np.array([r.rate_per_round for r in recs])
        sig = np.array([max((r.wilson_interval()[1] - r.wilson_interval()[0]) / 2,
                            1e-12) for r in recs])
        fits[d] = _loglog_fit(xs, ys, sig)

    pairwise = {}
    xs_found, ws_found = [], []
    ds = sorted(fits)
    for i in range(len(ds) - 1):
        d1, d2 = ds[i], ds[i + 1]
        a1, b1, c1 = fits[d1]
        a2, b2, c2 = fits[d2]
        if abs(b2 - b1) < 1e-12:
            pairwise[(d1, d2)] = None
            continue
        lx = (a1 - a2) / (b2 - b1)
        x = math.exp(lx)
        # error propagation through lx = (a1 - a2) / (b2 - b1)
        denom = (b2 - b1)
        g1 = np.array([1.0 / denom, lx / denom])
        g2 = np.array([-1.0 / denom, -lx / denom])
        var = g1 @ c1 @ g1 + g2 @ c2 @ g2
        err = x * math.sqrt(max(var, 0.0))
        if window[0] * 0.8 <= x <= window[1] * 1.25:
            pairwise[(d1, d2)] = (x, err)
            xs_found.append(x)
            ws_found.append(1.0 / max(err, 1e-9) ** 2)
        else:
            pairwise[(d1, d2)] = None

    if not xs_found:
        return CrossingEstimate(crossing=None, uncertainty=None, pairwise=pairwise)
    xs_found = np.array(xs_found)
    ws_found = np.array(ws_found)
    mean = float(np.sum(xs_found * ws_found) / np.sum(ws_found))
    err = float(math.sqrt(1.0 / np.sum(ws_found)))
    if len(xs_found) > 1:
        spread = float(np.sqrt(np.average((xs_found - mean) ** 2, weights=ws_found)))
        err = max(err, spread)
    return CrossingEstimate(crossing=mean, uncertainty=err, pairwise=pairwise)
