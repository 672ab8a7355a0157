"""Batch orchestration: error sweeps over the 16 elementary rules, Monte
Carlo volume of the condition region, and island renewal experiments."""
from __future__ import annotations

import csv
import io
import json
import math
import statistics
from dataclasses import dataclass

import numpy as np

from .params import (ConditionReport, DegenerateDenominatorError, ParamQuad,
                     ca_with_error, condition_check, condition_holds_batch,
                     derive)
from .walk import simulate_island

ALL_CODES = [f"{i:04b}" for i in range(16)]


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf"
    return format(x, ".17g")


@dataclass(frozen=True)
class SweepRow:
    code: str
    eps: float
    gamma0: float
    gamma1: float
    lhs: float
    rhs: float
    holds: bool
    drift_bound: float
    error: str | None = None

    @classmethod
    def from_report(cls, code: str, eps: float,
                    rep: ConditionReport) -> "SweepRow":
        return cls(code=code, eps=eps, gamma0=rep.gamma0, gamma1=rep.gamma1,
                   lhs=rep.lhs, rhs=rep.rhs, holds=rep.holds,
                   drift_bound=rep.drift_bound)


def epsilon_sweep(codes: list, grid: list) -> list:
    """One row per (rule code, error rate); degenerate cells become markers."""
    rows = []
    for code in codes:
        for eps in grid:
            d = derive(ca_with_error(code, eps))
            try:
                rep = condition_check(d)
            except DegenerateDenominatorError as exc:
                rows.append(SweepRow(code=str(code), eps=eps,
                                     gamma0=math.nan, gamma1=math.nan,
                                     lhs=2.0 - d.r, rhs=math.nan, holds=False,
                                     drift_bound=math.nan, error=exc.cell))
                continue
            rows.append(SweepRow.from_report(str(code), eps, rep))
    return rows


SWEEP_FIELDS = ["code", "eps", "gamma0", "gamma1", "lhs", "rhs",
                "holds", "drift_bound"]


def sweep_rows_to_csv(rows: list) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(SWEEP_FIELDS)
    for r in rows:
        if r.error is not None:
            w.writerow([r.code, _fmt(r.eps), f"error:{r.error}", "", "", "",
                        "false", ""])
        else:
            w.writerow([r.code, _fmt(r.eps), _fmt(r.gamma0), _fmt(r.gamma1),
                        _fmt(r.lhs), _fmt(r.rhs),
                        "true" if r.holds else "false", _fmt(r.drift_bound)])
    return buf.getvalue()


def sweep_rows_from_csv(text: str) -> list:
    rows = []
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header != SWEEP_FIELDS:
        raise ValueError(f"unexpected sweep header {header}")
    for rec in reader:
        code, eps = rec[0], float(rec[1])
        if rec[2].startswith("error:"):
            rows.append(SweepRow(code=code, eps=eps, gamma0=math.nan,
                                 gamma1=math.nan, lhs=math.nan, rhs=math.nan,
                                 holds=False, drift_bound=math.nan,
                                 error=rec[2][len("error:"):]))
        else:
            rows.append(SweepRow(
                code=code, eps=eps, gamma0=float(rec[2]), gamma1=float(rec[3]),
                lhs=float(rec[4]), rhs=float(rec[5]), holds=rec[6] == "true",
                drift_bound=float(rec[7])))
    return rows


def sweep_rows_to_json(rows: list) -> str:
    out = []
    for r in rows:
        if r.error is not None:
            out.append({"code": r.code, "eps": r.eps, "error": r.error,
                        "holds": False})
        else:
            out.append({"code": r.code, "eps": r.eps, "gamma0": r.gamma0,
                        "gamma1": r.gamma1, "lhs": r.lhs, "rhs": r.rhs,
                        "holds": r.holds,
                        "drift_bound": "inf" if math.isinf(r.drift_bound)
                        else r.drift_bound})
    return json.dumps(out, indent=2)


@dataclass(frozen=True)
class VolumeEstimate:
    samples: int
    hits: int
    degenerate: int
    fraction: float
    ci95_low: float
    ci95_high: float
    seed: int

    def to_dict(self) -> dict:
        return {"samples": self.samples, "hits": self.hits,
                "degenerate": self.degenerate, "fraction": self.fraction,
                "ci_low": self.ci95_low, "ci_high": self.ci95_high,
                "seed": self.seed}

    def to_csv(self) -> str:
        return ("samples,hits,fraction,ci_low,ci_high,seed\n"
                f"{self.samples},{self.hits},{_fmt(self.fraction)},"
                f"{_fmt(self.ci95_low)},{_fmt(self.ci95_high)},{self.seed}\n")


_Z95 = 1.959963984540054


def wilson_interval(hits: int, n: int, z: float = _Z95):
    phat = hits / n
    denom = 1.0 + z * z / n
    center = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1.0 - phat) / n
                         + z * z / (4 * n * n)) / denom
    return center - half, center + half


def volume_estimate(samples: int, seed: int, jobs: int = 1,
                    batch: int = 1 << 17) -> VolumeEstimate:
    """Monte Carlo fraction of uniform parameters satisfying the condition.

    Degenerate closed-form cells (a measure-zero event) count as misses and
    are tallied.  Work is split into fixed batches with per-batch counter
    streams, so the result is independent of `jobs`.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    hits = 0
    degen = 0
    done = 0
    batch_idx = 0
    while done < samples:
        m = min(batch, samples - done)
        bg = np.random.Philox(key=seed, counter=[0, 0, 1, batch_idx])
        quads = np.random.Generator(bg).random((m, 4))
        h, dg = condition_holds_batch(quads)
        hits += int(h.sum())
        degen += int(dg.sum())
        done += m
        batch_idx += 1
    lo, hi = wilson_interval(hits, samples)
    return VolumeEstimate(samples=samples, hits=hits, degenerate=degen,
                          fraction=hits / samples, ci95_low=lo, ci95_high=hi,
                          seed=seed)


@dataclass(frozen=True)
class RenewalSummary:
    runs: int
    threshold: int
    attempts: list          # per run; capped runs report the cap
    total_steps: list       # per run
    censored: int
    seed: int

    @property
    def median_attempts(self) -> float:
        return statistics.median(self.attempts)

    def to_dict(self) -> dict:
        return {"runs": self.runs, "threshold": self.threshold,
                "median_attempts": self.median_attempts,
                "attempts": self.attempts, "total_steps": self.total_steps,
                "censored": self.censored, "seed": self.seed}


def renewal_experiment(d, threshold: int, runs: int, seed: int,
                       n0: int = 3, attempt_cap: int = 200,
                       horizon: int = 10 ** 4) -> RenewalSummary:
    """Spawn islands until one grows past a threshold gap; repeat per run.

    A run whose attempts exhaust the cap is recorded as censored, not as an
    error.
    """
    rng = np.random.default_rng(seed)
    attempts_out = []
    steps_out = []
    censored = 0
    for _ in range(runs):
        attempts = 0
        total = 0
        while attempts < attempt_cap:
            attempts += 1
            traj = simulate_island(d, n0=n0, horizon=horizon,
                                   seed=int(rng.integers(2 ** 63)))
            total += traj[-1].t
            if any(s.j - s.i >= threshold for s in traj):
                break
        else:
            censored += 1
        attempts_out.append(attempts)
        steps_out.append(total)
    return RenewalSummary(runs=runs, threshold=threshold,
                          attempts=attempts_out, total_steps=steps_out,
                          censored=censored, seed=seed)
