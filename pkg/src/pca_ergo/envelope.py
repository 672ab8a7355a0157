"""Envelope and coupled PCA simulation on a finite periodic ring.

Cells take values 0, 1 or ? (? = still depends on the initial condition).
A single uniform per cell drives the three coupled processes through
nested thresholds, which realises the envelope transition table and the
dominance property simultaneously.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .params import DerivedParams, ParamQuad, derive

Q = 2  # cell code for ?; 0 and 1 are themselves

_BYTE_MAP = np.array([255, 0, 128], dtype=np.uint8)  # cell 0/1/? -> byte


@dataclass
class RingState:
    """Periodic configuration; cells is an int8 array with values 0/1/2(=?)."""

    cells: np.ndarray
    time: int = 0

    def __post_init__(self):
        self.cells = np.asarray(self.cells, dtype=np.int8)
        if self.cells.ndim != 1 or len(self.cells) < 2:
            raise ValueError("ring needs at least 2 cells")

    @property
    def n(self) -> int:
        return len(self.cells)

    def q_count(self) -> int:
        return int((self.cells == Q).sum())


def all_q_ring(n: int) -> RingState:
    return RingState(cells=np.full(n, Q, dtype=np.int8))


def step_uniforms(seed: int, step: int, n: int) -> np.ndarray:
    """Per-(step, cell) uniforms from a counter-based stream.

    The stream is keyed by the run seed with the step index in the counter,
    so the draw for a cell does not depend on how a step is split up.
    """
    bg = np.random.Philox(key=seed, counter=[0, 0, 0, step])
    return np.random.Generator(bg).random(n)


def _threshold_tables(d: DerivedParams):
    """3x3 lookup of (one-threshold, zero-threshold) per parent pair.

    Outcome for uniform u: 1 if u < one_t, 0 if u >= zero_t, else ?.
    """
    quad = d.quad
    one_t = np.empty((3, 3))
    zero_t = np.empty((3, 3))
    for a in (0, 1):
        for b in (0, 1):
            one_t[a, b] = quad.p(a, b)
            zero_t[a, b] = quad.p(a, b)
        one_t[a, Q] = d.pp[0][a]
        zero_t[a, Q] = 1.0 - d.qq[0][a]
        one_t[Q, a] = d.pp[1][a]
        zero_t[Q, a] = 1.0 - d.qq[1][a]
    one_t[Q, Q] = d.p
    zero_t[Q, Q] = 1.0 - d.q
    return one_t, zero_t


def pca_step(ring: RingState, quad: ParamQuad, uniforms: np.ndarray) -> RingState:
    """One synchronous update of a binary ring: cell i looks at (i, i+1)."""
    cells = ring.cells
    if (cells == Q).any():
        raise ValueError("pca_step takes a binary ring")
    probs = np.array([[quad.p00, quad.p01], [quad.p10, quad.p11]])
    left = cells
    right = np.roll(cells, -1)
    new = (uniforms < probs[left, right]).astype(np.int8)
    return RingState(cells=new, time=ring.time + 1)


def envelope_step(ring: RingState, d: DerivedParams,
                  uniforms: np.ndarray) -> RingState:
    """One update of the envelope ring via the threshold coupling."""
    one_t, zero_t = _threshold_tables(d)
    left = ring.cells
    right = np.roll(ring.cells, -1)
    lo = one_t[left, right]
    hi = zero_t[left, right]
    new = np.where(uniforms < lo, 1, np.where(uniforms >= hi, 0, Q))
    return RingState(cells=new.astype(np.int8), time=ring.time + 1)


@dataclass
class CoupledTriple:
    """Envelope ring plus two binary copies it dominates."""

    envelope: RingState
    copy_a: RingState
    copy_b: RingState

    def check_dominance(self) -> None:
        known = self.envelope.cells != Q
        if not (np.array_equal(self.envelope.cells[known],
                               self.copy_a.cells[known])
                and np.array_equal(self.envelope.cells[known],
                                   self.copy_b.cells[known])):
            raise AssertionError("envelope dominance violated")


def coupled_step(triple: CoupledTriple, d: DerivedParams,
                 uniforms: np.ndarray) -> CoupledTriple:
    """Advance the three rings with shared uniforms; dominance is preserved."""
    triple.check_dominance()
    out = CoupledTriple(
        envelope=envelope_step(triple.envelope, d, uniforms),
        copy_a=pca_step(triple.copy_a, d.quad, uniforms),
        copy_b=pca_step(triple.copy_b, d.quad, uniforms),
    )
    out.check_dominance()
    return out


def run_to_decorrelation(d: DerivedParams, n: int, max_steps: int, seed: int):
    """Run the envelope from the all-? ring until no ? remains.

    Returns (hit_time or None, density) where density is the per-step
    ?-density as exact (numerator, denominator) pairs.
    """
    ring = all_q_ring(n)
    density = [(ring.q_count(), n)]
    for t in range(1, max_steps + 1):
        ring = envelope_step(ring, d, step_uniforms(seed, t, n))
        k = ring.q_count()
        density.append((k, n))
        if k == 0:
            return t, density
    return None, density


def density_to_csv(density: list, path: str) -> None:
    try:
        with open(path, "w") as fh:
            fh.write("step,q_density_num,q_density_den\n")
            for step, (num, den) in enumerate(density):
                fh.write(f"{step},{num},{den}\n")
    except OSError as exc:
        raise OSError(f"cannot write density series to {path}: {exc}") from exc


@dataclass
class SpaceTimeRaster:
    """Time-major byte raster: 0 -> 255, 1 -> 0, ? -> 128."""

    data: np.ndarray  # uint8, shape (t, n)


def raster(series: list) -> SpaceTimeRaster:
    rows = [np.asarray(r.cells if isinstance(r, RingState) else r, dtype=np.int8)
            for r in series]
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError("space-time series must be rectangular")
    grid = np.stack(rows)
    return SpaceTimeRaster(data=_BYTE_MAP[grid])


def write_pgm(ras: SpaceTimeRaster, path: str) -> None:
    """Binary PGM (P5), one byte per cell, row 0 = earliest time."""
    t, n = ras.data.shape
    try:
        with open(path, "wb") as fh:
            fh.write(f"P5\n{n} {t}\n255\n".encode("ascii"))
            fh.write(ras.data.tobytes())
    except OSError as exc:
        raise OSError(f"cannot write PGM to {path}: {exc}") from exc


def read_pgm(path: str) -> np.ndarray:
    """Read back a raw 8-bit PGM written by write_pgm (test helper)."""
    with open(path, "rb") as fh:
        magic = fh.readline().strip()
        if magic != b"P5":
            raise ValueError(f"{path} is not a binary PGM")
        dims = fh.readline().split()
        n, t = int(dims[0]), int(dims[1])
        maxval = int(fh.readline())
        if maxval != 255:
            raise ValueError("unexpected maxval")
        data = np.frombuffer(fh.read(t * n), dtype=np.uint8)
    return data.reshape(t, n)


def run_envelope_series(d: DerivedParams, n: int, steps: int,
                        seed: int, start: RingState | None = None) -> list:
    """Collect a fixed number of envelope steps (for rasters)."""
    ring = all_q_ring(n) if start is None else start
    series = [ring]
    for t in range(1, steps + 1):
        ring = envelope_step(ring, d, step_uniforms(seed, t, n))
        series.append(ring)
    return series
