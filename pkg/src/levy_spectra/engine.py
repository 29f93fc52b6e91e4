"""Monte Carlo campaigns over disorder realizations.

Everything here reduces to one pattern: regenerate realization r from
(seed, r), assemble the operator, count eigenvalues somewhere, and merge
the integer results.  Merges are commutative, so campaigns are
bit-reproducible for a given seed no matter how many workers run them or
how the scheduler interleaves chunks.
"""

from __future__ import annotations

import json
import logging
import math
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .counting import EnergyWindow, PivotBreakdown, count_in, count_leq, negative_flags
from .lattice import (
    LatticeBox,
    ModelSpec,
    SymBandMatrix,
    TilingError,
    build_hamiltonian,
    effective_sides,
    group_count,
    hopping_offsets,
    owner_map,
    sample_disorder,
)

log = logging.getLogger(__name__)


class BandwidthTooSmall(ValueError):
    """Differencing bandwidth does not span the energy grid spacing."""


# ---------------------------------------------------------------------------
# empirical distributions


@dataclass(frozen=True)
class EmpiricalPMF:
    """Histogram of a nonnegative-integer statistic over realizations.

    ``realizations`` counts only the realizations actually aggregated;
    the (rare) ones lost to factorization breakdown are in ``dropped``.
    """

    counts: dict[int, int]
    realizations: int
    dropped: int = 0

    def __post_init__(self) -> None:
        if any(j < 0 for j in self.counts):
            raise ValueError("statistic values must be nonnegative integers")
        if sum(self.counts.values()) != self.realizations:
            raise ValueError("histogram mass must equal realization count")
        if self.realizations < 1:
            raise ValueError("need at least one realization")

    @classmethod
    def from_values(cls, values, dropped: int = 0) -> EmpiricalPMF:
        counts = Counter(int(v) for v in values)
        return cls(dict(counts), sum(counts.values()), dropped)

    def probability(self, j: int) -> float:
        return self.counts.get(j, 0) / self.realizations

    def tail_probability(self, threshold: int) -> float:
        """P{value > threshold}."""
        hits = sum(c for j, c in self.counts.items() if j > threshold)
        return hits / self.realizations

    @property
    def max_value(self) -> int:
        return max(self.counts)

    def mean(self) -> float:
        return sum(j * c for j, c in self.counts.items()) / self.realizations

    def variance(self) -> float:
        """Unbiased sample variance."""
        if self.realizations < 2:
            return 0.0
        mu = self.mean()
        ss = sum(c * (j - mu) ** 2 for j, c in self.counts.items())
        return ss / (self.realizations - 1)

    def std_error_of_mean(self) -> float:
        return math.sqrt(self.variance() / self.realizations)


def pmf_csv_text(pmf: EmpiricalPMF) -> str:
    # every value up to the observed max gets a row, so structural zeros
    # (parity gaps and the like) are visible in the file
    lines = ["value,count,probability"]
    for j in range(pmf.max_value + 1):
        c = pmf.counts.get(j, 0)
        lines.append(f"{j},{c},{c / pmf.realizations!r}")
    return "\n".join(lines) + "\n"


def pmf_record(
    pmf: EmpiricalPMF, model: ModelSpec, window: EnergyWindow, seed: int
) -> dict:
    """JSON-ready campaign record: model, window, R, seed, pmf, moments."""
    mean = pmf.mean()
    var = pmf.variance()
    return {
        "model": model.config_dict(),
        "window": {
            "center": window.center,
            "base_interval": [window.base_left, window.base_right],
            "scale": window.scale,
        },
        "R": pmf.realizations,
        "dropped": pmf.dropped,
        "seed": seed,
        "pmf": {str(j): pmf.counts[j] for j in sorted(pmf.counts)},
        "moments": {"mean": mean, "variance": var, "max": pmf.max_value},
    }


# ---------------------------------------------------------------------------
# block schemes


@dataclass(frozen=True)
class BlockScheme:
    """Disjoint cover of a box by congruent sub-boxes of half-side ell.

    Centers are lattice coordinates listed row-major over the tile grid,
    matching the block numbering used by the campaign runners.
    """

    block_half_side: int
    centers: tuple[tuple[int, ...], ...]

    @property
    def n_blocks(self) -> int:
        return len(self.centers)

    @property
    def block_side(self) -> int:
        return 2 * self.block_half_side + 1

    @classmethod
    def tile(cls, box: LatticeBox, block_half_side: int) -> BlockScheme:
        side = 2 * block_half_side + 1
        if box.side % side != 0:
            raise TilingError(
                f"block side {side} does not divide box side {box.side}"
            )
        per_axis = box.side // side
        ticks = [-box.half_side + block_half_side + side * i for i in range(per_axis)]
        grids = np.meshgrid(*([ticks] * box.dim), indexing="ij")
        centers = tuple(
            tuple(int(g.flat[i]) for g in grids) for i in range(per_axis**box.dim)
        )
        return cls(block_half_side, centers)


def feasible_block_half_sides(box: LatticeBox) -> list[int]:
    """Half-sides ell whose blocks tile the box, excluding the whole box."""
    return [
        (s - 1) // 2
        for s in range(1, box.side, 2)
        if box.side % s == 0
    ]


def default_block_half_side(box: LatticeBox, epsilon: float = 0.1) -> int:
    """Largest-box-exponent default ell ~ L^((1-epsilon)/2), snapped to a tiling.

    Among the half-sides that tile the box (the whole box excluded), the
    one closest to floor(L^((1-epsilon)/2)) is returned, preferring the
    smaller on ties.  A prime box side leaves only single-site blocks,
    so the snap can be drastic; pick factorizable sides when the block
    exponent matters.  TilingError only for the trivial one-site box.
    """
    target = math.floor(box.half_side ** ((1.0 - epsilon) / 2.0))
    feasible = feasible_block_half_sides(box)
    if not feasible:
        raise TilingError(
            f"box side {box.side} has no proper odd divisor; "
            "choose a half-side whose side factorizes"
        )
    return min(feasible, key=lambda ell: (abs(ell - target), ell))


# ---------------------------------------------------------------------------
# shared campaign plumbing


def _chunks(total: int, workers: int) -> list[tuple[int, int]]:
    # chunk boundaries influence scheduling only, never results
    step = max(1, math.ceil(total / max(1, 8 * workers)))
    return [(lo, min(lo + step, total)) for lo in range(0, total, step)]


def _run_chunked(chunk_fn, realizations: int, workers: int):
    """Run chunk_fn(lo, hi) over [0, R) and return the list of results."""
    if realizations < 1:
        raise ValueError("realizations must be positive")
    if workers <= 1:
        return [chunk_fn(0, realizations)]
    spans = _chunks(realizations, workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda span: chunk_fn(*span), spans))


class _Assembler:
    """Per-campaign precomputation: band template plus diagonal scatter map.

    Produces matrices identical to build_hamiltonian without re-deriving
    the hopping structure for every realization.  An optional site
    partition zeroes every hopping entry that couples different parts,
    which makes the matrix block diagonal with respect to the partition.
    """

    def __init__(self, spec: ModelSpec, box: LatticeBox, site_partition=None):
        self.spec = spec
        self.box = box
        self.owner = owner_map(spec, box)
        self.groups = group_count(spec, box)
        template = build_hamiltonian(spec, box, np.zeros(self.groups))
        # zero hopping stores no off-diagonal rows and is already block
        # diagonal for any partition, so there is nothing to mask
        if site_partition is not None and spec.hopping != 0.0:
            m = spec.fibre_dim
            part = np.repeat(site_partition, m)
            n = template.order
            for k in hopping_offsets(spec, box):
                cols = np.arange(n - k)
                template.data[k, cols] *= part[cols] == part[cols + k]
        self.template = template.data

    def matrix(self, coupling_values: np.ndarray) -> SymBandMatrix:
        data = self.template.copy()
        data[0] = coupling_values[self.owner]
        return SymBandMatrix(data)

    def draw(self, seed: int, realization: int) -> np.ndarray:
        return sample_disorder(self.spec, self.box, seed, realization).values


# ---------------------------------------------------------------------------
# campaigns


def run_xi(
    spec: ModelSpec,
    box: LatticeBox,
    window: EnergyWindow,
    realizations: int,
    seed: int,
    *,
    workers: int = 1,
) -> EmpiricalPMF:
    """Empirical law of the eigenvalue count in the rescaled window.

    Requires window.scale == box.site_count: the window must shrink with
    the same volume it is counted on, otherwise the statistic is not the
    one the rest of the toolkit analyses.
    """
    if window.scale != box.site_count:
        raise ValueError(
            f"window scale {window.scale} != box site count {box.site_count}"
        )
    asm = _Assembler(spec, box)

    def chunk(lo: int, hi: int):
        counts: Counter = Counter()
        dropped = 0
        for r in range(lo, hi):
            matrix = asm.matrix(asm.draw(seed, r))
            try:
                counts[count_in(matrix, window)] += 1
            except PivotBreakdown:
                log.warning("realization %d dropped after pivot retries", r)
                dropped += 1
        return counts, dropped

    merged: Counter = Counter()
    dropped = 0
    for c, d in _run_chunked(chunk, realizations, workers):
        merged.update(c)
        dropped += d
    _check_drop_rate(dropped, realizations)
    return EmpiricalPMF(dict(merged), realizations - dropped, dropped)


class BlockRun(NamedTuple):
    per_block: list[EmpiricalPMF]
    total: EmpiricalPMF


def _scheme_site_partition(
    spec: ModelSpec, box: LatticeBox, scheme: BlockScheme
) -> np.ndarray:
    """Site index -> scheme block id, row-major over the tile grid."""
    sides = effective_sides(spec, box)
    bs = scheme.block_side
    for s in sides:
        if s % bs != 0:
            raise TilingError(
                f"block side {bs} does not divide effective side {s}"
            )
    n_sites = math.prod(sides)
    site = np.arange(n_sites, dtype=np.int64)
    tiles = []
    for s in reversed(sides):
        tiles.append((site % s) // bs)
        site //= s
    tiles.reverse()
    block = np.zeros(n_sites, dtype=np.int64)
    for t, s in zip(tiles, sides):
        block = block * (s // bs) + t
    return block


def run_eta_blocks(
    spec: ModelSpec,
    box: LatticeBox,
    scheme: BlockScheme,
    window: EnergyWindow,
    realizations: int,
    seed: int,
    *,
    workers: int = 1,
) -> BlockRun:
    """Per-block eigenvalue counts and their sum, from shared disorder draws.

    Each realization restricts the operator to every scheme block (all
    hopping across block boundaries dropped), counts eigenvalues of each
    restriction in the window, and records both the per-block values and
    their total.  The window uses the full box's scale, so the total is
    directly comparable with run_xi at the same seed.
    """
    if window.scale != box.site_count:
        raise ValueError(
            f"window scale {window.scale} != box site count {box.site_count}"
        )
    partition = _scheme_site_partition(spec, box, scheme)
    n_blocks = int(partition.max()) + 1
    if n_blocks != scheme.n_blocks:
        raise TilingError("scheme does not cover the box")
    asm = _Assembler(spec, box, site_partition=partition)
    owner_mat = np.repeat(partition, spec.fibre_dim)
    # largest possible per-block count = block matrix order
    cap = np.max(np.bincount(owner_mat, minlength=n_blocks))

    def chunk(lo: int, hi: int):
        per_block = np.zeros((n_blocks, cap + 1), dtype=np.int64)
        totals: Counter = Counter()
        dropped = 0
        for r in range(lo, hi):
            matrix = asm.matrix(asm.draw(seed, r))
            try:
                hi_flags = negative_flags(matrix, window.right)
                lo_flags = negative_flags(matrix, window.left)
            except PivotBreakdown:
                log.warning("realization %d dropped after pivot retries", r)
                dropped += 1
                continue
            eta = np.bincount(owner_mat, weights=hi_flags, minlength=n_blocks)
            eta -= np.bincount(owner_mat, weights=lo_flags, minlength=n_blocks)
            eta = eta.astype(np.int64)
            if np.any((eta < 0) | (eta > cap)):
                raise RuntimeError(
                    f"realization {r}: per-block count outside [0, {cap}]"
                )
            per_block[np.arange(n_blocks), eta] += 1
            totals[int(eta.sum())] += 1
        return per_block, totals, dropped

    acc = np.zeros((n_blocks, cap + 1), dtype=np.int64)
    merged: Counter = Counter()
    dropped = 0
    for pb, t, d in _run_chunked(chunk, realizations, workers):
        acc += pb
        merged.update(t)
        dropped += d
    _check_drop_rate(dropped, realizations)
    kept = realizations - dropped
    pmfs = [
        EmpiricalPMF(
            {j: int(acc[p, j]) for j in range(cap + 1) if acc[p, j]}, kept, dropped
        )
        for p in range(n_blocks)
    ]
    return BlockRun(pmfs, EmpiricalPMF(dict(merged), kept, dropped))


def estimate_ids(
    spec: ModelSpec,
    box: LatticeBox,
    energy_grid,
    realizations: int,
    seed: int,
    *,
    workers: int = 1,
) -> list[tuple[float, float]]:
    """Per-site integrated counting function averaged over realizations.

    Returns (E, mean count of eigenvalues <= E divided by site count)
    for every grid energy; nondecreasing in E realization by realization.
    """
    grid = np.asarray(energy_grid, dtype=np.float64)
    if grid.ndim != 1 or len(grid) == 0:
        raise ValueError("energy grid must be a nonempty 1-d sequence")
    if np.any(np.diff(grid) < 0):
        raise ValueError("energy grid must be sorted ascending")
    asm = _Assembler(spec, box)

    def chunk(lo: int, hi: int):
        sums = np.zeros(len(grid), dtype=np.int64)
        dropped = 0
        for r in range(lo, hi):
            matrix = asm.matrix(asm.draw(seed, r))
            try:
                row = [count_leq(matrix, e) for e in grid]
            except PivotBreakdown:
                log.warning("realization %d dropped after pivot retries", r)
                dropped += 1
                continue
            sums += np.asarray(row, dtype=np.int64)
        return sums, dropped

    total = np.zeros(len(grid), dtype=np.int64)
    dropped = 0
    for s, d in _run_chunked(chunk, realizations, workers):
        total += s
        dropped += d
    _check_drop_rate(dropped, realizations)
    kept = realizations - dropped
    values = total / (kept * box.site_count)
    return [(float(e), float(v)) for e, v in zip(grid, values)]


def estimate_dos(
    ids_curve: list[tuple[float, float]], bandwidth: float
) -> list[tuple[float, float]]:
    """Central-difference density from an integrated-counting curve.

    n(E) = (N(E + h) - N(E - h)) / (2h) with h = bandwidth, N evaluated
    by linear interpolation of the curve; only energies where both E +/- h
    stay inside the curve's range are reported.
    """
    if len(ids_curve) < 2:
        raise ValueError("need at least two curve points")
    energies = np.array([e for e, _ in ids_curve], dtype=np.float64)
    values = np.array([v for _, v in ids_curve], dtype=np.float64)
    spacing = np.max(np.diff(energies))
    if bandwidth < spacing:
        raise BandwidthTooSmall(
            f"bandwidth {bandwidth} below grid spacing {spacing}"
        )
    out = []
    for e in energies:
        if e - bandwidth < energies[0] or e + bandwidth > energies[-1]:
            continue
        hi = float(np.interp(e + bandwidth, energies, values))
        lo = float(np.interp(e - bandwidth, energies, values))
        out.append((float(e), (hi - lo) / (2.0 * bandwidth)))
    return out


# ---------------------------------------------------------------------------
# scaling scans


@dataclass(frozen=True)
class ScalingRow:
    half_side: int
    interval_length: float
    value: float
    std_error: float
    realizations: int


@dataclass(frozen=True)
class ScalingTable:
    """Statistic values across (box size, window length) with errors."""

    statistic: str
    rows: tuple[ScalingRow, ...]
    seed: int

    def to_csv_text(self) -> str:
        lines = ["half_side,interval_length,value,std_error,realizations,seed"]
        for r in self.rows:
            lines.append(
                f"{r.half_side},{r.interval_length!r},{r.value!r},"
                f"{r.std_error!r},{r.realizations},{self.seed}"
            )
        return "\n".join(lines) + "\n"

    def to_record(self) -> dict:
        return {
            "statistic": self.statistic,
            "seed": self.seed,
            "rows": [
                {
                    "half_side": r.half_side,
                    "interval_length": r.interval_length,
                    "value": r.value,
                    "std_error": r.std_error,
                    "realizations": r.realizations,
                }
                for r in self.rows
            ],
        }


def _centered_window(center: float, length: float, box: LatticeBox) -> EnergyWindow:
    return EnergyWindow.for_box(center, (-0.5 * length, 0.5 * length), box)


def wegner_scan(
    spec: ModelSpec,
    boxes,
    interval_lengths,
    center: float,
    realizations: int,
    seed: int,
    *,
    workers: int = 1,
) -> ScalingTable:
    """Mean window count per (box, interval length): linear in length.

    The window is centered, I = [-len/2, len/2], and rescaled by each
    box's site count, so the mean stabilizes at density * length.
    """
    rows = []
    for box in boxes:
        for length in interval_lengths:
            pmf = run_xi(
                spec, box, _centered_window(center, length, box),
                realizations, seed, workers=workers,
            )
            rows.append(
                ScalingRow(
                    box.half_side, float(length), pmf.mean(),
                    pmf.std_error_of_mean(), pmf.realizations,
                )
            )
    return ScalingTable("mean_count", tuple(rows), seed)


def minami_scan(
    spec: ModelSpec,
    boxes,
    interval_lengths,
    center: float,
    realizations: int,
    seed: int,
    *,
    workers: int = 1,
) -> ScalingTable:
    """Excess-count probability P{count > rank} per (box, interval length).

    Quadratic in the interval length for small windows; the companion
    statistic to the linear mean scan.
    """
    rows = []
    for box in boxes:
        for length in interval_lengths:
            pmf = run_xi(
                spec, box, _centered_window(center, length, box),
                realizations, seed, workers=workers,
            )
            p = pmf.tail_probability(spec.rank)
            n = pmf.realizations
            stderr = math.sqrt(p * (1.0 - p) / (n - 1)) if n > 1 else 0.0
            rows.append(
                ScalingRow(box.half_side, float(length), p, stderr, n)
            )
    return ScalingTable("excess_probability", tuple(rows), seed)


# ---------------------------------------------------------------------------
# small statistics helpers


@dataclass(frozen=True)
class LineFit:
    slope: float
    intercept: float
    r_squared: float


def fit_line(xs, ys) -> LineFit:
    """Ordinary least squares with the standard R^2 goodness measure."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise ValueError("need two equal-length 1-d samples of size >= 2")
    xm, ym = x.mean(), y.mean()
    sxx = float(np.sum((x - xm) ** 2))
    if sxx == 0.0:
        raise ValueError("degenerate abscissa")
    slope = float(np.sum((x - xm) * (y - ym))) / sxx
    intercept = ym - slope * xm
    resid = y - (intercept + slope * x)
    syy = float(np.sum((y - ym) ** 2))
    r2 = 1.0 if syy == 0.0 else 1.0 - float(np.sum(resid**2)) / syy
    return LineFit(slope, intercept, r2)


def wilson_interval(hits: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """Binomial proportion interval that behaves sanely at the extremes."""
    if trials < 1:
        raise ValueError("need at least one trial")
    p = hits / trials
    denom = 1.0 + z * z / trials
    center = (p + z * z / (2 * trials)) / denom
    half = z * math.sqrt(p * (1 - p) / trials + z * z / (4 * trials**2)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


_DROP_RATE_LIMIT = 1e-4


def _check_drop_rate(dropped: int, attempted: int) -> None:
    if dropped == 0:
        return
    rate = dropped / attempted
    if rate >= _DROP_RATE_LIMIT:
        log.error(
            "dropped %d of %d realizations (rate %.2e exceeds %.0e)",
            dropped, attempted, rate, _DROP_RATE_LIMIT,
        )
