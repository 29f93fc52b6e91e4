"""Compound Poisson laws on the nonnegative integers: evaluation and fitting.

A weight vector (p_1, ..., p_m) defines the law with characteristic
function exp(sum_j (e^{itj} - 1) p_j): a Poisson(sum p_j) number of jumps
with iid sizes in {1..m}.  Forward evaluation is the Panjer recursion;
the inverse problem (weights from an empirical histogram) is a small
bound-constrained least-squares fit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .engine import EmpiricalPMF


class DegenerateInput(ValueError):
    """Histogram too thin to support a fit."""


class ZeroMean(ValueError):
    """Dispersion index is undefined for a zero-mean sample."""


@dataclass(frozen=True)
class LevyWeights:
    """Nonnegative jump-size weights p_1..p_m; index j is jump size j."""

    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.weights) == 0:
            raise ValueError("need at least one weight")
        if any(not math.isfinite(p) or p < 0 for p in self.weights):
            raise ValueError(f"weights must be finite and >= 0: {self.weights}")

    @property
    def support_cap(self) -> int:
        return len(self.weights)

    @property
    def intensity(self) -> float:
        """Total jump rate sum_j p_j; P(0) = exp(-intensity)."""
        return float(sum(self.weights))

    @property
    def mean(self) -> float:
        """Mean of the law: sum_j j*p_j."""
        return float(sum((j + 1) * p for j, p in enumerate(self.weights)))

    def as_array(self) -> np.ndarray:
        return np.asarray(self.weights, dtype=np.float64)

    def to_record(self) -> dict:
        return {"weights": list(self.weights), "intensity": self.intensity}


def _panjer(weights: np.ndarray, n_max: int) -> np.ndarray:
    m = len(weights)
    out = np.zeros(n_max + 1, dtype=np.float64)
    out[0] = math.exp(-float(weights.sum()))
    jw = np.arange(1, m + 1, dtype=np.float64) * weights
    for n in range(1, n_max + 1):
        k = min(n, m)
        # sum_{j=1..k} j*p_j * P(n-j)
        out[n] = np.dot(jw[:k][::-1], out[n - k : n]) / n
    return out


def panjer_pmf(w: LevyWeights, n_max: int) -> np.ndarray:
    """Probabilities P(0..n_max) of the compound law, by recursion.

    P(0) = exp(-sum p_j), and n*P(n) = sum_{j<=min(n,m)} j*p_j*P(n-j).
    The returned vector omits only the tail beyond n_max, so its
    shortfall from 1 is the tail mass.
    """
    if n_max < w.support_cap:
        raise ValueError(f"n_max {n_max} below weight support {w.support_cap}")
    return _panjer(w.as_array(), n_max)


def characteristic_fn(w: LevyWeights, t) -> np.ndarray:
    """exp(sum_j (e^{itj} - 1) p_j) evaluated on an array of t values."""
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    j = np.arange(1, w.support_cap + 1, dtype=np.float64)
    exponent = (np.exp(1j * np.outer(t, j)) - 1.0) @ w.as_array()
    return np.exp(exponent)


def empirical_characteristic_fn(pmf: EmpiricalPMF, t) -> np.ndarray:
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    js = np.array(sorted(pmf.counts), dtype=np.float64)
    ws = np.array([pmf.counts[int(j)] for j in js], dtype=np.float64)
    return np.exp(1j * np.outer(t, js)) @ ws / pmf.realizations


def default_t_grid() -> np.ndarray:
    """64 equispaced points on [-pi, pi], one full period for integer laws."""
    return np.linspace(-math.pi, math.pi, 64)


def char_fn_distance(pmf: EmpiricalPMF, w: LevyWeights, t_grid=None) -> float:
    """Sup over the grid of |empirical char fn - model char fn|."""
    grid = default_t_grid() if t_grid is None else np.asarray(t_grid, dtype=np.float64)
    if grid.size == 0:
        raise ValueError("t_grid must be nonempty")
    return float(
        np.max(np.abs(empirical_characteristic_fn(pmf, grid) - characteristic_fn(w, grid)))
    )


def poisson_index(pmf: EmpiricalPMF) -> float:
    """Dispersion index variance/mean: 1 for Poisson, j for pure size-j jumps."""
    if pmf.realizations < 2:
        raise ValueError("need at least two realizations")
    mean = pmf.mean()
    if mean == 0.0:
        raise ZeroMean("all recorded counts are zero")
    return pmf.variance() / mean


def _cumulants(pmf: EmpiricalPMF, order: int) -> np.ndarray:
    # kappa_n = mu'_n - sum_{k=1}^{n-1} C(n-1, k-1) kappa_k mu'_{n-k}
    js = np.array(sorted(pmf.counts), dtype=np.float64)
    ps = np.array([pmf.counts[int(j)] for j in js], dtype=np.float64)
    ps /= pmf.realizations
    raw = np.array([np.dot(js**r, ps) for r in range(order + 1)])
    kappa = np.zeros(order + 1)
    for n in range(1, order + 1):
        kappa[n] = raw[n] - sum(
            math.comb(n - 1, k - 1) * kappa[k] * raw[n - k] for k in range(1, n)
        )
    return kappa[1:]


def _moment_start(pmf: EmpiricalPMF, m: int) -> np.ndarray:
    # for the true law, cumulant r equals sum_j j^r p_j: a Vandermonde solve
    # in the weights, clipped to the feasible orthant for a starting point
    kappa = _cumulants(pmf, m)
    j = np.arange(1, m + 1, dtype=np.float64)
    vander = np.power.outer(np.arange(1, m + 1, dtype=np.float64), j).T
    try:
        start = np.linalg.solve(vander, kappa)
    except np.linalg.LinAlgError:
        start = np.zeros(m)
    return np.clip(start, 0.0, None)


def fit_weights(pmf: EmpiricalPMF, m: int) -> LevyWeights:
    """Least-squares compound-Poisson weights on {1..m} for a histogram.

    Minimizes the squared distance between the Panjer forward map and the
    empirical probabilities over {0..n_cap}, n_cap = largest observed
    value + m.  Projected coordinate descent from the cumulant-matched
    start; every step is deterministic, so equal inputs give equal fits.

    Needs at least 1000 realizations.  A histogram entirely at zero has
    nothing to fit and returns all-zero weights.
    """
    if m < 1:
        raise ValueError(f"support cap must be >= 1, got {m}")
    if pmf.realizations < 1000:
        raise DegenerateInput(
            f"need >= 1000 realizations for a stable fit, got {pmf.realizations}"
        )
    if pmf.probability(0) == 1.0:
        return LevyWeights((0.0,) * m)

    n_cap = pmf.max_value + m
    emp = np.zeros(n_cap + 1, dtype=np.float64)
    for j, c in pmf.counts.items():
        emp[j] = c / pmf.realizations
    mean = pmf.mean()

    def objective(w: np.ndarray) -> float:
        return float(np.sum((_panjer(w, n_cap) - emp) ** 2))

    w = _moment_start(pmf, m)
    # p_j <= mean/j for the true law; the slack absorbs sampling noise
    bounds = 1.5 * mean / np.arange(1, m + 1) + 0.5
    w = np.minimum(w, bounds)
    best = objective(w)
    for _ in range(60):
        moved = 0.0
        for j in range(m):
            def coord(x: float) -> float:
                trial = w.copy()
                trial[j] = x
                return objective(trial)

            res = scipy.optimize.minimize_scalar(
                coord, bounds=(0.0, float(bounds[j])), method="bounded",
                options={"xatol": 1e-12},
            )
            if res.fun < best:
                moved = max(moved, abs(res.x - w[j]))
                w[j] = res.x
                best = res.fun
        if moved < 1e-11:
            break
    return LevyWeights(tuple(float(x) for x in w))


@dataclass(frozen=True)
class BlockSumFit:
    """Weights from summed per-block histograms, plus the leftover tail."""

    weights: LevyWeights
    tail_mass: float


def block_sum_estimator(per_block_pmfs, m: int) -> BlockSumFit:
    """Weights lambda_j = sum over blocks of P{block count = j}, j = 1..m.

    The tail mass sums P{block count > m}; it should shrink as boxes
    grow, and its size bounds how much the weights can be trusted.
    """
    if m < 1:
        raise ValueError(f"support cap must be >= 1, got {m}")
    lam = np.zeros(m, dtype=np.float64)
    tail = 0.0
    for pmf in per_block_pmfs:
        for j in range(1, m + 1):
            lam[j - 1] += pmf.probability(j)
        tail += pmf.tail_probability(m)
    return BlockSumFit(LevyWeights(tuple(float(x) for x in lam)), float(tail))


def fit_report(
    pmf: EmpiricalPMF, w: LevyWeights, t_grid=None, tail_mass: float | None = None
) -> dict:
    """JSON-ready summary of a fitted law against its source histogram."""
    try:
        index = poisson_index(pmf)
    except ZeroMean:
        index = None
    report = {
        "weights": list(w.weights),
        "intensity": w.intensity,
        "poisson_index": index,
        "char_fn_distance": char_fn_distance(pmf, w, t_grid),
    }
    if tail_mass is not None:
        report["tail_mass"] = tail_mass
    return report
