"""Eigenvalue counting for symmetric banded matrices via triangular inertia.

The workhorse is an unpivoted banded LDL^T sweep: by Sylvester's law the
number of negative pivots of H - E equals the number of eigenvalues
strictly below E, and differencing two shifts counts a half-open window
(left, right].  No eigenvector or even eigenvalue is ever formed, so a
single count costs one O(n b^2) factorization.

Unpivoted elimination can break down when a leading principal minor of
H - E is (numerically) singular.  For the random operators this package
targets that is a measure-zero event; the counting entry points retry
with tiny shifts of E and only then give up.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numba
import numpy as np
import scipy.linalg

from .lattice import SymBandMatrix

log = logging.getLogger(__name__)

# Pivot magnitudes below this are treated as exact breakdown.  Chosen at
# the very bottom of the normal double range so that only true singular
# minors trigger it, never mere ill-conditioning.
PIVOT_TOL = 1e-300

# Maximum order accepted by the dense reference solver.
DENSE_ORDER_CAP = 2048

_RETRY_STEPS = (1.0, -1.0, 2.0)


class PivotBreakdown(ArithmeticError):
    """Unpivoted factorization hit a vanishing pivot.

    Attributes:
        column: elimination column where the pivot vanished.
        shift: evaluation point E at which breakdown occurred.
    """

    def __init__(self, column: int, shift: float):
        super().__init__(f"zero pivot in column {column} at shift {shift!r}")
        self.column = column
        self.shift = shift


class OrderTooLarge(ValueError):
    """Matrix order exceeds the dense solver cap."""


@dataclass(frozen=True)
class Inertia:
    """Signs of the spectrum of a symmetric matrix: (n_neg, n_zero, n_pos)."""

    n_neg: int
    n_zero: int
    n_pos: int

    @property
    def order(self) -> int:
        return self.n_neg + self.n_zero + self.n_pos


@dataclass(frozen=True)
class EnergyWindow:
    """Half-open energy window (left, right] around a reference energy.

    The base interval is mapped through E -> center + E / scale; scale is
    the volume normalization that keeps the expected number of eigenvalues
    in the window of order one as boxes grow.
    """

    center: float
    base_left: float
    base_right: float
    scale: float = 1.0

    def __post_init__(self) -> None:
        if not self.base_left <= self.base_right:
            raise ValueError(
                f"interval [{self.base_left}, {self.base_right}] is reversed"
            )
        if not self.scale > 0:
            raise ValueError(f"scale must be positive, got {self.scale}")

    @property
    def left(self) -> float:
        return self.center + self.base_left / self.scale

    @property
    def right(self) -> float:
        return self.center + self.base_right / self.scale

    @property
    def base_length(self) -> float:
        return self.base_right - self.base_left

    @classmethod
    def for_box(cls, center, base_interval, box) -> EnergyWindow:
        """Window scaled by the site count of a box."""
        lo, hi = base_interval
        return cls(center, float(lo), float(hi), float(box.site_count))


@numba.njit(cache=True, nogil=True)
def _band_ldl_negcount(ab, piv_tol):  # pragma: no cover - compiled
    # In-place LDL^T on symmetric lower-band storage ab[k, j] = A[j+k, j].
    # Column j eliminates rows j+1 .. j+b: with pivot d = ab[0, j], the
    # multiplier for row j+p is l = ab[p, j] / d, and the Schur update
    # touches only entries (j+q, j+p) for p <= q <= b, which live at
    # ab[q-p, j+p].  Entries beyond the matrix edge are dead padding, so
    # clamping the loop at n-1-j keeps everything in bounds.
    # Returns (negative pivot count, breakdown column or -1).
    b1, n = ab.shape
    kb = b1 - 1
    neg = 0
    for j in range(n):
        d = ab[0, j]
        if abs(d) < piv_tol:
            return neg, j
        if d < 0.0:
            neg += 1
        kmax = min(kb, n - 1 - j)
        for p in range(1, kmax + 1):
            lp = ab[p, j] / d
            for q in range(p, kmax + 1):
                ab[q - p, j + p] -= ab[q, j] * lp
    return neg, -1


@numba.njit(cache=True, nogil=True)
def _band_ldl_negflags(ab, piv_tol, neg):  # pragma: no cover - compiled
    # Same sweep as _band_ldl_negcount but records per-column pivot signs
    # in neg (uint8), for callers that need counts resolved by index set.
    b1, n = ab.shape
    kb = b1 - 1
    for j in range(n):
        d = ab[0, j]
        if abs(d) < piv_tol:
            return j
        neg[j] = 1 if d < 0.0 else 0
        kmax = min(kb, n - 1 - j)
        for p in range(1, kmax + 1):
            lp = ab[p, j] / d
            for q in range(p, kmax + 1):
                ab[q - p, j + p] -= ab[q, j] * lp
    return -1


def ldl_inertia(matrix: SymBandMatrix, shift: float, piv_tol: float = PIVOT_TOL) -> Inertia:
    """Inertia of matrix - shift*I from one unpivoted banded LDL^T sweep.

    Pivots smaller than piv_tol in magnitude raise PivotBreakdown rather
    than being counted either way; with the default tolerance at the edge
    of the double range, n_zero is always reported as 0.

    Single attempt, no retries; see count_leq for the retrying wrapper.
    """
    work = matrix.data.copy()
    work[0] -= shift
    neg, bad = _band_ldl_negcount(work, piv_tol)
    if bad >= 0:
        raise PivotBreakdown(bad, shift)
    return Inertia(n_neg=neg, n_zero=0, n_pos=matrix.order - neg)


def _retry_shifts(energy: float):
    delta = 1e-12 * (1.0 + abs(energy))
    yield energy
    for step in _RETRY_STEPS:
        yield energy + step * delta


def count_leq(matrix: SymBandMatrix, energy: float) -> int:
    """Number of eigenvalues <= energy.

    Counts negative pivots of matrix - energy*I.  On pivot breakdown the
    shift is perturbed by 1e-12*(1+|energy|) in the order +d, -d, +2d
    before giving up; each retry is logged.  A breakdown means energy is
    (numerically) an eigenvalue of a leading submatrix, so a relative
    1e-12 nudge changes the count only in ties that were already at the
    resolution limit.
    """
    last: PivotBreakdown | None = None
    for attempt, e in enumerate(_retry_shifts(energy)):
        try:
            inertia = ldl_inertia(matrix, e)
        except PivotBreakdown as exc:
            last = exc
            log.warning(
                "pivot breakdown at shift %r (column %d, attempt %d)",
                e, exc.column, attempt,
            )
            continue
        return inertia.n_neg
    raise last


def count_in(matrix: SymBandMatrix, window: EnergyWindow) -> int:
    """Number of eigenvalues in the half-open window (left, right].

    Differencing two <= counts makes windows exactly additive: adjacent
    windows sharing an endpoint never double-count a tie.
    """
    return count_leq(matrix, window.right) - count_leq(matrix, window.left)


def negative_flags(matrix: SymBandMatrix, energy: float) -> np.ndarray:
    """Per-column negative-pivot flags of matrix - energy*I, with retries.

    When the matrix is block diagonal with respect to a partition of the
    index set, the flags summed over each part give that diagonal block's
    own eigenvalue count below energy, because elimination never crosses
    a structural zero boundary.  Returned as uint8, shape (order,).
    """
    flags = np.empty(matrix.order, dtype=np.uint8)
    last: PivotBreakdown | None = None
    for attempt, e in enumerate(_retry_shifts(energy)):
        work = matrix.data.copy()
        work[0] -= e
        bad = _band_ldl_negflags(work, PIVOT_TOL, flags)
        if bad >= 0:
            last = PivotBreakdown(bad, e)
            log.warning(
                "pivot breakdown at shift %r (column %d, attempt %d)",
                e, bad, attempt,
            )
            continue
        return flags
    raise last


def eigenvalues_dense(matrix: SymBandMatrix, order_cap: int = DENSE_ORDER_CAP) -> np.ndarray:
    """All eigenvalues, ascending, via the dense banded solver.

    Cross-check and small-system path only: refuses orders beyond
    order_cap so quadratic memory cannot sneak into production runs.
    """
    if matrix.order > order_cap:
        raise OrderTooLarge(
            f"order {matrix.order} exceeds dense cap {order_cap}"
        )
    # scipy wants upper band form: a_band[u + i - j, j] = A[i, j] for
    # i <= j; mirroring our lower storage row by row does exactly that.
    b = matrix.bandwidth
    n = matrix.order
    upper = np.zeros((b + 1, n), dtype=np.float64)
    for k in range(b + 1):
        upper[b - k, k:] = matrix.data[k, : n - k]
    return scipy.linalg.eig_banded(upper, lower=False, eigvals_only=True)
