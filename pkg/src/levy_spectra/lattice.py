"""Finite lattice boxes, disorder laws, and banded Hamiltonian assembly.

The operators built here act on functions over a centred box in Z^d,
optionally with an internal C^m fibre attached to every site.  Matrices
are stored in symmetric lower-band form, which every downstream counting
routine consumes directly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class TilingError(ValueError):
    """Requested block geometry does not tile the box exactly."""


class DimensionMismatch(ValueError):
    """Vector or sample length is inconsistent with the model geometry."""


# ---------------------------------------------------------------------------
# geometry


@dataclass(frozen=True)
class LatticeBox:
    """Centred box {-L, ..., L}^dim with sites enumerated row-major.

    Row-major means the last coordinate axis varies fastest, so in one
    dimension the sites are simply -L, -L+1, ..., L in order.
    """

    dim: int
    half_side: int

    def __post_init__(self) -> None:
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2, or 3, got {self.dim}")
        if self.half_side < 0:
            raise ValueError(f"half_side must be >= 0, got {self.half_side}")

    @property
    def side(self) -> int:
        return 2 * self.half_side + 1

    @property
    def site_count(self) -> int:
        return self.side**self.dim

    def index_of(self, coord: tuple[int, ...]) -> int:
        if len(coord) != self.dim:
            raise DimensionMismatch(f"coordinate {coord} is not {self.dim}-dimensional")
        idx = 0
        for c in coord:
            if abs(c) > self.half_side:
                raise ValueError(f"coordinate {coord} lies outside the box")
            idx = idx * self.side + (c + self.half_side)
        return idx

    def coord_of(self, index: int) -> tuple[int, ...]:
        if not 0 <= index < self.site_count:
            raise ValueError(f"site index {index} out of range")
        rev = []
        for _ in range(self.dim):
            rev.append(index % self.side - self.half_side)
            index //= self.side
        return tuple(reversed(rev))


# ---------------------------------------------------------------------------
# disorder laws


class DisorderLaw:
    """Common interface for single-site coupling distributions."""

    def density(self, e: float) -> float:
        raise NotImplementedError

    def support(self) -> tuple[float, float]:
        raise NotImplementedError

    def ppf(self, u: np.ndarray) -> np.ndarray:
        """Inverse CDF, mapping uniform(0,1) draws to coupling values."""
        raise NotImplementedError

    def config_dict(self) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class UniformLaw(DisorderLaw):
    """Uniform density on [a, b]."""

    a: float = 0.0
    b: float = 1.0

    def __post_init__(self) -> None:
        if not self.b > self.a:
            raise ValueError(f"need a < b, got [{self.a}, {self.b}]")

    def density(self, e: float) -> float:
        return 1.0 / (self.b - self.a) if self.a <= e <= self.b else 0.0

    def support(self) -> tuple[float, float]:
        return (self.a, self.b)

    def ppf(self, u: np.ndarray) -> np.ndarray:
        return self.a + (self.b - self.a) * np.asarray(u, dtype=np.float64)

    def config_dict(self) -> dict:
        return {"kind": "uniform", "a": self.a, "b": self.b}


@dataclass(frozen=True)
class PiecewiseLinearLaw(DisorderLaw):
    """Density interpolated linearly between (position, height) knots.

    Knot heights must be nonnegative, positions strictly increasing, and
    the trapezoid areas must sum to one.
    """

    knots: tuple[tuple[float, float], ...]

    def __post_init__(self) -> None:
        xs = np.array([k[0] for k in self.knots], dtype=np.float64)
        hs = np.array([k[1] for k in self.knots], dtype=np.float64)
        if len(xs) < 2:
            raise ValueError("need at least two knots")
        if not np.all(np.diff(xs) > 0):
            raise ValueError("knot positions must be strictly increasing")
        if np.any(hs < 0):
            raise ValueError("knot heights must be nonnegative")
        area = float(np.trapezoid(hs, xs))
        if abs(area - 1.0) > 1e-9:
            raise ValueError(f"density must integrate to 1, got {area}")
        # per-segment cumulative mass, cached for the inverse CDF
        seg = 0.5 * (hs[1:] + hs[:-1]) * np.diff(xs)
        object.__setattr__(self, "_xs", xs)
        object.__setattr__(self, "_hs", hs)
        object.__setattr__(self, "_cum", np.concatenate(([0.0], np.cumsum(seg))))

    def density(self, e: float) -> float:
        xs, hs = self._xs, self._hs
        if e < xs[0] or e > xs[-1]:
            return 0.0
        return float(np.interp(e, xs, hs))

    def support(self) -> tuple[float, float]:
        return (float(self._xs[0]), float(self._xs[-1]))

    def ppf(self, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=np.float64)
        xs, hs, cum = self._xs, self._hs, self._cum
        seg = np.clip(np.searchsorted(cum, u, side="right") - 1, 0, len(xs) - 2)
        x0, h0 = xs[seg], hs[seg]
        slope = (hs[seg + 1] - hs[seg]) / (xs[seg + 1] - xs[seg])
        rem = u - cum[seg]
        # solve rem = h0*t + slope*t^2/2 for the offset t into the segment;
        # 2*rem/(h0 + sqrt(h0^2 + 2*slope*rem)) is the cancellation-free root
        # and degrades gracefully to rem/h0 when the slope vanishes
        disc = np.sqrt(np.maximum(h0 * h0 + 2.0 * slope * rem, 0.0))
        denom = h0 + disc
        t = np.divide(2.0 * rem, denom, out=np.zeros_like(rem), where=denom > 0)
        return x0 + t

    def config_dict(self) -> dict:
        return {"kind": "piecewise_linear", "knots": [list(k) for k in self.knots]}


def law_from_config(cfg: dict) -> DisorderLaw:
    kind = cfg.get("kind")
    if kind == "uniform":
        return UniformLaw(float(cfg["a"]), float(cfg["b"]))
    if kind == "piecewise_linear":
        return PiecewiseLinearLaw(tuple(tuple(map(float, k)) for k in cfg["knots"]))
    raise ValueError(f"unknown disorder law {kind!r}")


# ---------------------------------------------------------------------------
# model variants


class Variant(str, Enum):
    RANK_ONE_SITE = "rank_one_site"
    POLYMER_BLOCK = "polymer_block"
    MATRIX_VALUED = "matrix_valued"
    DIMER = "dimer"
    DIAGONAL = "diagonal"


@dataclass(frozen=True)
class ModelSpec:
    """Random operator family: hopping term plus i.i.d. projection couplings.

    ``rank`` is the common rank of the coupling projections.  For
    ``POLYMER_BLOCK`` the projections are indicators of cubic tiles of
    side ``block_side`` per axis, so the rank must equal
    ``block_side ** dim`` for whichever box the model is paired with.
    ``MATRIX_VALUED`` and ``DIAGONAL`` attach a C^rank fibre to every
    site and couple through site projector tensor identity; they share
    one implementation because the resulting matrices are identical.
    """

    variant: Variant
    rank: int = 1
    hopping: float = 0.0
    disorder: DisorderLaw = field(default_factory=UniformLaw)
    block_side: int | None = None

    def __post_init__(self) -> None:
        if self.rank < 1:
            raise ValueError(f"rank must be >= 1, got {self.rank}")
        v = self.variant
        if v is Variant.RANK_ONE_SITE and self.rank != 1:
            raise ValueError("rank_one_site has rank 1")
        if v is Variant.DIMER and self.rank != 2:
            raise ValueError("dimer has rank 2")
        if v is Variant.POLYMER_BLOCK:
            if self.block_side is None or self.block_side < 1:
                raise ValueError("polymer_block needs block_side >= 1")
        elif self.block_side is not None:
            raise ValueError("block_side only applies to polymer_block")

    @property
    def fibre_dim(self) -> int:
        """Internal dimension attached to each lattice site."""
        if self.variant in (Variant.MATRIX_VALUED, Variant.DIAGONAL):
            return self.rank
        return 1

    def validate_box(self, box: LatticeBox) -> None:
        if self.variant is Variant.DIMER and box.dim != 1:
            raise TilingError("dimer couplings are defined in one dimension only")
        if self.variant is Variant.POLYMER_BLOCK:
            if self.rank != self.block_side**box.dim:
                raise ValueError(
                    f"polymer rank {self.rank} != block_side^dim = "
                    f"{self.block_side}^{box.dim}"
                )
            if box.side % self.block_side != 0:
                raise TilingError(
                    f"block side {self.block_side} does not divide box side {box.side}"
                )

    def config_dict(self) -> dict:
        cfg = {
            "variant": self.variant.value,
            "rank": self.rank,
            "hopping": self.hopping,
            "disorder": self.disorder.config_dict(),
        }
        if self.block_side is not None:
            cfg["block_side"] = self.block_side
        return cfg


def model_from_config(cfg: dict) -> ModelSpec:
    return ModelSpec(
        variant=Variant(cfg["variant"]),
        rank=int(cfg.get("rank", 1)),
        hopping=float(cfg.get("hopping", 0.0)),
        disorder=law_from_config(cfg["disorder"]),
        block_side=int(cfg["block_side"]) if "block_side" in cfg else None,
    )


# ---------------------------------------------------------------------------
# index bookkeeping shared by assembly, sampling, and block reductions


def effective_sides(spec: ModelSpec, box: LatticeBox) -> tuple[int, ...]:
    """Per-axis site counts after variant-specific padding.

    Dimer couplings pair consecutive sites, so an odd box is extended by
    one site at the +L end to make the pairing exact.
    """
    spec.validate_box(box)
    sides = [box.side] * box.dim
    if spec.variant is Variant.DIMER and sides[-1] % 2 == 1:
        sides[-1] += 1
    return tuple(sides)


def matrix_order(spec: ModelSpec, box: LatticeBox) -> int:
    return math.prod(effective_sides(spec, box)) * spec.fibre_dim


def group_count(spec: ModelSpec, box: LatticeBox) -> int:
    """Number of independent coupling projections on the box."""
    return matrix_order(spec, box) // spec.rank


def owner_map(spec: ModelSpec, box: LatticeBox) -> np.ndarray:
    """Map matrix row index -> index of the projection that acts on it.

    All coupling projections are diagonal in the assembly basis, so a
    single int array describes them completely.  Groups are numbered in
    row-major order of their anchor coordinate.
    """
    sides = effective_sides(spec, box)
    n_sites = math.prod(sides)
    m = spec.fibre_dim
    v = spec.variant
    if v is Variant.RANK_ONE_SITE:
        return np.arange(n_sites, dtype=np.int64)
    if v in (Variant.MATRIX_VALUED, Variant.DIAGONAL):
        return np.repeat(np.arange(n_sites, dtype=np.int64), m)
    if v is Variant.DIMER:
        return np.arange(n_sites, dtype=np.int64) // 2
    # polymer: block id from per-axis tile coordinates, row-major
    k = spec.block_side
    site = np.arange(n_sites, dtype=np.int64)
    tiles = []
    for s in reversed(sides):
        tiles.append((site % s) // k)
        site //= s
    tiles.reverse()
    block = np.zeros(n_sites, dtype=np.int64)
    for t, s in zip(tiles, sides):
        block = block * (s // k) + t
    return block


def projection_blocks(spec: ModelSpec, box: LatticeBox) -> list[np.ndarray]:
    """Index sets of the coupling projections, ordered by group id."""
    owner = owner_map(spec, box)
    order = np.argsort(owner, kind="stable")
    cuts = np.searchsorted(owner[order], np.arange(1, group_count(spec, box)))
    return [np.ascontiguousarray(part) for part in np.split(order, cuts)]


# ---------------------------------------------------------------------------
# disorder sampling


_MAX_SEED = 2**64


@dataclass(frozen=True)
class DisorderSample:
    """One realization of the coupling vector, tagged with its seed path."""

    values: np.ndarray
    seed: int
    realization: int


def sample_disorder(
    spec: ModelSpec, box: LatticeBox, seed: int, realization: int
) -> DisorderSample:
    """Draw the coupling vector for one realization.

    Counter-based generator keyed on (seed, realization), so any
    realization can be regenerated in isolation and results do not care
    how work was split across workers.
    """
    if not 0 <= seed < _MAX_SEED:
        raise ValueError(f"seed must be in [0, 2^64), got {seed}")
    if not 0 <= realization < _MAX_SEED:
        raise ValueError(f"realization must be in [0, 2^64), got {realization}")
    rng = np.random.Generator(np.random.Philox(key=(seed << 64) | realization))
    u = rng.random(group_count(spec, box))
    return DisorderSample(values=spec.disorder.ppf(u), seed=seed, realization=realization)


# ---------------------------------------------------------------------------
# banded symmetric storage


@dataclass
class SymBandMatrix:
    """Real symmetric matrix in lower-band storage.

    ``data[k, j]`` holds entry (j + k, j); row 0 is the diagonal.
    Entries with j + k >= order are ignored padding.  Symmetry is
    structural: only the lower triangle is ever stored.
    """

    data: np.ndarray

    def __post_init__(self) -> None:
        self.data = np.ascontiguousarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise ValueError("band storage must be 2-d")

    @classmethod
    def zeros(cls, order: int, bandwidth: int) -> SymBandMatrix:
        return cls(np.zeros((bandwidth + 1, order), dtype=np.float64))

    @classmethod
    def from_dense(cls, a: np.ndarray) -> SymBandMatrix:
        a = np.asarray(a, dtype=np.float64)
        n = a.shape[0]
        if a.shape != (n, n):
            raise ValueError("dense input must be square")
        if not np.allclose(a, a.T, rtol=0.0, atol=1e-12):
            raise ValueError("dense input must be symmetric")
        b = 0
        for k in range(1, n):
            if np.any(np.diag(a, -k) != 0.0):
                b = k
        out = cls.zeros(n, b)
        for k in range(b + 1):
            out.data[k, : n - k] = np.diag(a, -k)
        return out

    @property
    def order(self) -> int:
        return self.data.shape[1]

    @property
    def bandwidth(self) -> int:
        return self.data.shape[0] - 1

    @property
    def diagonal(self) -> np.ndarray:
        return self.data[0]

    def to_dense(self) -> np.ndarray:
        n = self.order
        a = np.zeros((n, n), dtype=np.float64)
        for k in range(self.bandwidth + 1):
            idx = np.arange(n - k)
            a[idx + k, idx] = self.data[k, : n - k]
            a[idx, idx + k] = self.data[k, : n - k]
        return a

    def copy(self) -> SymBandMatrix:
        return SymBandMatrix(self.data.copy())

    def add_projection(self, indices: np.ndarray, coupling: float) -> SymBandMatrix:
        """Return a copy of self + coupling * (diagonal projection on indices)."""
        out = self.copy()
        out.data[0, indices] += coupling
        return out


# ---------------------------------------------------------------------------
# Hamiltonian assembly


def hopping_offsets(spec: ModelSpec, box: LatticeBox) -> tuple[int, ...]:
    """Band offsets carrying hopping entries, one per lattice axis."""
    sides = effective_sides(spec, box)
    m = spec.fibre_dim
    offs = []
    stride = 1
    for s in reversed(sides):
        offs.append(stride * m)
        stride *= s
    return tuple(reversed(offs))


def build_hamiltonian(
    spec: ModelSpec,
    box: LatticeBox,
    omega: DisorderSample | np.ndarray,
) -> SymBandMatrix:
    """Assemble the box-restricted operator for one coupling vector.

    The kinetic part is the adjacency form of the discrete Laplacian
    (zero diagonal, unit nearest-neighbour entries) scaled by the
    hopping constant, with open boundary: rows and columns outside the
    box are simply dropped.  The random part adds omega[g] on the
    diagonal positions of projection g.
    """
    values = omega.values if isinstance(omega, DisorderSample) else np.asarray(omega)
    n_groups = group_count(spec, box)
    if values.shape != (n_groups,):
        raise DimensionMismatch(
            f"expected {n_groups} couplings, got shape {values.shape}"
        )

    sides = effective_sides(spec, box)
    m = spec.fibre_dim
    n_sites = math.prod(sides)
    n = n_sites * m
    h = spec.hopping

    bandwidth = max(hopping_offsets(spec, box)) if h != 0.0 else 0
    mat = SymBandMatrix.zeros(n, bandwidth)
    mat.data[0] = values[owner_map(spec, box)]

    if h != 0.0:
        site = np.arange(n_sites, dtype=np.int64)
        stride = 1
        for s in reversed(sides):
            # sites with a +1 neighbour along this axis
            has_next = (site // stride) % s < s - 1
            cols = (site[has_next][:, None] * m + np.arange(m)[None, :]).ravel()
            mat.data[stride * m, cols] = h
            stride *= s
    return mat
