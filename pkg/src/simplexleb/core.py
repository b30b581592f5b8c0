"""Simplex lattice core: dilation vectors, nested summation bounds, lattices,
and the coefficient fields consumed by the kernel evaluators.

The lattice of a dilation vector n = (n_1, ..., n_d) consists of the integer
points k >= 0 with sum_j k_j / n_j <= 1, enumerated through the nested bounds
k_1 <= [L_1], k_2 <= [L_2(k_1)], ... where L_1 = n_1 and
L_s(xi) = n_s - (m^(s-1), xi) with m^(s) = (n_{s+1}/n_1, ..., n_{s+1}/n_s).
Entries of n need not be integers; floors enter only through the bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "DilationVector",
    "LambdaEvaluator",
    "SimplexLattice",
    "CoefficientField",
    "ResourceLimitError",
    "build_lattice",
    "indicator_coefficients",
    "fractional_coefficients",
    "slice_coefficients",
    "DEFAULT_BOX_BUDGET",
    "SINGULARITY_THRESHOLD",
]

# Dense coefficient boxes are capped at this many complex entries.
DEFAULT_BOX_BUDGET = 2**31

# Below this |x_d| the S-slice weight uses the limit branch
# L + i L^2 x_d / 2 (relative error < 1e-15 there).
SINGULARITY_THRESHOLD = 1e-8


class ResourceLimitError(RuntimeError):
    """A lattice or coefficient box would exceed the configured memory budget."""

    def __init__(self, message, estimate=None):
        super().__init__(message)
        self.estimate = estimate


@dataclass(frozen=True)
class DilationVector:
    """Positive real dilation parameters (n_1, ..., n_d) of the simplex."""

    entries: tuple

    def __post_init__(self):
        ent = tuple(float(v) for v in self.entries)
        if not ent:
            raise ValueError("dilation vector must have at least one entry")
        for v in ent:
            if not math.isfinite(v) or v <= 0.0:
                raise ValueError(f"dilation entries must be finite and positive, got {v}")
        object.__setattr__(self, "entries", ent)

    @property
    def d(self) -> int:
        return len(self.entries)

    @property
    def sorted_ascending(self) -> bool:
        """n_1 <= ... <= n_d; required by the asymptotic predictors only."""
        return all(a <= b for a, b in zip(self.entries, self.entries[1:]))

    def ratios(self, s: int) -> tuple:
        """The tuple m^(s) = (n_{s+1}/n_1, ..., n_{s+1}/n_s)."""
        if not 1 <= s < self.d:
            raise ValueError(f"ratios defined for 1 <= s < d, got s={s}")
        nxt = self.entries[s]
        return tuple(nxt / self.entries[j] for j in range(s))

    def head(self, s: int) -> "DilationVector":
        """First s entries as a dilation vector."""
        return DilationVector(self.entries[:s])


@dataclass(frozen=True)
class LambdaEvaluator:
    """Evaluates the nested affine bounds L_s of a dilation vector."""

    n: DilationVector

    def value(self, s: int, xi) -> float:
        """L_1 = n_1;  L_s(xi) = n_s - (m^(s-1), xi) for s >= 2."""
        ent = self.n.entries
        if s == 1:
            return ent[0]
        xi = np.asarray(xi, dtype=float)
        if xi.shape[-1] != s - 1:
            raise ValueError(f"expected {s - 1} coordinates, got {xi.shape[-1]}")
        m = np.array(self.n.ratios(s - 1))
        return ent[s - 1] - float(xi @ m)

    def values(self, s: int, points: np.ndarray) -> np.ndarray:
        """Vectorized L_s over an array of points with s-1 columns."""
        ent = self.n.entries
        points = np.asarray(points, dtype=float)
        if s == 1:
            return np.full(points.shape[0], ent[0])
        m = np.array(self.n.ratios(s - 1))
        return ent[s - 1] - points[:, : s - 1] @ m


@dataclass(frozen=True)
class SimplexLattice:
    """Integer points of the nested-bound lattice, in lexicographic order.

    ``points`` has shape (P, s).  When ``s < d`` the values L_{s+1}(k) are
    available through :meth:`lambda_next`, which is what the fractional and
    slice coefficient builders consume.
    """

    n: DilationVector
    s: int
    points: np.ndarray = field(repr=False)

    @property
    def count(self) -> int:
        return self.points.shape[0]

    @cached_property
    def extents(self) -> tuple:
        """Per-axis box extents (max k_j) + 1."""
        return tuple(int(v) + 1 for v in self.points.max(axis=0))

    def lambda_next(self) -> np.ndarray:
        """L_{s+1} evaluated at every lattice point (requires s < d)."""
        if self.s >= self.n.d:
            raise ValueError("lattice already spans the full dimension")
        return LambdaEvaluator(self.n).values(self.s + 1, self.points)

    def contains_all(self) -> bool:
        """Membership predicate sum_j k_j / n_j <= 1 for every stored point."""
        nj = np.array(self.n.entries[: self.s])
        return bool(np.all(self.points @ (1.0 / nj) <= 1.0 + 1e-12))


@dataclass(frozen=True)
class CoefficientField:
    """Dense complex weights on an integer box, feeding FFT synthesis.

    A 0-dimensional field (shape ()) is the constant-kernel convention: the
    kernel is the complex number ``weights[()]`` and its norm is its modulus.
    """

    weights: np.ndarray = field(repr=False)
    tag: str = ""

    @property
    def s(self) -> int:
        return self.weights.ndim

    @property
    def extents(self) -> tuple:
        return self.weights.shape


def _check_box_budget(extents, budget):
    size = 1
    for e in extents:
        size *= e
    if size > budget:
        raise ResourceLimitError(
            f"coefficient box of {size} complex entries exceeds budget {budget}",
            estimate=size,
        )


def build_lattice(n: DilationVector, s: int | None = None,
                  budget: int = DEFAULT_BOX_BUDGET) -> SimplexLattice:
    """Enumerate the nested-bound lattice over the first s coordinates.

    Enumeration is lexicographic and fully vectorized: axis by axis, every
    existing point is extended by k_s = 0 .. [L_s(point)].
    """
    if s is None:
        s = n.d
    if not 1 <= s <= n.d:
        raise ValueError(f"need 1 <= s <= d={n.d}, got s={s}")
    # Upper estimate of the point count via the bounding box.
    est = 1
    for v in n.entries[:s]:
        est *= int(v) + 1
    if est > budget and _volume_estimate(n.entries[:s]) > budget:
        raise ResourceLimitError(
            f"lattice point estimate {est} exceeds budget {budget}", estimate=est
        )
    lam = LambdaEvaluator(n)
    points = np.zeros((1, 0), dtype=np.int64)
    for axis in range(1, s + 1):
        bounds = np.floor(lam.values(axis, points)).astype(np.int64)
        # bounds >= 0 along the lattice: L_axis >= 0 whenever the previous
        # coordinates satisfy the membership inequality.
        reps = bounds + 1
        total = int(reps.sum())
        if total > budget:
            raise ResourceLimitError(
                f"lattice would hold {total}+ points, budget {budget}",
                estimate=total,
            )
        base = np.repeat(points, reps, axis=0)
        offsets = np.repeat(np.cumsum(reps) - reps, reps)
        new_col = np.arange(total, dtype=np.int64) - offsets
        points = np.column_stack([base, new_col])
    return SimplexLattice(n=n, s=s, points=points)


def _volume_estimate(entries) -> float:
    prod = 1.0
    for v in entries:
        prod *= v + 1.0
    return prod / math.factorial(len(entries))


def indicator_coefficients(lattice: SimplexLattice,
                           budget: int = DEFAULT_BOX_BUDGET) -> CoefficientField:
    """Weight 1 at every lattice point, 0 elsewhere in the bounding box."""
    extents = lattice.extents
    _check_box_budget(extents, budget)
    w = np.zeros(extents, dtype=np.complex128)
    flat = np.ravel_multi_index(tuple(lattice.points.T), extents)
    w.ravel()[flat] = 1.0
    return CoefficientField(weights=w, tag=f"indicator:{lattice.n.entries}")


def _scatter(lattice: SimplexLattice, values: np.ndarray, tag: str,
             budget: int) -> CoefficientField:
    extents = lattice.extents
    _check_box_budget(extents, budget)
    w = np.zeros(extents, dtype=np.complex128)
    flat = np.ravel_multi_index(tuple(lattice.points.T), extents)
    w.ravel()[flat] = values
    return CoefficientField(weights=w, tag=tag)


def fractional_coefficients(n: DilationVector,
                            budget: int = DEFAULT_BOX_BUDGET) -> CoefficientField:
    """The (d-1)-dimensional field with weight {L_d(k')} at each lattice point.

    For d = 1 the empty index set convention applies: the field is the
    0-dimensional constant {n_1}.
    """
    if n.d == 1:
        return CoefficientField(
            weights=np.array(n.entries[0] % 1.0, dtype=np.complex128),
            tag=f"fractional:{n.entries}",
        )
    lat = build_lattice(n, n.d - 1, budget=budget)
    frac = lat.lambda_next() % 1.0
    # Guard against the float artifact {x} -> 1.0 for x just below an integer.
    frac[frac >= 1.0] = 0.0
    return _scatter(lat, frac, f"fractional:{n.entries}", budget)


def slice_coefficients(n: DilationVector, kernel: str, x_d: float,
                       h: float | None = None, limit_branch: bool = True,
                       budget: int = DEFAULT_BOX_BUDGET) -> CoefficientField:
    """Fourier coefficients of the x_d-slice of the requested kernel.

    kernel 'S':          weight (e^{i L x_d} - 1) / (i x_d), with the removable
                         singularity at x_d = 0 evaluated via the limit branch.
    kernel 'Fcomposite': weight {L} e^{i L x_d}, the slice of
                         e^{i n_d x_d} F(x' - x_d m^(d-1)).
    kernel 'Rdelta':     weight e^{i L h / n_d} - 1 for an explicit shift h,
                         the difference-operator building block of R.
    """
    if n.d < 2:
        raise ValueError("slice coefficients require d >= 2")
    if not math.isfinite(x_d):
        raise ValueError("x_d must be finite")
    lat = build_lattice(n, n.d - 1, budget=budget)
    lam = lat.lambda_next()
    if kernel == "S":
        w = _s_slice_weights(lam, x_d, limit_branch)
    elif kernel == "Fcomposite":
        frac = lam % 1.0
        frac[frac >= 1.0] = 0.0
        w = frac * np.exp(1j * lam * x_d)
    elif kernel == "Rdelta":
        if h is None:
            raise ValueError("Rdelta slice requires the shift h")
        w = np.exp(1j * lam * (h / n.entries[-1])) - 1.0
    else:
        raise ValueError(f"unknown slice kernel {kernel!r}")
    return _scatter(lat, w, f"{kernel}-slice:{n.entries}@{x_d}", budget)


def _s_slice_weights(lam: np.ndarray, x_d: float, limit_branch: bool) -> np.ndarray:
    if abs(x_d) < SINGULARITY_THRESHOLD:
        if not limit_branch:
            raise ValueError(
                f"|x_d|={abs(x_d)} below singularity threshold; "
                "pass limit_branch=True for the limit value"
            )
        return lam + 0.5j * lam * lam * x_d
    return (np.exp(1j * lam * x_d) - 1.0) / (1j * x_d)
