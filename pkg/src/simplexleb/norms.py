"""Refinement-controlled L1 quadrature of the simplex kernels.

All theorem-facing values are PLAIN torus integrals ||f||_(s) = int_{T^s} |f|;
the (2 pi)^{-s} normalization is reported alongside.  Quadrature is the
Riemann sum (2 pi / M)^s sum_t |f(x_t)| on successively doubled grids; every
polynomial grid is validated through the exact discrete Parseval identity

    (1 / prod M_j) sum_t |f(x_t)|^2 = sum_k |c_k|^2

before its L1 value is accepted (for the D kernel the right-hand side is the
lattice point count P).
"""

from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .core import (
    CoefficientField,
    DilationVector,
    build_lattice,
    fractional_coefficients,
    indicator_coefficients,
)
from .kernels import (
    DEFAULT_GRID_BUDGET_BYTES,
    DEFAULT_NU_MAX,
    GridSpec,
    _phase_adjusted,
    _geometric_sum,
    reduce_torus,
    slice_weight_matrix,
)

__all__ = [
    "NormResult",
    "NormConvergenceError",
    "FrakFValue",
    "IdentityReport",
    "l1_norm",
    "l1_norm_field",
    "verify_identity",
    "identity_residuals",
    "frak_f",
    "double_integral_ld2",
    "clear_norm_cache",
]

DEFAULT_TOL = 1e-3
DEFAULT_RHO = 4.0
DEFAULT_MAX_DOUBLINGS = 4
PARSEVAL_RTOL = 1e-8

_CHUNK_BYTES = 1 << 27

_norm_cache: dict = {}
_cache_lock = threading.Lock()


def clear_norm_cache():
    with _cache_lock:
        _norm_cache.clear()


class NormConvergenceError(RuntimeError):
    """Quadrature failed to converge within the doubling budget."""

    def __init__(self, message, history):
        super().__init__(message)
        self.history = history


@dataclass(frozen=True)
class NormResult:
    """An L1 norm with its grid, refinement history and error estimate."""

    value: float
    s: int
    grid: tuple | None
    history: tuple
    error_estimate: float
    converged: bool
    parseval: float | None = None
    tag: str = ""

    @property
    def normalized(self) -> float:
        """(2 pi)^{-s} times the plain integral."""
        return self.value / (2.0 * np.pi) ** self.s


@dataclass(frozen=True)
class FrakFValue:
    """Value of the correction functional with its per-term breakdown."""

    value: float
    breakdown: tuple
    t_nodes: int
    error_estimate: float
    flags: dict


@dataclass(frozen=True)
class IdentityReport:
    n: tuple
    nu_max: int
    residuals: np.ndarray = field(repr=False)
    tail_bounds: np.ndarray = field(repr=False)
    slack: float
    passed: bool
    median_residual: float
    worst: tuple


# ----------------------------------------------------------------- synthesis

def _phase_axes(c: np.ndarray, axes) -> np.ndarray:
    out = np.array(c, dtype=np.complex128, copy=True)
    for j in axes:
        shape = [1] * c.ndim
        shape[j] = c.shape[j]
        out *= (1.0 - 2.0 * (np.arange(c.shape[j]) % 2)).reshape(shape)
    return out


def _grid_abs_sums(c: np.ndarray, M: tuple, workers: int = 1,
                   budget_bytes: int = DEFAULT_GRID_BUDGET_BYTES):
    """(sum_t |f(x_t)|, sum_t |f(x_t)|^2) over the uniform grid M.

    Uses a full padded FFT when the grid fits the byte budget, otherwise
    synthesizes the trailing axes by FFT and sweeps the first axis in chunks
    through an explicit phase matrix (same values, bounded memory).
    """
    s = c.ndim
    size = int(np.prod(M))
    if size * 16 <= budget_bytes or s == 1:
        padded = np.zeros(M, dtype=np.complex128)
        padded[tuple(slice(0, e) for e in c.shape)] = _phase_adjusted(c)
        vals = scipy.fft.ifftn(padded, workers=workers, overwrite_x=True)
        a = np.abs(vals)
        return float(a.sum()) * size, float((a * a).sum()) * size * size

    k1 = c.shape[0]
    rest = M[1:]
    rest_size = int(np.prod(rest))
    b = np.zeros((k1,) + rest, dtype=np.complex128)
    b[(slice(None),) + tuple(slice(0, e) for e in c.shape[1:])] = \
        _phase_axes(c, range(1, s))
    b = scipy.fft.ifftn(b, axes=tuple(range(1, s)), workers=workers,
                        overwrite_x=True) * rest_size
    b = b.reshape(k1, rest_size)
    m1 = M[0]
    nodes = -np.pi + 2.0 * np.pi * np.arange(m1) / m1
    chunk = max(1, _CHUNK_BYTES // (rest_size * 16))
    sum_abs = 0.0
    sum_sq = 0.0
    for start in range(0, m1, chunk):
        xs = nodes[start:start + chunk]
        a_chunk = np.exp(1j * np.outer(xs, np.arange(k1)))
        v = a_chunk @ b
        av = np.abs(v)
        sum_abs += float(av.sum())
        sum_sq += float((av * av).sum())
    return sum_abs, sum_sq


def _check_parseval(sum_sq, size, coef_sq, tag):
    lhs = sum_sq / size
    denom = max(coef_sq, 1e-300)
    if abs(lhs - coef_sq) > PARSEVAL_RTOL * denom and coef_sq > 0.0:
        raise AssertionError(
            f"Parseval mismatch on grid for {tag}: {lhs} vs {coef_sq}"
        )


# -------------------------------------------------------------- field norms

def _refine(eval_fn, grid0: GridSpec, tol: float, max_doublings: int, tag: str):
    history = []
    prev = None
    grid = grid0
    for _ in range(max_doublings + 1):
        v = eval_fn(grid)
        history.append((grid.M, v))
        if prev is not None:
            delta = abs(v - prev)
            if delta <= tol * max(abs(v), 1e-9):
                return v, grid, tuple(history), delta
        prev = v
        grid = grid.doubled()
    raise NormConvergenceError(
        f"no convergence for {tag} after {max_doublings} doublings",
        tuple(history),
    )


def l1_norm_field(fld: CoefficientField, tol: float = DEFAULT_TOL,
                  rho: float = DEFAULT_RHO,
                  max_doublings: int = DEFAULT_MAX_DOUBLINGS,
                  workers: int = 1,
                  budget_bytes: int = DEFAULT_GRID_BUDGET_BYTES) -> NormResult:
    """Plain L1 norm of an arbitrary coefficient field by grid refinement."""
    if fld.s == 0:
        v = abs(complex(fld.weights))
        return NormResult(value=v, s=0, grid=None, history=((None, v),),
                          error_estimate=0.0, converged=True,
                          parseval=v * v, tag=fld.tag)
    coef_sq = float(np.vdot(fld.weights, fld.weights).real)
    s = fld.s

    def evaluate(grid: GridSpec) -> float:
        sum_abs, sum_sq = _grid_abs_sums(fld.weights, grid.M, workers,
                                         budget_bytes)
        _check_parseval(sum_sq, grid.size, coef_sq, fld.tag)
        return (2.0 * np.pi) ** s * sum_abs / grid.size

    grid0 = GridSpec(tuple(
        scipy.fft.next_fast_len(int(math.ceil(rho * e))) for e in fld.extents
    ))
    v, grid, history, delta = _refine(evaluate, grid0, tol, max_doublings,
                                      fld.tag)
    return NormResult(value=v, s=s, grid=grid.M, history=history,
                      error_estimate=delta, converged=True,
                      parseval=coef_sq, tag=fld.tag)


def _sliced_abs_sums(n: DilationVector, kind: str, M: tuple, nu_max: int,
                     workers: int):
    """Accumulated |f| and slice-wise Parseval check for S/Fcomposite/R."""
    lat = build_lattice(n, n.d - 1)
    lam = lat.lambda_next()
    extents = lat.extents
    flat = np.ravel_multi_index(tuple(lat.points.T), extents)
    m_prime = M[:-1]
    rest_size = int(np.prod(m_prime))
    m_d = M[-1]
    xd_nodes = -np.pi + 2.0 * np.pi * np.arange(m_d) / m_d
    chunk = max(1, _CHUNK_BYTES // (rest_size * 16))
    sum_abs = 0.0
    for start in range(0, m_d, chunk):
        xs = xd_nodes[start:start + chunk]
        w = slice_weight_matrix(kind, lam, xs, n.entries[-1], nu_max)
        boxes = np.zeros((len(xs),) + tuple(extents), dtype=np.complex128)
        boxes.reshape(len(xs), -1)[:, flat] = w
        boxes = _phase_axes(boxes, range(1, boxes.ndim))
        padded = np.zeros((len(xs),) + m_prime, dtype=np.complex128)
        padded[(slice(None),) + tuple(slice(0, e) for e in extents)] = boxes
        vals = scipy.fft.ifftn(padded, axes=tuple(range(1, padded.ndim)),
                               workers=workers, overwrite_x=True) * rest_size
        av = np.abs(vals.reshape(len(xs), -1))
        # Slices are trigonometric polynomials in x': exact Parseval per row.
        row_sq = (av * av).sum(axis=1) / rest_size
        coef_sq = (w * w.conj()).real.sum(axis=1)
        bad = np.abs(row_sq - coef_sq) > PARSEVAL_RTOL * np.maximum(coef_sq, 1e-300)
        if np.any(bad & (coef_sq > 0.0)):
            raise AssertionError(f"slice Parseval mismatch for {kind}")
        sum_abs += float(av.sum())
    return sum_abs


def l1_norm(kernel: str, n: DilationVector, tol: float = DEFAULT_TOL,
            rho: float = DEFAULT_RHO,
            max_doublings: int = DEFAULT_MAX_DOUBLINGS,
            nu_max: int = DEFAULT_NU_MAX, workers: int = 1,
            budget_bytes: int = DEFAULT_GRID_BUDGET_BYTES,
            use_cache: bool = True) -> NormResult:
    """Plain and normalized L1 norm of D, F, S, Fcomposite or R.

    Norm values are memoized per (kernel, n rounded to 12 significant digits,
    rho, tol): the correction functional and the sweeps re-request identical
    F norms heavily.
    """
    if kernel not in ("D", "F", "S", "Fcomposite", "R"):
        raise ValueError(f"unknown kernel {kernel!r}")
    key = (kernel, tuple(float(f"{v:.12g}") for v in n.entries), rho, tol,
           nu_max if kernel == "R" else None)
    if use_cache:
        with _cache_lock:
            if key in _norm_cache:
                return _norm_cache[key]
    result = _l1_norm_impl(kernel, n, tol, rho, max_doublings, nu_max,
                           workers, budget_bytes)
    if use_cache:
        with _cache_lock:
            _norm_cache[key] = result
    return result


def _l1_norm_impl(kernel, n, tol, rho, max_doublings, nu_max, workers,
                  budget_bytes):
    if kernel == "D":
        fld = indicator_coefficients(build_lattice(n))
        res = l1_norm_field(fld, tol, rho, max_doublings, workers, budget_bytes)
        return NormResult(value=res.value, s=res.s, grid=res.grid,
                          history=res.history, error_estimate=res.error_estimate,
                          converged=res.converged, parseval=res.parseval,
                          tag=f"D:{n.entries}")
    if kernel == "F":
        fld = fractional_coefficients(n)
        res = l1_norm_field(fld, tol, rho, max_doublings, workers, budget_bytes)
        return NormResult(value=res.value, s=res.s, grid=res.grid,
                          history=res.history, error_estimate=res.error_estimate,
                          converged=res.converged, parseval=res.parseval,
                          tag=f"F:{n.entries}")
    if n.d < 2:
        raise ValueError(f"{kernel} requires d >= 2")

    d = n.d

    def evaluate(grid: GridSpec) -> float:
        sum_abs = _sliced_abs_sums(n, kernel, grid.M, nu_max, workers)
        return (2.0 * np.pi) ** d * sum_abs / grid.size

    grid0 = GridSpec.for_kernel(n, d, rho)
    v, grid, history, delta = _refine(evaluate, grid0, tol, max_doublings,
                                      f"{kernel}:{n.entries}")
    return NormResult(value=v, s=d, grid=grid.M, history=history,
                      error_estimate=delta, converged=True,
                      tag=f"{kernel}:{n.entries}")


# --------------------------------------------------------- exact identity

def identity_residuals(n: DilationVector, points: np.ndarray, nu_max: int):
    """|D - (S - e^{i n_d x_d} F(x' - x_d m) + R)| and tail bounds, vectorized.

    The identity is exact; the residual is pure nu-series truncation plus
    roundoff, so it must not exceed the returned tail bound (up to roundoff
    proportional to the lattice size).
    """
    if n.d < 2:
        raise ValueError("the decomposition requires d >= 2")
    pts = reduce_torus(np.asarray(points, dtype=float))
    lat = build_lattice(n, n.d - 1)
    lam = lat.lambda_next()
    frac = lam % 1.0
    frac[frac >= 1.0] = 0.0
    xd = pts[:, -1]
    ph = np.exp(1j * (pts[:, :-1] @ lat.points.T))   # (N, L)
    d_vals = np.sum(ph * _geometric_sum(np.floor(lam) + 1.0, xd[:, None]),
                    axis=1)
    s_w = slice_weight_matrix("S", lam, xd, n.entries[-1], nu_max=1)
    s_vals = np.sum(ph * s_w, axis=1)
    f_vals = np.sum(ph * (frac * np.exp(1j * lam * xd[:, None])), axis=1)
    r_vals = np.sum(ph * 0.5 * (np.exp(1j * lam * xd[:, None]) + 1.0), axis=1)
    series = np.zeros_like(r_vals)
    chunk = max(1, (1 << 24) // max(1, len(lam) * len(xd)))
    for start in range(1, nu_max + 1, chunk):
        nu = np.arange(start, min(start + chunk, nu_max + 1), dtype=float)
        for sign in (1.0, -1.0):
            snu = sign * nu
            hh = 2.0 * np.pi * snu[None, :, None] + xd[:, None, None]
            term = np.sum((np.exp(1j * hh * lam) - 1.0) * ph[:, None, :],
                          axis=2)
            series += np.sum(term / (snu[None, :] * hh[:, :, 0]), axis=1)
    r_vals = r_vals - xd / (2.0 * np.pi * 1j) * series
    rhs = s_vals - f_vals + r_vals
    residuals = np.abs(d_vals - rhs)
    tails = 2.0 * lat.points.shape[0] * np.abs(xd) / (np.pi**2 * nu_max)
    return residuals, tails


def verify_identity(n: DilationVector, num_points: int = 100,
                    nu_max: int = DEFAULT_NU_MAX, seed: int = 0,
                    points: np.ndarray | None = None) -> IdentityReport:
    """Check the exact decomposition at seeded pseudo-random torus points."""
    lat = build_lattice(n)
    p_full = lat.count
    if points is None:
        rng = np.random.default_rng(seed)
        points = rng.uniform(-np.pi, np.pi, size=(num_points, n.d))
    residuals, tails = identity_residuals(n, points, nu_max)
    slack = 1e-9 * p_full
    ok = residuals <= tails + slack
    iworst = int(np.argmax(residuals - tails))
    return IdentityReport(
        n=n.entries, nu_max=nu_max, residuals=residuals, tail_bounds=tails,
        slack=slack, passed=bool(np.all(ok)),
        median_residual=float(np.median(residuals)),
        worst=(tuple(points[iworst]), float(residuals[iworst]),
               float(tails[iworst])),
    )


# ----------------------------------------------------- correction functional

def _f_norm(entries: tuple, tol, rho, workers) -> float:
    return l1_norm("F", DilationVector(entries), tol=tol, rho=rho,
                   workers=workers).value


def _delta_f_norm(tilde: tuple, n1: float, h: float, tol, rho,
                  workers) -> float:
    """||delta_{h, 1/tilde} F_{tilde, n1}|| over T^{len(tilde)}."""
    vec = DilationVector(tilde + (n1,))
    if vec.d == 1:
        # 0-dimensional convention: |e^{i h} - 1| {n1}.
        return abs(np.exp(1j * h) - 1.0) * (n1 % 1.0)
    fld = fractional_coefficients(vec)
    xi = np.array([1.0 / v for v in tilde])
    from .kernels import apply_delta
    return l1_norm_field(apply_delta(fld, h, xi), tol=tol, rho=rho,
                         workers=workers).value


def frak_f(k: int, n: DilationVector, t_nodes: int = 64,
           tol: float = DEFAULT_TOL, rho: float = DEFAULT_RHO,
           mu_range: str = "theorem", workers: int = 1) -> FrakFValue:
    """The correction functional aggregating F norms and shifted F norms.

    ``mu_range`` selects the printed range [n_{k-l}/n_1] ("theorem") or the
    halved variant [n_{k-l}/(2 n_1)] ("proof"); the choice is recorded in the
    output flags.  The t-integral over [-pi, pi] uses composite trapezoid
    with ``t_nodes`` nodes, refined once for the error estimate.
    """
    if k < 2 or k > n.d:
        raise ValueError(f"need 2 <= k <= d={n.d}")
    ent = n.entries[:k]
    if any(a > b for a, b in zip(ent, ent[1:])):
        raise ValueError("entries must be ascending")
    if mu_range not in ("theorem", "proof"):
        raise ValueError("mu_range must be 'theorem' or 'proof'")
    n1 = ent[0]
    breakdown = []
    total = 0.0
    err = 0.0
    for l in range(k - 1):
        vec1 = (n1,) * l + ent[: k - l]
        vec2 = (n1,) * l + ent[: k - l - 1] + (n1,)
        t1 = _f_norm(vec1, tol, rho, workers)
        t2 = _f_norm(vec2, tol, rho, workers)
        breakdown.append({"l": l, "term": "norm_diff", "value": t1 - t2,
                          "plus": vec1, "minus": vec2})
        total += t1 - t2
        denom = n1 if mu_range == "theorem" else 2.0 * n1
        mu_bound = int(ent[k - l - 1] / denom)
        tilde = (n1,) * l + ent[1: k - l - 1]
        if mu_bound < 1:
            continue
        base = _f_norm(tilde + (n1,), tol, rho, workers)
        if len(tilde) == 0 and n1 % 1.0 == 0.0:
            # 0-dimensional field is identically zero: every term vanishes.
            for mu_abs in range(1, mu_bound + 1):
                breakdown.append({"l": l, "term": "mu", "mu_abs": mu_abs,
                                  "value": 0.0})
            continue
        for mu_abs in range(1, mu_bound + 1):
            term = 0.0
            for mu in (mu_abs, -mu_abs):
                val, e = _t_integral(tilde, n1, mu, base, t_nodes, tol, rho,
                                     workers)
                term += val / mu_abs
                err += abs(e) / mu_abs
            breakdown.append({"l": l, "term": "mu", "mu_abs": mu_abs,
                              "value": term})
            total += term
    return FrakFValue(
        value=2.0 * np.pi * total,
        breakdown=tuple(breakdown),
        t_nodes=t_nodes,
        error_estimate=2.0 * np.pi * err,
        flags={"zero_dim_norm": "modulus", "mu_range": mu_range,
               "normalization": "plain"},
    )


def _t_integral(tilde, n1, mu, base_norm, t_nodes, tol, rho, workers):
    """int_{-pi}^{pi} (||delta_{n1 (t + 2 pi mu)} F|| - 2 ||F||) dt, trapezoid."""

    def integrand(ts):
        return np.array([
            _delta_f_norm(tilde, n1, n1 * (t + 2.0 * np.pi * mu), tol, rho,
                          workers) - 2.0 * base_norm
            for t in ts
        ])

    coarse_t = np.linspace(-np.pi, np.pi, t_nodes)
    coarse = np.trapezoid(integrand(coarse_t), coarse_t)
    fine_t = np.linspace(-np.pi, np.pi, 2 * t_nodes - 1)
    fine = np.trapezoid(integrand(fine_t), fine_t)
    return float(fine), float(fine - coarse)


# ---------------------------------------------------------- double integral

def double_integral_ld2(n: float, alpha: float, beta: float,
                        tol: float = DEFAULT_TOL, rho: float = DEFAULT_RHO,
                        max_doublings: int = DEFAULT_MAX_DOUBLINGS) -> float:
    """Tensor-grid quadrature of int int |e^{i(a y + b)} D_n(x - y) - D_n(x)|.

    On the uniform grid both x_t - y_u and x_t live on the same circulant set
    of nodes, so a single table of 1-D kernel values serves every pair.
    """
    if n <= 3:
        raise ValueError("requires n > 3")
    m_modes = int(n) + 1

    def evaluate(grid: GridSpec) -> float:
        m = grid.M[0]
        circ = _geometric_sum(m_modes, 2.0 * np.pi * np.arange(m) / m)
        nodes = -np.pi + 2.0 * np.pi * np.arange(m) / m
        dx = _geometric_sum(m_modes, nodes)
        total = 0.0
        for u in range(m):
            c_u = np.exp(1j * (alpha * nodes[u] + beta))
            total += float(np.abs(c_u * np.roll(circ, u) - dx).sum())
        return (2.0 * np.pi / m) ** 2 * total

    grid0 = GridSpec((scipy.fft.next_fast_len(int(math.ceil(rho * m_modes))),))
    v, _, _, _ = _refine(evaluate, grid0, tol, max_doublings, f"ld2:{n}")
    return v
