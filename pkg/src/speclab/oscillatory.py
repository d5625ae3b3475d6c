"""Weighted oscillatory sums over Pruefer angles and the weighted Hilbert space.

All phases are taken in units of pi theta: ``cos 4theta`` in the sums below is
evaluated as ``cos(4 pi theta)`` and ``sin 2theta`` as ``sin(2 pi theta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dynamics import EnergyPoint, prufer_trace
from .potentials import Potential

RESONANCE_GUARD = 0.05


@dataclass
class WeightedSequence:
    """Real sequence u(1..L) in the space with <u, v> = sum u(n) v(n) n."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if not np.all(np.isfinite(self.values)):
            raise ValueError("sequence contains non-finite values")

    def __len__(self):
        return self.values.size

    def norm(self) -> float:
        return math.sqrt(weighted_inner_product(self, self))

    def normalized(self) -> "WeightedSequence":
        return WeightedSequence(self.values / self.norm())


@dataclass
class SumDiagnostic:
    L: int
    value: float
    running_max: float
    running_min: float
    drift_slope: float
    checkpoints: np.ndarray = field(repr=False, default=None)
    checkpoint_values: np.ndarray = field(repr=False, default=None)
    checkpoint_max: np.ndarray = field(repr=False, default=None)
    checkpoint_min: np.ndarray = field(repr=False, default=None)


def checkpoint_grid(L: int, start: int = 100) -> np.ndarray:
    """Horizons 10^2, 10^2.25, ... up to L (L itself always included)."""
    if L <= start:
        return np.array([L])
    e = np.arange(math.log10(start), math.log10(L), 0.25)
    grid = np.unique(np.round(10.0 ** e).astype(np.int64))
    return np.unique(np.append(grid[grid < L], L))


def drift_slope(horizons, values) -> float:
    """Least-squares slope of ``values`` against ln(horizon)."""
    x = np.log(np.asarray(horizons, dtype=float))
    y = np.asarray(values, dtype=float)
    if x.size < 2:
        return 0.0
    return float(np.polyfit(x, y, 1)[0])


def _diagnostic(terms: np.ndarray, fit_from: int) -> SumDiagnostic:
    partial = np.cumsum(terms)
    L = terms.size
    cps = checkpoint_grid(L)
    vals = partial[cps - 1]
    use = cps >= min(fit_from, L)
    return SumDiagnostic(L, float(partial[-1]), float(partial.max()),
                         float(partial.min()), drift_slope(cps[use], vals[use]),
                         cps, vals, np.maximum.accumulate(partial)[cps - 1],
                         np.minimum.accumulate(partial)[cps - 1])


def _angles(p: Potential, k: float, L: int) -> np.ndarray:
    # theta(1..L)
    return prufer_trace(p, EnergyPoint.from_k(k), L).theta[1: L + 1]


def weighted_cos4_sum(p: Potential, ep: EnergyPoint, L: int, fit_from: int = 1000) -> SumDiagnostic:
    """sum_{n=1}^{L} cos(4 pi theta(n, k)) / n with checkpoint diagnostics."""
    if L < 1:
        raise ValueError("L must be >= 1")
    th = _angles(p, ep.k, L)
    n = np.arange(1, L + 1, dtype=float)
    return _diagnostic(np.cos(4 * np.pi * np.mod(th, 1.0)) / n, fit_from)


def harmonic_control(L: int, fit_from: int = 1000) -> SumDiagnostic:
    """The same estimator applied to sum 1/n, whose slope in ln L is 1."""
    return _diagnostic(1.0 / np.arange(1, L + 1, dtype=float), fit_from)


def cross_sin_sum(p: Potential, k1: float, k2: float, L: int,
                  fit_from: int = 1000, return_split: bool = False):
    """sum_{n=1}^{L} sin(2 pi theta(n,k1)) sin(2 pi theta(n,k2)) / n.

    With ``return_split`` also returns the value assembled from the two
    cosine sums, (sum cos 2pi(th1-th2)/n - sum cos 2pi(th1+th2)/n) / 2.
    """
    if k1 == k2:
        raise ValueError("k1 and k2 must differ")
    for k in (k1, k2):
        if not 0.0 < k < 0.5:
            raise ValueError("quasimomenta must lie in (0, 1/2)")
    if L < 1:
        raise ValueError("L must be >= 1")
    t1 = np.mod(_angles(p, k1, L), 1.0)
    t2 = np.mod(_angles(p, k2, L), 1.0)
    n = np.arange(1, L + 1, dtype=float)
    diag = _diagnostic(np.sin(2 * np.pi * t1) * np.sin(2 * np.pi * t2) / n, fit_from)
    if not return_split:
        return diag
    minus = math.fsum(np.cos(2 * np.pi * (t1 - t2)) / n)
    plus = math.fsum(np.cos(2 * np.pi * (t1 + t2)) / n)
    return diag, 0.5 * (minus - plus)


def log_scaling_fit(gaps, values):
    """Affine fit of |value| against x = ln(1/gap).

    Returns a dict with the least-squares line (intercept, slope), the
    smallest C such that |value| <= C x + C at every gap, and the largest
    fit residual relative to that envelope.
    """
    x = np.log(1.0 / np.asarray(gaps, dtype=float))
    y = np.abs(np.asarray(values, dtype=float))
    slope, intercept = np.polyfit(x, y, 1)
    C = float(np.max(y / (x + 1.0)))
    env = C * (x + 1.0)
    resid = np.abs(y - (intercept + slope * x))
    return {"intercept": float(intercept), "slope": float(slope), "C": C,
            "max_residual_ratio": float(np.max(resid / env))}


def weighted_inner_product(u, v) -> float:
    """<u, v> = sum_{n=1}^{L} u(n) v(n) n."""
    a = u.values if isinstance(u, WeightedSequence) else np.asarray(u, dtype=float)
    b = v.values if isinstance(v, WeightedSequence) else np.asarray(v, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    n = np.arange(1, a.size + 1, dtype=float)
    return math.fsum(a * b * n)


def normalization_constant(p: Potential, ep: EnergyPoint, L: int, parts: bool = False):
    """A = sum_{n=1}^{L} sin^2(2 pi theta(n, k)) / n.

    ``parts=True`` also returns the harmonic and cosine sums with
    A = H/2 - C4/2.
    """
    if L < 2:
        raise ValueError("L must be >= 2")
    th = np.mod(_angles(p, ep.k, L), 1.0)
    n = np.arange(1, L + 1, dtype=float)
    A = math.fsum(np.sin(2 * np.pi * th) ** 2 / n)
    if not parts:
        return A
    return A, math.fsum(1.0 / n), math.fsum(np.cos(4 * np.pi * th) / n)


def phase_unit_vector(p: Potential, ep: EnergyPoint, L: int) -> WeightedSequence:
    """e(n) = sin(2 pi theta(n)) / (n sqrt(A)), a unit vector of the weighted space."""
    th = np.mod(_angles(p, ep.k, L), 1.0)
    n = np.arange(1, L + 1, dtype=float)
    A = math.fsum(np.sin(2 * np.pi * th) ** 2 / n)
    return WeightedSequence(np.sin(2 * np.pi * th) / n / math.sqrt(A))


@dataclass
class OrthogonalityResult:
    alpha: float
    lhs: float
    rhs: float
    holds: bool
    applicable: bool = True


def almost_orthogonality_check(g, units, inner=weighted_inner_product,
                               unit_tol: float = 1e-10) -> OrthogonalityResult:
    """sum |<g, e_i>|^2 <= (1 + alpha) |g|^2 with alpha = N max_{i != j} |<e_i, e_j>|.

    Raises ValueError for non-unit vectors; alpha >= 1 is reported as not
    applicable rather than as a violation.
    """
    N = len(units)
    for i, e in enumerate(units):
        if abs(inner(e, e) - 1.0) > unit_tol:
            raise ValueError(f"vector {i} is not a unit vector")
    off = 0.0
    for i in range(N):
        for j in range(i + 1, N):
            off = max(off, abs(inner(units[i], units[j])))
    alpha = N * off
    lhs = math.fsum(inner(g, e) ** 2 for e in units)
    rhs = (1.0 + alpha) * inner(g, g)
    if alpha >= 1.0:
        return OrthogonalityResult(alpha, lhs, rhs, lhs <= rhs + 1e-10, applicable=False)
    return OrthogonalityResult(alpha, lhs, rhs, lhs <= rhs + 1e-10)
