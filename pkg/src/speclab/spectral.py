"""Weyl m-function, spectral density of cut-off potentials, interval masses.

The density of the truncated measure is evaluated from the transfer matrix
``T = [[a, b], [c, d]]`` over sites 1..L as

    dmu_L/dE = sin(pi k) / (pi * ((d - b cos pi k)^2 + b^2 sin^2 pi k)),

and is cross-checked against the Pruefer amplitude, against boundary values
of the m-function and against a finite Jacobi matrix (the oracle).
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .dynamics import EnergyPoint, NumericalFault, _site_values
from .potentials import Potential, cutoff

QUAD_TOL = 1e-8
QUAD_MAX_DEPTH = 40
EIG_TOL = 1e-12
EIG_SPACING_MIN = 1e-13


class QuadratureError(RuntimeError):
    pass


class IllConditioned(RuntimeError):
    pass


@dataclass(frozen=True)
class ComplexEnergy:
    z: complex
    k: float
    gamma: float

    @property
    def w(self) -> complex:
        return complex(self.k, self.gamma)

    @property
    def eps(self) -> float:
        return self.z.imag


@dataclass(frozen=True)
class SpectralDensitySample:
    ep: EnergyPoint
    L: int
    density: float


@dataclass
class MeasureEstimate:
    interval: tuple[float, float]
    mass: float
    method: str
    error: float = 0.0
    details: dict = field(default_factory=dict, repr=False)


def complex_quasimomentum(z: complex) -> ComplexEnergy:
    """Solve 2 cos(pi (k + i gamma)) = z with k in (0, 1), gamma < 0."""
    z = complex(z)
    if not z.imag > 0:
        raise ValueError("complex energy must have positive imaginary part")
    w = cmath.acos(z / 2) / math.pi
    k, gamma = w.real, w.imag
    # principal acos already lands on this branch for Im z > 0
    if not (0.0 < k < 1.0 and gamma < 0.0):
        raise NumericalFault(f"quasimomentum off branch: k={k}, gamma={gamma}")
    if abs(2 * cmath.cos(math.pi * w) - z) >= 1e-10 * (1 + abs(z)):
        raise NumericalFault("quasimomentum round trip failed")
    return ComplexEnergy(z, k, gamma)


def weyl_m_truncated(p: Potential, L: int, ce) -> complex | np.ndarray:
    """m(z) = -u(1)/u(0) for the square-summable solution of the cut-off problem.

    ``ce`` may be a :class:`ComplexEnergy` or an array of complex energies.
    """
    if L < 1:
        raise ValueError("L must be >= 1")
    scalar = isinstance(ce, ComplexEnergy)
    ces = [ce] if scalar else [complex_quasimomentum(z) for z in np.ravel(ce)]
    zs = np.array([c.z for c in ces], dtype=np.complex128)
    ws = np.array([c.w for c in ces], dtype=np.complex128)
    m = _kernels.weyl_backward(_site_values(cutoff(p, L), L), zs, ws, int(L))
    if not np.all(np.isfinite(m)):
        raise NumericalFault("m-function degenerate: u(0) underflowed")
    return complex(m[0]) if scalar else m.reshape(np.shape(ce))


def density_values(p: Potential, L: int, energies) -> np.ndarray:
    """Vectorised dmu_L/dE on an array of energies inside (-2, 2)."""
    E = np.asarray(energies, dtype=float)
    if np.any(np.abs(E) >= 2.0):
        raise ValueError("density is only defined for |E| < 2")
    flat = np.ascontiguousarray(E.ravel())
    cols = _kernels.transfer_columns(_site_values(p, L), flat, int(L))
    k = np.arccos(flat / 2.0) / np.pi
    s, c = np.sin(np.pi * k), np.cos(np.pi * k)
    b, d, ls = cols[:, 1], cols[:, 3], cols[:, 4]
    dens = s * np.exp(-2.0 * ls) / (np.pi * ((d - b * c) ** 2 + (b * s) ** 2))
    return dens.reshape(E.shape)


def spectral_density_truncated(p: Potential, L: int, ep: EnergyPoint) -> SpectralDensitySample:
    if L < 1:
        raise ValueError("L must be >= 1")
    if abs(ep.E) >= 2.0:
        raise ValueError("density is only defined for |E| < 2")
    cols = _kernels.transfer_columns(_site_values(p, L), np.array([ep.E]), int(L))[0]
    b, d, ls = cols[1], cols[3], cols[4]
    s, c = ep.sin, ep.cos
    dens = s * math.exp(-2.0 * ls) / (math.pi * ((d - b * c) ** 2 + (b * s) ** 2))
    return SpectralDensitySample(ep, int(L), dens)


# -- quadrature -----------------------------------------------------------

def adaptive_simpson(f, a: float, b: float, tol: float = QUAD_TOL,
                     max_depth: int = QUAD_MAX_DEPTH, initial_panels: int = 16):
    """Adaptive Simpson rule, refined breadth-first so ``f`` is called on arrays.

    Returns (integral, error_estimate).
    """
    n0 = max(1, int(initial_panels))
    x = np.linspace(a, b, 2 * n0 + 1)
    fx = f(x)
    lo, mid, hi = x[:-2:2], x[1:-1:2], x[2::2]
    flo, fmid, fhi = fx[:-2:2], fx[1:-1:2], fx[2::2]
    whole = (hi - lo) / 6.0 * (flo + 4 * fmid + fhi)
    ptol = np.full(n0, tol / n0)
    total, err = 0.0, 0.0
    depth = 0
    while lo.size:
        if depth > max_depth:
            raise QuadratureError(
                f"adaptive Simpson exceeded depth {max_depth} on [{a}, {b}] "
                f"({lo.size} unresolved panels near {lo[0]:.6g})")
        lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
        fv = f(np.concatenate([lm, rm]))
        flm, frm = fv[: lo.size], fv[lo.size:]
        left = (mid - lo) / 6.0 * (flo + 4 * flm + fmid)
        right = (hi - mid) / 6.0 * (fmid + 4 * frm + fhi)
        delta = left + right - whole
        ok = np.abs(delta) <= 15.0 * ptol
        total += float(np.sum(left[ok] + right[ok] + delta[ok] / 15.0))
        err += float(np.sum(np.abs(delta[ok]))) / 15.0
        bad = ~ok
        lo, mid, hi = (np.concatenate([lo[bad], mid[bad]]),
                       np.concatenate([lm[bad], rm[bad]]),
                       np.concatenate([mid[bad], hi[bad]]))
        flo, fmid, fhi = (np.concatenate([flo[bad], fmid[bad]]),
                          np.concatenate([flm[bad], frm[bad]]),
                          np.concatenate([fmid[bad], fhi[bad]]))
        whole = np.concatenate([left[bad], right[bad]])
        ptol = np.concatenate([ptol[bad], ptol[bad]]) / 2.0
        depth += 1
    return total, err


def _initial_panels(width: float, L: int) -> int:
    # density wiggles on the scale 2 pi sin(pi k) / L in E
    return int(min(512, max(16, math.ceil(width * L / 4.0))))


def measure_of_interval(p: Potential, L: int, E1: float, E2: float,
                        tol: float = QUAD_TOL, max_depth: int = QUAD_MAX_DEPTH) -> MeasureEstimate:
    """mu_L((E1, E2)) by adaptive quadrature of the truncated density."""
    if not -2.0 < E1 < E2 < 2.0:
        raise ValueError("need -2 < E1 < E2 < 2")
    def f(E):
        return density_values(p, L, E)

    val, err = adaptive_simpson(f, E1, E2, tol, max_depth, _initial_panels(E2 - E1, L))
    return MeasureEstimate((E1, E2), val, "quadrature", err)


# -- finite Jacobi oracle --------------------------------------------------

def _sturm(d, lams, batch=512):
    lams = np.ascontiguousarray(np.asarray(lams, dtype=float))
    out = np.empty((lams.size, 3))
    for i in range(0, lams.size, batch):
        out[i:i + batch] = _kernels.sturm_batch(d, lams[i:i + batch])
    return out


def jacobi_eigenpairs(d: np.ndarray, E1: float, E2: float, tol: float = EIG_TOL):
    """Eigenvalues in (E1, E2] of the Jacobi matrix (diagonal d, off-diagonal 1)
    and the squared first components of their normalised eigenvectors.

    Eigenvalues are isolated by Sturm counts and then refined by Illinois
    steps on the characteristic sequence, with bisection as a safeguard.
    """
    d = np.ascontiguousarray(np.asarray(d, dtype=float))
    ends = _sturm(d, [E1, E2])
    if round(ends[0, 0] - ends[1, 0]) == 0:
        return np.empty(0), np.empty(0)

    # cells: rows of (x_lo, x_hi, count_lo, count_hi, g_lo, g_hi)
    cells = np.array([[E1, E2, ends[0, 0], ends[1, 0], ends[0, 1], ends[1, 1]]])
    brackets = []
    while cells.size:
        jumps = np.round(cells[:, 2] - cells[:, 3]).astype(int)
        brackets.append(cells[jumps == 1])
        split = cells[jumps > 1]
        if split.size == 0:
            break
        if np.min(split[:, 1] - split[:, 0]) < EIG_SPACING_MIN:
            raise IllConditioned("eigenvalue spacing below 1e-13")
        grids = [np.linspace(c[0], c[1], 2 * j + 2) for c, j in zip(split, jumps[jumps > 1])]
        info = _sturm(d, np.concatenate([g[1:-1] for g in grids]))
        new, pos = [], 0
        for c, g in zip(split, grids):
            m = g.size - 2
            cnt = np.concatenate([[c[2]], info[pos:pos + m, 0], [c[3]]])
            val = np.concatenate([[c[4]], info[pos:pos + m, 1], [c[5]]])
            new.append(np.stack([g[:-1], g[1:], cnt[:-1], cnt[1:], val[:-1], val[1:]], 1))
            pos += m
        cells = np.concatenate(new, 0)
    lo, hi, _, _, glo, ghi = np.concatenate(brackets, 0).T.copy()

    # Illinois on the sign change of p_N: halve the retained endpoint value
    # when the same side is replaced twice in a row
    side = np.zeros(lo.size)
    x = 0.5 * (lo + hi)
    logw = np.zeros(lo.size)
    active = np.ones(lo.size, dtype=bool)
    for it in range(200):
        idx = np.nonzero(active)[0]
        if idx.size == 0:
            break
        a, b, ga, gb = lo[idx], hi[idx], glo[idx], ghi[idx]
        with np.errstate(divide="ignore", invalid="ignore"):
            xi = (a * gb - b * ga) / (gb - ga)
        # bisect when the secant point is unusable, and every fourth step
        bad = ~np.isfinite(xi) | (xi <= a) | (xi >= b) | (it % 4 == 3)
        xi = np.where(bad, 0.5 * (a + b), xi)
        info = _sturm(d, xi)
        g = info[:, 1]
        x[idx] = xi
        logw[idx] = info[:, 2]
        right = np.sign(g) == np.sign(ga)
        prev = side[idx]
        lo[idx] = np.where(right, xi, a)
        hi[idx] = np.where(right, b, xi)
        glo[idx] = np.where(right, g, np.where(prev == -1, ga / 2, ga))
        ghi[idx] = np.where(right, np.where(prev == 1, gb / 2, gb), g)
        side[idx] = np.where(right, 1, -1)
        done = (hi[idx] - lo[idx] <= tol) | (g == 0.0)
        active[idx[done]] = False
    else:
        raise IllConditioned("eigenvalue refinement did not converge")
    # outside (-2, 2) the forward recursion carries a growing mode
    for i in np.nonzero(np.abs(x) >= 2.0)[0]:
        logw[i] = _kernels.twisted_weight(d, x[i])
    order = np.argsort(x)
    lam, logw = x[order], logw[order]
    if lam.size > 1 and np.min(np.diff(lam)) < EIG_SPACING_MIN:
        raise IllConditioned("eigenvalue spacing below 1e-13")
    return lam, np.exp(logw)


def oracle_spectral_measure(p: Potential, N: int, E1: float, E2: float) -> MeasureEstimate:
    """Spectral mass of (E1, E2] for the N x N truncation of the operator.

    The matrix has diagonal V(1..N) and unit off-diagonals; the mass is the
    sum of squared first eigenvector components over eigenvalues in range.
    """
    if N < 10:
        raise ValueError("oracle needs N >= 10")
    if not E1 < E2:
        raise ValueError("need E1 < E2")
    d = p.values(1, N + 1)
    lam, w = jacobi_eigenpairs(d, E1, E2)
    return MeasureEstimate((E1, E2), float(math.fsum(w)), "oracle",
                           error=float(lam.size) * 1e-15,
                           details={"N": int(N), "eigenvalues": lam, "weights": w})


def spectral_bounds(p: Potential, N: int) -> tuple[float, float]:
    """Gershgorin interval containing the spectrum of the N x N truncation."""
    d = p.values(1, N + 1)
    return float(d.min()) - 2.0 - 1e-9, float(d.max()) + 2.0 + 1e-9


# -- two-measure comparison ------------------------------------------------

@dataclass
class ComparisonReport:
    E: float
    eps: float
    wide_mass: float
    narrow_mass: float
    deficit: float
    bound: float
    violated: bool


def two_measure_comparison(p: Potential, L: int, L_ref: int, E: float, eps: float,
                           M: float = 2.0, sigma: float = 0.5, C: float = 1.0,
                           tol: float = 1e-9) -> ComparisonReport:
    """Check mu_ref(E-eps, E+eps) >= mu_L(E-eps/2, E+eps/2) - C eps^M.

    The full measure is not computable; mu_{L_ref} with L_ref >> L stands in.
    """
    if eps <= L ** (-1.0 / (1.0 + sigma)):
        raise ValueError("eps must exceed L^(-1/(1+sigma))")
    if not (-2.0 < E - eps and E + eps < 2.0):
        raise ValueError("(E-eps, E+eps) must lie inside (-2, 2)")
    wide = measure_of_interval(p, L_ref, E - eps, E + eps, tol=tol).mass
    narrow = measure_of_interval(p, L, E - eps / 2, E + eps / 2, tol=tol).mass
    deficit = wide - narrow
    bound = -C * eps ** M
    return ComparisonReport(E, eps, wide, narrow, deficit, bound, deficit < bound)


def calibrate_comparison_constant(E_grid, eps: float, M: float = 2.0, L: int = 10) -> float:
    """max |deficit| / eps^M over the free case, as used for the C in the check."""
    z = Potential.zero()
    worst = 0.0
    for E in E_grid:
        wide = measure_of_interval(z, L, E - eps, E + eps).mass
        narrow = measure_of_interval(z, L, E - eps / 2, E + eps / 2).mass
        worst = max(worst, abs(wide - narrow))
    return worst / eps ** M
