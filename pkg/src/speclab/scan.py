"""Multiscale search for separated small-amplitude quasimomenta.

At scale m the horizon is L_m = floor(eps_m^-(1+sigma)) with eps_m = eps^m.
A quasimomentum k is a candidate when the Pruefer amplitude is small,
R^2(L_m, k) <= C(I) eps_m^(1-beta), and the weighted phase sum is large,
|sum_{n<=L_m} V(n) sin 2pi theta(n, k)| >= (1-beta) C1 ln(1/eps_m).  Candidates
are thinned greedily into a set with gaps >= 2 eps_m^(1/N^2) and covered by
intervals of that length.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import _kernels
from .dynamics import EnergyPoint
from .potentials import Potential
from .spectral import jacobi_eigenpairs, measure_of_interval, oracle_spectral_measure, spectral_bounds

MAX_HORIZON = 10 ** 7
MIN_FIRST_HORIZON = 10 ** 3


class GridResolutionError(RuntimeError):
    """Two selected points fell in adjacent grid cells."""


class ScaleSkipped(RuntimeError):
    """The horizon at this scale exceeds MAX_HORIZON."""


@dataclass(frozen=True)
class ScanConfig:
    beta: float = 0.5
    sigma: float = 0.5
    N: int = 10
    eps: float = 0.1
    C1: float | None = None
    # quasimomentum interval; EnergyPoints are accepted and converted
    window: tuple = (0.1, 0.4)
    grid_resolution: int = 4
    C_I: float | None = None
    max_grid: int = 200_000

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be a positive integer")
        if not 0.0 < self.eps < 1.0:
            raise ValueError("eps must lie in (0, 1)")
        if self.C1 is not None and self.C1 <= 0:
            raise ValueError("C1 must be positive")
        if self.grid_resolution < 1:
            raise ValueError("grid_resolution must be >= 1")
        w = tuple(x.k if isinstance(x, EnergyPoint) else float(x) for x in self.window)
        if len(w) != 2 or not 0.0 < w[0] < w[1] < 0.5:
            raise ValueError("window must be a k-interval inside (0, 1/2)")
        object.__setattr__(self, "window", w)

    @property
    def M(self) -> float:
        return 1.0 + self.beta

    def eps_m(self, m: int) -> float:
        return self.eps ** m

    def L(self, m: int) -> int:
        x = self.eps_m(m) ** (-(1.0 + self.sigma))
        # 0.1**2 is 0.010000000000000002; do not let that drop a whole site
        return int(math.floor(x * (1.0 + 1e-12)))

    def separation(self, m: int) -> float:
        return self.eps_m(m) ** (1.0 / self.N ** 2)

    @property
    def c1(self) -> float:
        """C1 default: min of sin(pi k) over the window."""
        if self.C1 is not None:
            return float(self.C1)
        return math.sin(math.pi * self.window[0])

    @property
    def c_interval(self) -> float:
        """C(I) default: 2 sup 1/sin^2(pi k) over the window."""
        if self.C_I is not None:
            return float(self.C_I)
        return 2.0 / math.sin(math.pi * self.window[0]) ** 2

    def amplitude_threshold(self, m: int) -> float:
        return self.c_interval * self.eps_m(m) ** (1.0 - self.beta)

    def sum_threshold(self, m: int) -> float:
        return (1.0 - self.beta) * self.c1 * math.log(1.0 / self.eps_m(m))

    def energy_window(self) -> tuple[EnergyPoint, EnergyPoint]:
        return EnergyPoint.from_k(self.window[0]), EnergyPoint.from_k(self.window[1])

    def to_dict(self) -> dict:
        d = asdict(self)
        d["window"] = list(self.window)
        d.update(M=self.M, C1_used=self.c1, C_I_used=self.c_interval)
        return d


def _summary(p: Potential, ks: np.ndarray, L: int) -> np.ndarray:
    v = np.ascontiguousarray(p.values(0, L + 2))
    return _kernels.prufer_summary(v, np.ascontiguousarray(ks, dtype=float), int(L))


def _residual_bounds(p: Potential, ks: np.ndarray, L: int) -> np.ndarray:
    v2 = math.fsum(p.values(1, L) ** 2)
    return v2 / np.sin(np.pi * ks) ** 2


@dataclass
class SeparationReport:
    ok: bool
    condition1: bool
    condition2: bool
    sums: np.ndarray
    sum_threshold: float
    min_gap: float
    separation: float
    failing_points: list = field(default_factory=list)
    close_pairs: list = field(default_factory=list)


def separation_test(points, p: Potential, cfg: ScanConfig, m: int) -> SeparationReport:
    """Both separation conditions at scale m for the given quasimomenta."""
    ks = np.asarray(points, dtype=float).ravel()
    lo, hi = cfg.window
    if np.any((ks < lo) | (ks > hi)):
        raise ValueError(f"points must lie in the window [{lo}, {hi}]")
    L = cfg.L(m)
    thr = cfg.sum_threshold(m)
    sums = _summary(p, ks, L)[:, 2] if ks.size else np.empty(0)
    failing = [float(k) for k, s in zip(ks, sums) if abs(s) < thr]
    sep = cfg.separation(m)
    close = []
    min_gap = math.inf
    for i in range(ks.size):
        for j in range(i + 1, ks.size):
            g = abs(ks[i] - ks[j])
            min_gap = min(min_gap, g)
            if g < sep:
                close.append((float(ks[i]), float(ks[j])))
    c1, c2 = not failing, not close
    return SeparationReport(c1 and c2, c1, c2, sums, thr, min_gap, sep, failing, close)


@dataclass
class SeparatedSet:
    """Selected quasimomenta at one scale, with the data that certify them."""

    points: np.ndarray
    scale: int
    L: int
    sums: np.ndarray
    R2: np.ndarray
    separation: float
    amplitude_threshold: float
    sum_threshold: float
    grid_spacing: float
    candidates: np.ndarray = field(repr=False, default=None)
    candidate_R2: np.ndarray = field(repr=False, default=None)
    marginal: np.ndarray = field(repr=False, default=None)
    linkage_residuals: np.ndarray = field(repr=False, default=None)
    linkage_bounds: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        k = np.sort(self.points)
        if k.size > 1 and np.min(np.diff(k)) < self.separation:
            raise ValueError("points are not separated")

    def __len__(self):
        return int(self.points.size)

    @property
    def linkage_ok(self) -> bool:
        if self.points.size == 0:
            return True
        return bool(np.all(np.abs(self.linkage_residuals) <= self.linkage_bounds))


def _grid(cfg: ScanConfig, m: int, L: int, refine: float) -> np.ndarray:
    lo, hi = cfg.window
    coarse = cfg.separation(m) / cfg.grid_resolution
    h = min(coarse, 1.0 / L) * refine
    n = int(math.ceil((hi - lo) / h)) + 1
    if n > cfg.max_grid:
        n = cfg.max_grid
        if (hi - lo) / (n - 1) > coarse * refine:
            raise GridResolutionError("max_grid too small for the required spacing")
    return np.linspace(lo, hi, n)


def greedy_select(ks: np.ndarray, scores: np.ndarray, min_gap: float) -> np.ndarray:
    """Indices accepted in ascending score order, each >= min_gap from the rest."""
    acc: list[int] = []
    for i in np.argsort(scores, kind="stable"):
        if all(abs(ks[i] - ks[j]) >= min_gap for j in acc):
            acc.append(int(i))
    return np.array(acc, dtype=int)


def singular_interval_scan(p: Potential, cfg: ScanConfig, m: int,
                           refine: float = 1.0) -> SeparatedSet:
    """Small-amplitude, large-sum quasimomenta at scale m, greedily separated.

    ``refine`` scales the grid spacing (0.5 halves it).
    """
    if m < 1:
        raise ValueError("scale m must be >= 1")
    L = cfg.L(m)
    if L > MAX_HORIZON:
        raise ScaleSkipped(f"L_{m} = {L} exceeds {MAX_HORIZON}")
    ks = _grid(cfg, m, L, refine)
    rows = _summary(p, ks, L)
    R2 = np.exp(2.0 * rows[:, 0])
    sums = rows[:, 2]
    thr_R2 = cfg.amplitude_threshold(m)
    thr_sum = cfg.sum_threshold(m)
    large = np.abs(sums) >= thr_sum
    cand = (R2 <= thr_R2) & large
    marginal = (R2 > thr_R2) & (R2 <= 2.0 * thr_R2)

    sep = cfg.separation(m)
    ci = np.nonzero(cand)[0]
    sel = ci[greedy_select(ks[ci], R2[ci], 2.0 * sep)] if ci.size else np.empty(0, int)
    sel = np.sort(sel)
    if sel.size > 1 and np.min(np.diff(sel)) <= 1:
        raise GridResolutionError("selected points in adjacent grid cells")

    resid = 2.0 * (rows[sel, 0] - rows[sel, 1]) - rows[sel, 4]
    bounds = _residual_bounds(p, ks[sel], L)
    return SeparatedSet(ks[sel], m, L, sums[sel], R2[sel], sep, thr_R2, thr_sum,
                        float(ks[1] - ks[0]), ks[ci], R2[ci], ks[marginal],
                        resid, bounds)


def greedy_cover(ks, length: float, window) -> list[tuple[float, float]]:
    """Cover the points by intervals [x, x + length] starting at the leftmost
    uncovered point, clipped to the window."""
    out = []
    end = -math.inf
    for k in np.sort(np.asarray(ks, dtype=float)):
        if k > end:
            end = k + length
            out.append((float(k), float(min(end, window[1]))))
    return out


def _cover_mass(p: Potential, L: int, cover) -> float:
    total = 0.0
    for a, b in cover:
        if b <= a:
            continue
        # E = 2 cos(pi k) is decreasing in k
        E1, E2 = 2.0 * math.cos(math.pi * b), 2.0 * math.cos(math.pi * a)
        total += measure_of_interval(p, L, E1, E2, tol=1e-9).mass
    return total


@dataclass
class ScaleResult:
    m: int
    L: int
    skipped: str | None = None
    count: int = 0
    points: list = field(default_factory=list)
    R2: list = field(default_factory=list)
    sums: list = field(default_factory=list)
    candidates: int = 0
    marginal: int = 0
    cover: list = field(default_factory=list)
    cover_count: int = 0
    mass: float | None = None
    count_flag: bool = False
    cover_flag: bool = False
    marginal_flag: bool = False
    linkage_ok: bool = True
    separation_ok: bool = True


@dataclass
class ScanReport:
    config: dict
    scales: list
    warnings: list = field(default_factory=list)

    @property
    def counts(self) -> list[int]:
        return [s.count for s in self.scales if s.skipped is None]

    @property
    def cover_counts(self) -> list[int]:
        return [s.cover_count for s in self.scales if s.skipped is None]

    @property
    def violations(self) -> list[str]:
        out = []
        for s in self.scales:
            if s.count_flag:
                out.append(f"scale {s.m}: count {s.count} > N")
            if s.cover_flag:
                out.append(f"scale {s.m}: cover {s.cover_count} > 8N")
            if not s.linkage_ok:
                out.append(f"scale {s.m}: linkage residual above bound")
            if not s.separation_ok:
                out.append(f"scale {s.m}: selected set fails separation test")
        return out

    @property
    def marginal(self) -> bool:
        return any(s.marginal_flag for s in self.scales)

    def to_dict(self) -> dict:
        return {"config": self.config, "warnings": list(self.warnings),
                "scales": [asdict(s) for s in self.scales],
                "violations": self.violations}


def count_bound_experiment(p: Potential, cfg: ScanConfig, scales, with_mass: bool = True) -> ScanReport:
    """Run the scan at each scale and check count <= N and cover <= 8N."""
    warnings = []
    if cfg.L(1) < MIN_FIRST_HORIZON:
        warnings.append(f"L_1 = {cfg.L(1)} is below {MIN_FIRST_HORIZON}; "
                        "small-scale results are outside the asymptotic regime")
    out = []
    for m in scales:
        L = cfg.L(m)
        try:
            s = singular_interval_scan(p, cfg, m)
        except ScaleSkipped as exc:
            out.append(ScaleResult(m, L, skipped=str(exc)))
            continue
        sep = cfg.separation(m)
        cover = greedy_cover(s.candidates, sep, cfg.window)
        res = ScaleResult(m, L, count=len(s), points=s.points.tolist(), R2=s.R2.tolist(),
                          sums=s.sums.tolist(), candidates=int(s.candidates.size),
                          marginal=int(s.marginal.size), cover=cover,
                          cover_count=len(cover), linkage_ok=s.linkage_ok)
        res.count_flag = res.count > cfg.N
        res.cover_flag = res.cover_count > 8 * cfg.N
        if len(s):
            res.separation_ok = separation_test(s.points, p, cfg, m).ok
        # would admitting the near-threshold points push the count past N?
        if s.marginal.size:
            both = np.concatenate([s.candidates, s.marginal])
            scores = np.concatenate([s.candidate_R2, np.full(s.marginal.size, np.inf)])
            res.marginal_flag = greedy_select(both, scores, 2.0 * sep).size > cfg.N
        if with_mass:
            res.mass = _cover_mass(p, L, cover)
        out.append(res)
    return ScanReport(cfg.to_dict(), out, warnings)


# -- local dimension ---------------------------------------------------------

@dataclass
class DimensionFit:
    E: float
    L: int
    method: str
    eps: np.ndarray
    mass: np.ndarray
    slope: float
    intercept: float

    def rows(self):
        for e, m in zip(self.eps, self.mass):
            yield e, m, math.log(e), math.log(m) if m > 0 else -math.inf


def local_dimension_diagnostic(p: Potential, L: int, E: float, eps_grid,
                               method: str = "quadrature", tol: float = 1e-10) -> DimensionFit:
    """Fit log mu_L(E - eps, E + eps) against log eps.

    ``method="oracle"`` uses the L x L Jacobi truncation instead of the
    density quadrature; it is the only option outside (-2, 2).
    """
    eps = np.asarray(eps_grid, dtype=float)
    if eps.size < 2:
        raise ValueError("need at least two eps values")
    if np.any(np.diff(eps) >= 0):
        raise ValueError("eps_grid must be strictly decreasing")
    if np.any(eps < 1.0 / L):
        raise ValueError(f"eps below the resolution scale 1/L = {1.0 / L:g}")
    if method == "quadrature":
        if not (-2.0 < E - eps[0] and E + eps[0] < 2.0):
            raise ValueError("window leaves (-2, 2); use method='oracle'")
        mass = np.array([measure_of_interval(p, L, E - e, E + e, tol=tol).mass for e in eps])
    elif method == "oracle":
        mass = np.array([oracle_spectral_measure(p, L, E - e, E + e).mass for e in eps])
    else:
        raise ValueError(f"unknown method {method!r}")
    if np.any(mass <= 0):
        raise ValueError("zero mass in a window; cannot fit a log-log slope")
    slope, intercept = np.polyfit(np.log(eps), np.log(mass), 1)
    return DimensionFit(float(E), int(L), method, eps, mass, float(slope), float(intercept))


def bound_states(p: Potential, N: int):
    """Eigenvalues of the N x N truncation outside [-2, 2] with their weights."""
    d = p.values(1, N + 1)
    lo, hi = spectral_bounds(p, N)
    lam, w = [], []
    for a, b in ((lo, -2.0), (2.0, hi)):
        if a < b:
            x, y = jacobi_eigenpairs(d, a, b)
            lam.append(x)
            w.append(y)
    return np.concatenate(lam), np.concatenate(w)
