"""Resonance experiment for the Wigner-von Neumann family."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .dynamics import EnergyPoint, prufer_trace
from .potentials import Potential

OFF_RESONANCE_SHIFT = 0.05
N_PHASES = 8


def log_slope(logR: np.ndarray, lo: int, hi: int) -> float:
    """Least-squares slope of logR(n) against ln n over lo <= n <= hi."""
    n = np.arange(lo, hi + 1)
    return float(np.polyfit(np.log(n), logR[n], 1)[0])


def decaying_branch_logR(p: Potential, ep: EnergyPoint, L: int) -> np.ndarray:
    """log of the Pruefer amplitude of the solution with u(L+1) = 0, u(L) = 1.

    Run backwards, this solution is dominated by the branch that decays in
    the forward direction, so it tracks that branch until close to L.
    Entry n (1 <= n <= L) is built from (u(n-1), u(n)); entry 0 is unused.
    """
    v = p.values(0, L + 2)
    vr = np.zeros(L + 2)
    # w(j) = u(L+1-j) obeys the same recursion with V(L+1-j)
    vr[1: L + 1] = v[L:0:-1]
    w, ls = _kernels.dirichlet_solution(vr, ep.E, int(L))
    n = np.arange(1, L + 1)
    # slot i of w holds w(i-1) = u(L+2-i)
    a, b = L + 3 - n, L + 2 - n
    ref = np.maximum(ls[a], ls[b])
    up = w[a] * np.exp(ls[a] - ref)
    uc = w[b] * np.exp(ls[b] - ref)
    y2 = (uc - ep.cos * up) / ep.sin
    out = np.full(L + 1, np.nan)
    out[1:] = np.log(np.hypot(up, y2)) + ref
    return out


@dataclass
class EmbeddedResult:
    c: float
    k0: float
    phi: float
    L: int
    resonant_slope: float
    off_resonant_slopes: tuple
    phase_sweep: list = field(default_factory=list)
    min_resonant_slope: float = math.nan
    decaying_branch_slope: float = math.nan
    first_order_rate: float = math.nan

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}


def embedded_eigenvalue_experiment(c: float, k0: float, phi: float = 0.0, L: int = 100_000,
                                   n_phases: int = N_PHASES) -> EmbeddedResult:
    """Growth rate of the Dirichlet solution at and beside the resonance.

    Slopes of logR against ln n are fitted over [L/10, L]; the decaying
    branch, integrated backwards from L, is fitted over [L/100, L/10].
    The first-order prediction at resonance is |slope| = |c| / (4 sin(pi k0));
    its sign depends on which branch the solution follows.
    """
    if not 0.05 < k0 < 0.45:
        raise ValueError("k0 must lie in a closed subinterval of (0, 1/2) "
                         "leaving room for the off-resonant points")
    if L < 10 ** 4:
        raise ValueError("L must be >= 1e4")
    lo, hi = L // 10, L

    def slope(phase, k):
        p = Potential.wigner_von_neumann(c, k0, phase)
        return log_slope(prufer_trace(p, EnergyPoint.from_k(k), L).logR, lo, hi)

    res = slope(phi, k0)
    off = (slope(phi, k0 - OFF_RESONANCE_SHIFT), slope(phi, k0 + OFF_RESONANCE_SHIFT))
    phases = phi + 2.0 * math.pi * np.arange(n_phases) / n_phases
    sweep = [(float(ph % (2 * math.pi)), slope(ph, k0)) for ph in phases]
    ep = EnergyPoint.from_k(k0)
    dec = decaying_branch_logR(Potential.wigner_von_neumann(c, k0, phi), ep, L)
    return EmbeddedResult(
        c, k0, phi, L, res, off, sweep,
        min_resonant_slope=min(s for _, s in sweep),
        decaying_branch_slope=log_slope(dec, max(L // 100, 10), lo),
        first_order_rate=abs(c) / (4.0 * ep.sin),
    )
