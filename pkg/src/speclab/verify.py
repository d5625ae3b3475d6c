"""Invariant battery used by ``speclab verify``.

Each check returns ``(passed, detail)``; the free suite contains closed-form
identities of the zero potential, the full suite adds checks on decaying
potentials that only have numerical oracles.
"""

from __future__ import annotations

import math

import numpy as np

from . import dynamics as dy
from . import oscillatory as osc
from . import scan
from . import spectral as sp
from .potentials import Potential, cutoff, verify_bound

FREE_KS = np.arange(0.1, 0.46, 0.05)


# -- free suite ----------------------------------------------------------

def free_density():
    z = Potential.zero()
    worst = 0.0
    for L in (1, 10, 100):
        for k in FREE_KS:
            ep = dy.EnergyPoint.from_k(k)
            worst = max(worst, abs(sp.spectral_density_truncated(z, L, ep).density - ep.sin / math.pi))
    return worst < 1e-12, f"max error {worst:.2e}"


def free_trace():
    worst = 0.0
    for k in FREE_KS:
        ep = dy.EnergyPoint.from_k(k)
        tr = dy.prufer_trace(Potential.zero(), ep, 1000)
        n = np.arange(tr.logR.size)
        worst = max(worst, np.max(np.abs(tr.theta - n * k)) / 1000,
                    np.max(np.abs(tr.logR + math.log(ep.sin))))
    return worst < 1e-12, f"max deviation {worst:.2e}"


def free_unimodular():
    worst = 0.0
    for k in FREE_KS:
        T = dy.transfer_product(Potential.zero(), dy.EnergyPoint.from_k(k), 1000)
        worst = max(worst, T.det_residual())
    return worst < dy.DET_RTOL, f"max |det - 1| {worst:.2e}"


def free_weyl():
    # for V = 0, m(z) = -exp(-i pi w) with z = 2 cos(pi w)
    z = np.array([0.3 + 0.1j, -1.5 + 0.01j, 2.5 + 1j, 0.0 + 3j])
    w = np.array([sp.complex_quasimomentum(x).w for x in z])
    m = sp.weyl_m_truncated(Potential.zero(), 20, z)
    err = float(np.max(np.abs(m + np.exp(-1j * np.pi * w))))
    return err < 1e-12 and bool(np.all(m.imag > 0)), f"max error {err:.2e}"


def free_measure():
    # mu((E1, E2)) = (1/pi) int sin(pi k) dE = (k2 - k1) - (sin 2pi k2 - sin 2pi k1) / (2 pi)
    E1, E2 = -1.0, 1.0
    k1, k2 = math.acos(E2 / 2) / math.pi, math.acos(E1 / 2) / math.pi
    exact = (k2 - k1) - (math.sin(2 * math.pi * k2) - math.sin(2 * math.pi * k1)) / (2 * math.pi)
    got = sp.measure_of_interval(Potential.zero(), 10, E1, E2).mass
    return abs(got - exact) < 1e-8, f"error {abs(got - exact):.2e}"


def free_oracle():
    N = 50
    lam, w = sp.jacobi_eigenpairs(np.zeros(N), -2.1, 2.1)
    j = np.arange(N, 0, -1)
    el = 2 * np.cos(j * np.pi / (N + 1))
    ew = 2.0 / (N + 1) * np.sin(j * np.pi / (N + 1)) ** 2
    err = max(np.max(np.abs(lam - el)), np.max(np.abs(w - ew)))
    return err < 1e-11, f"max error {err:.2e}"


def free_cos4_bounded():
    worst = 0.0
    for k in (0.1, 0.2, 0.3, 0.4):
        d = osc.weighted_cos4_sum(Potential.zero(), dy.EnergyPoint.from_k(k), 10 ** 5)
        worst = max(worst, abs(d.drift_slope))
    return worst < 0.05, f"max |drift slope| {worst:.2e}"


def harmonic_control():
    s = osc.harmonic_control(10 ** 5).drift_slope
    return abs(s - 1) < 0.01, f"slope {s:.4f}"


def free_dimension():
    f = scan.local_dimension_diagnostic(Potential.zero(), 1000, 0.3, [1e-1, 3e-2, 1e-2, 3e-3])
    return abs(f.slope - 1) < 0.02, f"slope {f.slope:.4f}"


FREE = {
    "free_density_closed_form": free_density,
    "free_trace_closed_form": free_trace,
    "transfer_unimodular": free_unimodular,
    "free_weyl_closed_form": free_weyl,
    "free_measure_closed_form": free_measure,
    "free_oracle_closed_form": free_oracle,
    "cos4_sum_bounded_free": free_cos4_bounded,
    "harmonic_positive_control": harmonic_control,
    "dimension_free_slope_one": free_dimension,
}


# -- decaying potentials --------------------------------------------------

def _pd():
    return Potential.power_decay(1.0)


def dual_route():
    rng = np.random.default_rng(0)
    p = _pd()
    worst = 0.0
    for _ in range(10):
        ep = dy.EnergyPoint.from_k(rng.uniform(0.05, 0.95))
        L = int(rng.integers(1, 5000))
        rho = sp.spectral_density_truncated(p, L, ep).density
        R = math.exp(dy.prufer_trace(p, ep, L).logR[L + 1])
        worst = max(worst, abs(math.pi * rho * ep.sin * R * R - 1))
    return worst < 1e-9, f"max error {worst:.2e}"


def matrix_route():
    p = _pd()
    ep = dy.EnergyPoint.from_k(0.3)
    tr = dy.prufer_trace(p, ep, 2000)
    lr, th = dy.matrix_route_states(p, ep, 2000)
    dth = np.abs((tr.theta - th + 0.5) % 1.0 - 0.5)
    err = max(np.max(np.abs(tr.logR - lr)), np.max(dth))
    return err < dy.EQUIV_TOL, f"max deviation {err:.2e}"


def angle_increment():
    bad = 0
    for seed in range(3):
        tr = dy.prufer_trace(Potential.seeded_random(0.4, seed), dy.EnergyPoint.from_k(0.25), 10 ** 5)
        bad += tr.increment_audit()[1].size
    return bad == 0, f"{bad} violations"


def residual_bound():
    p = _pd()
    worst = 0.0
    for k in (0.15, 0.3, 0.45):
        ep = dy.EnergyPoint.from_k(k)
        r = abs(dy.log_amplitude_identity(p, ep, 10 ** 4)[2])
        worst = max(worst, r / dy.residual_bound(p, ep, 10 ** 4))
    return worst <= 1.0, f"max residual/bound {worst:.3f}"


def oracle_equivalence():
    p = cutoff(_pd(), 50)
    q = sp.measure_of_interval(p, 50, -1.0, 1.0).mass
    o = sp.oracle_spectral_measure(p, 5000, -1.0, 1.0).mass
    return abs(q - o) < 1e-2, f"|quadrature - oracle| {abs(q - o):.2e}"


def herglotz():
    rng = np.random.default_rng(1)
    z = rng.uniform(-3, 3, 200) + 1j * 10 ** rng.uniform(-3, 0.5, 200)
    m = sp.weyl_m_truncated(_pd(), 500, z)
    return bool(np.all(m.imag > 0)), f"min Im m {np.min(m.imag):.2e}"


def quasimomentum_roundtrip():
    worst = 0.0
    for k in np.linspace(0.05, 0.95, 10):
        for g in (-1.0, -0.1, -1e-3):
            z = 2 * np.cos(np.pi * (k + 1j * g))
            ce = sp.complex_quasimomentum(z)
            worst = max(worst, abs(ce.k - k), abs(ce.gamma - g))
    return worst < 1e-10, f"max error {worst:.2e}"


def almost_orthogonality():
    rng = np.random.default_rng(2)
    bad = 0
    for _ in range(200):
        N = int(rng.integers(1, 9))
        vecs = [osc.WeightedSequence(rng.normal(size=64)).normalized() for _ in range(N)]
        r = osc.almost_orthogonality_check(rng.normal(size=64), vecs)
        bad += int(r.applicable and not r.holds)
    return bad == 0, f"{bad} violations"


def bound_declared():
    ok = all(verify_bound(p, p.declared_bound, 10 ** 5)[0]
             for p in (_pd(), Potential.wigner_von_neumann(1, 0.3), Potential.seeded_random(0.4, 3)))
    return ok, "declared bounds hold"


def separation_soundness():
    cfg = scan.ScanConfig(eps=0.1, N=10)
    s = scan.singular_interval_scan(_pd(), cfg, 1)
    ok = scan.separation_test(s.points, _pd(), cfg, 1).ok if len(s) else True
    return ok and len(s) <= cfg.N and s.linkage_ok, f"{len(s)} points"


def point_mass_dimension():
    p = Potential.sampled([0.0, -5.0])
    lam, _ = scan.bound_states(p, 200)
    f = scan.local_dimension_diagnostic(p, 200, float(lam[0]), [1e-1, 3e-2, 1e-2], method="oracle")
    return abs(f.slope) < 0.02, f"slope {f.slope:.2e}"


ALL = dict(FREE)
ALL.update({
    "dual_route_identity": dual_route,
    "matrix_route_equivalence": matrix_route,
    "angle_increment_bound": angle_increment,
    "log_amplitude_residual_bound": residual_bound,
    "oracle_equivalence": oracle_equivalence,
    "herglotz": herglotz,
    "quasimomentum_roundtrip": quasimomentum_roundtrip,
    "almost_orthogonality": almost_orthogonality,
    "declared_bound": bound_declared,
    "separation_soundness": separation_soundness,
    "dimension_point_mass_slope_zero": point_mass_dimension,
})

SUITES = {"free": FREE, "all": ALL}


def run_suite(name: str):
    """Yield (check name, passed, detail); exceptions count as failures."""
    for key, fn in SUITES[name].items():
        try:
            ok, detail = fn()
        except Exception as exc:  # a crashing check is a failed check
            ok, detail = False, f"{type(exc).__name__}: {exc}"
        yield key, bool(ok), detail
