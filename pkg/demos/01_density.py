"""Spectral density of a cut-off potential, computed two ways.

The truncated density has a closed algebraic form in the transfer matrix
entries, and it is also 1 / (pi sin(pi k) R(L+1)^2) in terms of the Pruefer
amplitude.  We print both for V(n) = 1/(1+n) and watch them agree, then
compare the mass of (-1, 1) against the eigenvalues of a large finite matrix.
"""

import math

from speclab import spectral as sp
from speclab.dynamics import EnergyPoint, prufer_trace
from speclab.potentials import Potential, cutoff
from speclab.scan import bound_states

p = Potential.power_decay(1.0)
L = 2000

print(f"{'E':>6} {'density':>12} {'via R(L+1)':>12} {'free':>10}")
for E in (-1.5, -0.5, 0.0, 0.5, 1.5):
    ep = EnergyPoint.from_E(E)
    rho = sp.spectral_density_truncated(p, L, ep).density
    R = math.exp(prufer_trace(p, ep, L).logR[L + 1])
    print(f"{E:6.2f} {rho:12.8f} {1 / (math.pi * ep.sin * R * R):12.8f} {ep.sin / math.pi:10.6f}")

# the density only sees V up to L, so compare with the matrix of the cut-off potential
pl = cutoff(p, 200)
q = sp.measure_of_interval(pl, 200, -1.0, 1.0)
o = sp.oracle_spectral_measure(pl, 20_000, -1.0, 1.0)
print(f"\nmu((-1, 1)) quadrature {q.mass:.6f}   finite matrix (N = 2e4) {o.mass:.6f}")

# the cut-off operator can also have atoms outside [-2, 2]
lam, w = bound_states(pl, 2000)
print("bound states:", ", ".join(f"{l:.5f} (weight {x:.2e})" for l, x in zip(lam, w)) or "none")
