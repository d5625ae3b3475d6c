"""Multiscale scan for small Pruefer amplitudes.

At scale m the horizon is L_m = eps^(-m(1+sigma)).  Quasimomenta where R^2 is
small are candidates for carrying singular mass; a greedy pass keeps a set
whose points are far apart.  For V(n) = 1/(1+n) the sets stay tiny.
"""

from speclab import scan
from speclab.potentials import Potential

cfg = scan.ScanConfig(beta=0.5, sigma=0.5, eps=0.1, N=10)
print(f"C1 = {cfg.c1:.4f}, C(I) = {cfg.c_interval:.3f}, window k in {cfg.window}")
for name, p in [("zero", Potential.zero()), ("power_decay B=1", Potential.power_decay(1.0))]:
    rep = scan.count_bound_experiment(p, cfg, [1, 2, 3], with_mass=False)
    print(f"\n{name}")
    for s in rep.scales:
        pts = ", ".join(f"{k:.4f}" for k in s.points)
        print(f"  m = {s.m}  L = {s.L:6d}  selected {s.count} [{pts}]  cover {s.cover_count}")
    for w in rep.warnings:
        print("  note:", w)
