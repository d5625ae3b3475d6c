"""Growth of solutions for V(n) = c sin(2 pi k0 n + phi) / (1+n).

At the resonant energy E = 2 cos(pi k0) the two solutions behave like
n^(+r) and n^(-r) with r close to c / (4 sin(pi k0)).  The Dirichlet solution
picks up the growing branch for every phase we try; the decaying branch only
appears when the recursion is run backwards from a far boundary.  Off
resonance the amplitude stays flat.
"""

from speclab.experiments import embedded_eigenvalue_experiment

print(f"{'c':>4} {'resonant':>9} {'min over phi':>13} {'decaying':>9} {'first order':>12} {'off-resonant':>22}")
for c in (0.0, 2.0, 4.0, 8.0):
    r = embedded_eigenvalue_experiment(c, 0.25, 0.0, 10 ** 5)
    off = "/".join(f"{s:+.1e}" for s in r.off_resonant_slopes)
    print(f"{c:4.1f} {r.resonant_slope:+9.4f} {r.min_resonant_slope:+13.4f} "
          f"{r.decaying_branch_slope:+9.4f} {r.first_order_rate:12.4f} {off:>22}")
