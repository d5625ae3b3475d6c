"""Potential families for the half-line lattice operator.

A :class:`Potential` is an immutable description; values are produced on
demand by :meth:`Potential.values`, which is vectorised over site indices.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Any

import numpy as np

FAMILIES = ("zero", "power_decay", "wigner_von_neumann", "sampled_table",
            "seeded_random_decay")

# random potentials are generated in fixed blocks so any index range is
# reproducible without generating the whole prefix
_RANDOM_BLOCK = 1 << 16


@dataclass(frozen=True)
class Potential:
    family: str
    B: float = 0.0
    alpha: float = 1.0
    c: float = 0.0
    k0: float = 0.25
    phi: float = 0.0
    table: tuple[float, ...] = ()
    seed: int = 0
    cutoff: int | None = None
    declared_bound: float | None = None
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown potential family {self.family!r}")
        if self.cutoff is not None and self.cutoff < 1:
            raise ValueError("cutoff must be a positive integer")

    # -- constructors -----------------------------------------------------

    @classmethod
    def zero(cls) -> "Potential":
        return cls("zero", declared_bound=0.0)

    @classmethod
    def power_decay(cls, B: float, alpha: float = 1.0) -> "Potential":
        """V(n) = B / (1+n)**alpha."""
        if B <= 0 or alpha <= 0:
            raise ValueError("power_decay needs B > 0 and alpha > 0")
        # (1+n)^-alpha <= (1+n)^-1 only when alpha >= 1
        bound = float(B) if alpha >= 1 else None
        return cls("power_decay", B=float(B), alpha=float(alpha),
                   declared_bound=bound)

    @classmethod
    def wigner_von_neumann(cls, c: float, k0: float, phi: float = 0.0) -> "Potential":
        """V(n) = c sin(2 pi k0 n + phi) / (1+n); resonant at quasimomentum k0."""
        if not 0 < k0 < 1:
            raise ValueError("k0 must lie in (0, 1)")
        return cls("wigner_von_neumann", c=float(c), k0=float(k0),
                   phi=float(phi) % (2 * np.pi), declared_bound=abs(float(c)))

    @classmethod
    def sampled(cls, table, bound: float | None = None) -> "Potential":
        """Explicit values V(0), V(1), ..., V(T-1); zero beyond the table."""
        vals = tuple(float(x) for x in np.asarray(table, dtype=float).ravel())
        return cls("sampled_table", table=vals, declared_bound=bound)

    @classmethod
    def seeded_random(cls, B: float, seed: int) -> "Potential":
        """V(n) = B * w_n / (1+n) with w_n i.i.d. uniform on [-1, 1]."""
        if B < 0:
            raise ValueError("B must be nonnegative")
        return cls("seeded_random_decay", B=float(B), seed=int(seed),
                   declared_bound=float(B))

    # -- evaluation -------------------------------------------------------

    def values(self, start: int, stop: int) -> np.ndarray:
        """Return V(n) for start <= n < stop as a float64 array."""
        if start < 0 or stop < start:
            raise ValueError("need 0 <= start <= stop")
        n = np.arange(start, stop, dtype=np.float64)
        f = self.family
        if f == "zero":
            v = np.zeros_like(n)
        elif f == "power_decay":
            v = self.B / (1.0 + n) ** self.alpha
        elif f == "wigner_von_neumann":
            # reduce the phase argument exactly: 2*pi*k0*n grows without bound
            frac = np.mod(self.k0 * n, 1.0)
            v = self.c * np.sin(2 * np.pi * frac + self.phi) / (1.0 + n)
        elif f == "sampled_table":
            v = np.zeros_like(n)
            tab = np.asarray(self.table)
            hi = min(stop, tab.size)
            if hi > start:
                v[: hi - start] = tab[start:hi]
        else:
            v = self._random_values(start, stop) * self.B / (1.0 + n)
        if self.cutoff is not None and stop > self.cutoff + 1:
            v[max(self.cutoff + 1 - start, 0):] = 0.0
        return v

    def _random_values(self, start: int, stop: int) -> np.ndarray:
        out = np.empty(stop - start)
        b0, b1 = start // _RANDOM_BLOCK, (stop - 1) // _RANDOM_BLOCK
        for blk in range(b0, b1 + 1):
            w = self._cache.get(blk)
            if w is None:
                ss = np.random.SeedSequence([self.seed, blk])
                w = np.random.Generator(np.random.PCG64(ss)).uniform(-1.0, 1.0, _RANDOM_BLOCK)
                if len(self._cache) < 64:
                    self._cache[blk] = w
            lo = max(start, blk * _RANDOM_BLOCK)
            hi = min(stop, (blk + 1) * _RANDOM_BLOCK)
            out[lo - start: hi - start] = w[lo - blk * _RANDOM_BLOCK: hi - blk * _RANDOM_BLOCK]
        return out

    def __call__(self, n: int) -> float:
        return eval_potential(self, n)

    # -- serialisation ----------------------------------------------------

    def to_spec(self) -> dict[str, Any]:
        spec: dict[str, Any] = {"potential": self.family}
        if self.family in ("power_decay",):
            spec.update(B=self.B, alpha=self.alpha)
        elif self.family == "wigner_von_neumann":
            spec.update(c=self.c, k0=self.k0, phi=self.phi)
        elif self.family == "seeded_random_decay":
            spec.update(B=self.B, seed=self.seed)
        elif self.family == "sampled_table":
            spec.update(table=list(self.table))
        if self.cutoff is not None:
            spec["cutoff"] = self.cutoff
        if self.declared_bound is not None and self.family == "sampled_table":
            spec["bound"] = self.declared_bound
        return spec

    @classmethod
    def from_spec(cls, spec: dict[str, Any]) -> "Potential":
        """Build from a flat mapping as produced by :meth:`to_spec` or the CLI."""
        fam = spec.get("potential", "zero")
        if fam == "zero":
            p = cls.zero()
        elif fam == "power_decay":
            p = cls.power_decay(float(spec.get("B", 1.0)), float(spec.get("alpha", 1.0)))
        elif fam == "wigner_von_neumann":
            p = cls.wigner_von_neumann(float(spec.get("c", 1.0)),
                                       float(spec.get("k0", 0.25)),
                                       float(spec.get("phi", 0.0)))
        elif fam == "seeded_random_decay":
            p = cls.seeded_random(float(spec.get("B", 1.0)), int(spec.get("seed", 0)))
        elif fam == "sampled_table":
            table = spec.get("table", ())
            if isinstance(table, str):
                table = [float(x) for x in table.split(",") if x.strip()]
            bound = spec.get("bound")
            p = cls.sampled(table, None if bound is None else float(bound))
        else:
            raise ValueError(f"unknown potential family {fam!r}")
        if spec.get("cutoff") is not None:
            p = cutoff(p, int(spec["cutoff"]))
        return p


def eval_potential(p: Potential, n: int) -> float:
    if n < 0:
        raise ValueError("site index must be nonnegative")
    return float(p.values(n, n + 1)[0])


def cutoff(p: Potential, L: int) -> Potential:
    """Return V_L: equal to ``p`` on 0..L and zero for n > L."""
    if L < 1:
        raise ValueError("cutoff L must be >= 1")
    L = int(L)
    if p.cutoff is not None:
        L = min(L, p.cutoff)
    return replace(p, cutoff=L, _cache={})


def verify_bound(p: Potential, B: float, N: int, chunk: int = 1 << 20):
    """Check |V(n)| <= B/(1+n) for 0 <= n <= N.

    Returns ``(ok, first_bad_index)`` where the index is ``None`` on success.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    for lo in range(0, N + 1, chunk):
        hi = min(N + 1, lo + chunk)
        v = p.values(lo, hi)
        n = np.arange(lo, hi, dtype=np.float64)
        # relative slack absorbs the rounding in B/(1+n) itself
        bad = np.nonzero(np.abs(v) > B / (1.0 + n) * (1 + 4e-16))[0]
        if bad.size:
            return False, int(lo + bad[0])
    return True, None
