"""Transfer matrices and Pruefer variables for the Dirichlet solution.

Indexing
--------
The Pruefer state with index ``n`` encodes the vector ``(u(n-1), u(n))`` of
the solution with ``u(0) = 0, u(1) = 1``.  The Dirichlet state therefore sits
at ``n = 1`` with ``R = 1/sin(pi k)`` and ``theta = k``; index 0 holds the
extension ``(u(-1), u(0)) = (-1, 0)`` with ``theta = 0``.  With this labelling
the step ``n -> n+1`` uses ``V(n)``, the free angle is ``theta(n) = n k`` and
``R(L+1)`` is built from ``(u(L), u(L+1))``, which is what the spectral
density formula needs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .potentials import Potential

# tolerances: ~1e3 x roundoff x path length
DET_RTOL = 1e-9
EQUIV_TOL = 1e-8


class NumericalFault(ArithmeticError):
    """Raised when a recursion produces a non-finite or impossible value."""

    def __init__(self, msg, index=None):
        super().__init__(msg if index is None else f"{msg} (step {index})")
        self.index = index


@dataclass(frozen=True)
class EnergyPoint:
    E: float
    k: float

    def __post_init__(self):
        if not 0.0 < self.k < 1.0:
            raise ValueError(f"quasimomentum must lie in (0, 1), got {self.k}")
        if abs(self.E - 2.0 * math.cos(math.pi * self.k)) >= 1e-12:
            raise ValueError("E and k are inconsistent: E != 2 cos(pi k)")

    @classmethod
    def from_k(cls, k: float) -> "EnergyPoint":
        return cls(2.0 * math.cos(math.pi * k), float(k))

    @classmethod
    def from_E(cls, E: float) -> "EnergyPoint":
        if not -2.0 < E < 2.0:
            raise ValueError(f"energy must lie in (-2, 2), got {E}")
        k = math.acos(E / 2.0) / math.pi
        # report the exact pair (E(k), k) so the invariant holds to roundoff
        return cls(2.0 * math.cos(math.pi * k), k)

    @property
    def sin(self) -> float:
        return math.sin(math.pi * self.k)

    @property
    def cos(self) -> float:
        return math.cos(math.pi * self.k)


@dataclass(frozen=True)
class TransferMatrix:
    """``exp(log_scale) * [[a, b], [c, d]]``."""

    a: float
    b: float
    c: float
    d: float
    log_scale: float = 0.0

    def det(self) -> float:
        return (self.a * self.d - self.b * self.c) * math.exp(2.0 * self.log_scale)

    def det_residual(self) -> float:
        """|det - 1| relative to the size of the products that form it."""
        scale = max(abs(self.a * self.d), abs(self.b * self.c), 1e-300)
        return abs(self.a * self.d - self.b * self.c
                   - math.exp(-2.0 * self.log_scale)) / scale

    def as_array(self) -> np.ndarray:
        return math.exp(self.log_scale) * np.array([[self.a, self.b], [self.c, self.d]])

    def __matmul__(self, other: "TransferMatrix") -> "TransferMatrix":
        a = self.a * other.a + self.b * other.c
        b = self.a * other.b + self.b * other.d
        c = self.c * other.a + self.d * other.c
        d = self.c * other.b + self.d * other.d
        return TransferMatrix(a, b, c, d, self.log_scale + other.log_scale)


@dataclass(frozen=True)
class PrueferState:
    n: int
    logR: float
    theta: float

    def __post_init__(self):
        if not (math.isfinite(self.logR) and math.isfinite(self.theta)):
            raise NumericalFault("non-finite Pruefer state", self.n)

    @property
    def R(self) -> float:
        return math.exp(self.logR)


def initial_state(ep: EnergyPoint) -> PrueferState:
    """Dirichlet data (u(0), u(1)) = (0, 1) at index 1."""
    return PrueferState(1, -math.log(ep.sin), ep.k)


def step_matrix(ep: EnergyPoint, v: float) -> TransferMatrix:
    """One-site map (u(n-1), u(n)) -> (u(n), u(n+1)) for potential value v."""
    return TransferMatrix(0.0, 1.0, -1.0, ep.E - v)


def _site_values(p: Potential, L: int) -> np.ndarray:
    # V(0..L+1); the extra slot lets traces run one step past the cutoff
    return np.ascontiguousarray(p.values(0, L + 2))


def transfer_product(p: Potential, ep: EnergyPoint, L: int) -> TransferMatrix:
    """Map (phi(0), phi(1)) to (phi(L), phi(L+1)), using V(1)..V(L)."""
    if L < 1:
        raise ValueError("L must be >= 1")
    out = _kernels.transfer_columns(_site_values(p, L), np.array([ep.E]), int(L))[0]
    T = TransferMatrix(*out[:4], log_scale=out[4])
    if not all(math.isfinite(x) for x in out):
        raise NumericalFault("non-finite transfer matrix")
    return T


def transfer_columns(p: Potential, energies, L: int) -> np.ndarray:
    """Vectorised transfer products; rows are (a, b, c, d, log_scale)."""
    Es = np.ascontiguousarray(np.atleast_1d(np.asarray(energies, dtype=float)))
    return _kernels.transfer_columns(_site_values(p, L), Es, int(L))


def prufer_from_vector(u_prev: float, u_cur: float, ep: EnergyPoint):
    """Polar form of (u_prev, u_cur); returns (R, theta mod 2).

    Reducing theta mod 1 identifies the line through the vector, which is all
    the angle recursion needs; mod 2 keeps the sign, so that
    :func:`prufer_vector` inverts this map exactly.
    """
    if u_prev == 0.0 and u_cur == 0.0:
        raise ValueError("zero vector has no Pruefer representation")
    y1 = u_prev
    y2 = (u_cur - ep.cos * u_prev) / ep.sin
    R = math.hypot(y1, y2)
    # Y = R (sin(pi theta - pi k), cos(pi theta - pi k))
    phase = math.atan2(y1, y2) / math.pi
    return R, (phase + ep.k) % 2.0


def prufer_vector(R: float, theta: float, ep: EnergyPoint):
    """Inverse of :func:`prufer_from_vector`: (u_prev, u_cur)."""
    a = math.pi * (theta - ep.k)
    y1 = R * math.sin(a)
    y2 = R * math.cos(a)
    return y1, ep.sin * y2 + ep.cos * y1


def prufer_step(s: PrueferState, v: float, ep: EnergyPoint) -> PrueferState:
    """Advance one site.

    The angle update is evaluated in rotation form,
    ``theta' = theta + k + atan2(t sin^2, 1 - t sin cos) / pi`` with
    ``t = v / sin(pi k)``, which satisfies the cot recursion exactly and has
    no pole at integer theta.
    """
    t = v / ep.sin
    frac = s.theta - math.floor(s.theta)
    delta, half_log = _kernels.prufer_increment(frac, t)
    if not math.isfinite(half_log):
        raise NumericalFault("amplitude ratio is not positive", s.n)
    return PrueferState(s.n + 1, s.logR + half_log, s.theta + ep.k + delta)


@dataclass
class PrueferTrace:
    """Arrays over n = 0..L+1 plus the potential values that drove them."""

    ep: EnergyPoint
    logR: np.ndarray
    theta: np.ndarray
    V: np.ndarray
    incr: np.ndarray

    @property
    def L(self) -> int:
        return self.logR.size - 2

    def __len__(self):
        return self.logR.size

    def __getitem__(self, n) -> PrueferState:
        return PrueferState(int(n), float(self.logR[n]), float(self.theta[n]))

    def increments(self) -> np.ndarray:
        """theta(n+1) - k - theta(n) for n = 0..L."""
        return self.incr

    def increment_audit(self, slack: float = 1e-12):
        """Steps where |V(n)/sin pi k| < 1/2 but the angle increment exceeds it.

        Returns (number of audited steps, indices of violations).
        """
        t = np.abs(self.V[: self.L + 1]) / self.ep.sin
        inc = np.abs(self.increments())
        audited = t < 0.5
        bad = np.nonzero(audited & (inc > t + slack))[0]
        return int(audited.sum()), bad


def prufer_trace(p: Potential, ep: EnergyPoint, L: int) -> PrueferTrace:
    """Pruefer states for n = 0..L+1."""
    if L < 1:
        raise ValueError("L must be >= 1")
    v = _site_values(p, L)
    logR, theta, incr = _kernels.prufer_trace(v, ep.k, int(L))
    if not (np.all(np.isfinite(logR)) and np.all(np.isfinite(theta))):
        bad = int(np.argmin(np.isfinite(logR) & np.isfinite(theta)))
        raise NumericalFault("non-finite Pruefer trace", bad)
    return PrueferTrace(ep, logR, theta, v[: L + 1], incr)


def matrix_route_states(p: Potential, ep: EnergyPoint, L: int):
    """Pruefer pairs computed from the recurrence solution, n = 0..L+1.

    Independent of the angle/amplitude recursion; used as its oracle.
    Returns (logR, theta mod 1).
    """
    v = _site_values(p, L)
    u, ls = _kernels.dirichlet_solution(v, ep.E, int(L))
    logR = np.empty(L + 2)
    th = np.empty(L + 2)
    for n in range(L + 2):
        # slot n holds u(n-1); both entries of a pair share one scale
        up, uc = u[n], u[n + 1]
        shift = ls[n + 1] - ls[n]
        if shift:
            up *= math.exp(-shift)
        R, t = prufer_from_vector(up, uc, ep)
        logR[n] = math.log(R) + ls[n + 1]
        th[n] = t % 1.0
    return logR, th


def log_amplitude_identity(p: Potential, ep: EnergyPoint, L: int):
    """Compare 2 ln R(L) - 2 ln R(1) with its linearisation.

    Returns (lhs, rhs_sum, residual) with
    rhs_sum = -sum_{n=1}^{L-1} V(n)/sin(pi k) * sin(2 pi theta(n)).
    """
    if L < 2:
        raise ValueError("L must be >= 2")
    v = _site_values(p, L)
    row = _kernels.prufer_summary(v, np.array([ep.k]), int(L))[0]
    lhs = 2.0 * (row[0] - row[1])
    rhs = row[4]
    return lhs, rhs, lhs - rhs


def residual_bound(p: Potential, ep: EnergyPoint, L: int) -> float:
    """Upper bound on |residual| of :func:`log_amplitude_identity`.

    Per step the residual is ln(1 - t sin 2a + t^2 sin^2 a) + t sin 2a with
    t = V(n)/sin(pi k); its modulus never exceeds t^2, so the sum of t^2 over
    the steps bounds the total.
    """
    t = p.values(1, L) / ep.sin
    return float(np.sum(t * t))
