"""Compiled inner loops.

Everything here works on plain float arrays; the public modules wrap these
with validation and domain types.  Site indexing: ``v[n]`` is V(n).
"""

import math

import numpy as np
from numba import njit

_BIG = 1e150
_SMALL = 1e-150
_LOG_BIG = math.log(_BIG)


@njit(cache=True, nogil=True)
def prufer_increment(frac, t):
    """One angle/amplitude update at angle ``frac`` (mod 1) with t = v/sin(pi k).

    Returns (delta, half_log_ratio) where theta(n+1) = theta(n) + k + delta.
    delta is the continuous lift from t = 0 (atan2 principal branch).
    """
    a = math.pi * frac
    sa = math.sin(a)
    ca = math.cos(a)
    w = ca - t * sa
    ratio = w * w + sa * sa
    delta = math.atan2(t * sa * sa, 1.0 - t * sa * ca) / math.pi
    return delta, 0.5 * math.log(ratio)


@njit(cache=True, nogil=True)
def prufer_trace(v, k, L):
    """States n = 0..L+1 for the Dirichlet solution; step n -> n+1 uses v[n].

    Also returns the exact angle increments theta(n+1) - k - theta(n), which
    the unwrapped theta array cannot resolve to roundoff once it is large.
    """
    s = math.sin(math.pi * k)
    logR = np.empty(L + 2)
    theta = np.empty(L + 2)
    incr = np.empty(L + 1)
    logR[0] = -math.log(s)
    theta[0] = 0.0
    frac = 0.0
    whole = 0.0
    lr = logR[0]
    for n in range(L + 1):
        d, h = prufer_increment(frac, v[n] / s)
        incr[n] = d
        lr += h
        frac += k + d
        fl = math.floor(frac)
        frac -= fl
        whole += fl
        logR[n + 1] = lr
        theta[n + 1] = whole + frac
    return logR, theta, incr


@njit(cache=True, nogil=True)
def prufer_summary(v, ks, L):
    """Per k: logR(L), logR(1), sum_{n=1}^{L} v[n] sin 2pi theta(n),
    sum_{n=1}^{L-1} of the exact log-ratio, and of its linear part."""
    m = ks.shape[0]
    out = np.empty((m, 5))
    for j in range(m):
        k = ks[j]
        s = math.sin(math.pi * k)
        # state 1 is the Dirichlet state (u(0), u(1)) = (0, 1)
        frac = k
        lr = -math.log(s)
        lr1 = lr
        phase_sum = 0.0
        exact = 0.0
        linear = 0.0
        for n in range(1, L + 1):
            s2 = math.sin(2.0 * math.pi * frac)
            phase_sum += v[n] * s2
            if n == L:
                break
            t = v[n] / s
            d, h = prufer_increment(frac, t)
            exact += 2.0 * h
            linear -= t * s2
            lr += h
            frac += k + d
            frac -= math.floor(frac)
        out[j, 0] = lr
        out[j, 1] = lr1
        out[j, 2] = phase_sum
        out[j, 3] = exact
        out[j, 4] = linear
    return out


@njit(cache=True, nogil=True)
def transfer_columns(v, Es, L):
    """T = S(L)...S(1) for each energy, S(n) = [[0, 1], [-1, E - v[n]]].

    Returns an (m, 5) array of a, b, c, d and the log of the common scale
    factor, so that the true matrix is exp(scale) * [[a, b], [c, d]].
    """
    m = Es.shape[0]
    out = np.empty((m, 5))
    for j in range(m):
        E = Es[j]
        # columns: image of (1, 0) and of (0, 1)
        x0, x1 = 1.0, 0.0
        y0, y1 = 0.0, 1.0
        sc = 0.0
        for n in range(1, L + 1):
            g = E - v[n]
            x0, x1 = x1, g * x1 - x0
            y0, y1 = y1, g * y1 - y0
            if (n & 15) == 0:
                big = max(abs(x0), abs(x1), abs(y0), abs(y1))
                if big > _BIG:
                    x0 *= _SMALL
                    x1 *= _SMALL
                    y0 *= _SMALL
                    y1 *= _SMALL
                    sc += _LOG_BIG
        out[j, 0] = x0
        out[j, 1] = y0
        out[j, 2] = x1
        out[j, 3] = y1
        out[j, 4] = sc
    return out


@njit(cache=True, nogil=True)
def dirichlet_solution(v, E, L):
    """u(-1..L+1) for u(0) = 0, u(1) = 1, rescaled in blocks.

    Returns (u, logscale) where logscale[i] is the log factor for u[i]; the
    slot i holds u(i - 1).
    """
    u = np.empty(L + 3)
    ls = np.zeros(L + 3)
    u[0] = -1.0
    u[1] = 0.0
    u[2] = 1.0
    sc = 0.0
    for n in range(1, L + 1):
        u[n + 2] = (E - v[n]) * u[n + 1] - u[n]
        ls[n + 2] = sc
        if abs(u[n + 2]) > _BIG:
            u[n + 1] *= _SMALL
            u[n + 2] *= _SMALL
            sc += _LOG_BIG
            ls[n + 1] = sc
            ls[n + 2] = sc
    return u, ls


@njit(cache=True, nogil=True)
def weyl_backward(v, zs, ws, L):
    """m(z) = -u(1)/u(0) for the solution equal to exp(-i pi w n) for n >= L."""
    m = zs.shape[0]
    out = np.empty(m, dtype=np.complex128)
    for j in range(m):
        z = zs[j]
        # normalise u(L) = 1; only the ratio matters
        up1 = np.exp(-1j * math.pi * ws[j])
        u = 1.0 + 0.0j
        for n in range(L, 0, -1):
            um1 = (z - v[n]) * u - up1
            up1 = u
            u = um1
            if abs(u) > _BIG:
                u *= _SMALL
                up1 *= _SMALL
        out[j] = -up1 / u
    return out


@njit(cache=True, nogil=True)
def sturm_batch(d, lams):
    """Characteristic-sequence data for the Jacobi matrix with diagonal ``d``
    and unit off-diagonals, at each trial value.

    p_0 = 1, p_{i+1} = (lambda - d_i) p_i - p_{i-1}.  Returns an (m, 3)
    array: sign changes of p_0..p_N (= number of eigenvalues above lambda),
    the normalised value p_N / |(p_{N-1}, p_N)|, and -log sum_{n<N} p_n^2
    (the log squared first eigenvector component when lambda is an
    eigenvalue).  The trial values form the inner loop so it vectorises.
    """
    N = d.shape[0]
    m = lams.shape[0]
    pm = np.ones(m)
    pp = np.zeros(m)
    ssq = np.zeros(m)
    logsc = np.zeros(m)
    changes = np.zeros(m)
    neg = np.zeros(m)
    for i in range(N):
        di = d[i]
        for j in range(m):
            ssq[j] += pm[j] * pm[j]
            p = (lams[j] - di) * pm[j] - pp[j]
            pp[j] = pm[j]
            pm[j] = p
            ng = 1.0 if p < 0.0 else 0.0
            changes[j] += abs(ng - neg[j])
            neg[j] = ng
        if (i & 31) == 31:
            for j in range(m):
                if abs(pm[j]) > _BIG:
                    pm[j] *= _SMALL
                    pp[j] *= _SMALL
                    ssq[j] *= _SMALL * _SMALL
                    logsc[j] += 2.0 * _LOG_BIG
    out = np.empty((m, 3))
    for j in range(m):
        out[j, 0] = changes[j]
        out[j, 1] = pm[j] / math.sqrt(pm[j] * pm[j] + pp[j] * pp[j])
        out[j, 2] = -(math.log(ssq[j]) + logsc[j])
    return out


@njit(cache=True, nogil=True)
def twisted_weight(d, lam):
    """Squared first eigenvector component at an (approximate) eigenvalue.

    Joins the forward solution (v_0 = 0, v_1 = 1) and the backward one
    (v_{N+1} = 0, v_N = 1) at the index maximising |f_n g_n|, which keeps
    the growing mode of either recursion out of the eigenvector.  Returns
    the log of the weight.
    """
    N = d.shape[0]
    lf = np.empty(N + 2)
    lg = np.empty(N + 2)
    # forward, stored as log|f_n| with sign-free magnitudes
    a, b = 0.0, 1.0
    sc = 0.0
    lf[0] = -np.inf
    lf[1] = 0.0
    for n in range(1, N + 1):
        a, b = b, (lam - d[n - 1]) * b - a
        if abs(b) > _BIG or (abs(b) < _SMALL and abs(a) < _SMALL):
            f = 1.0 / max(abs(a), abs(b))
            a *= f
            b *= f
            sc -= math.log(f)
        lf[n + 1] = math.log(abs(b)) + sc if b != 0.0 else -np.inf
    a, b = 0.0, 1.0
    sc = 0.0
    lg[N + 1] = -np.inf
    lg[N] = 0.0
    for n in range(N, 1, -1):
        a, b = b, (lam - d[n - 1]) * b - a
        if abs(b) > _BIG or (abs(b) < _SMALL and abs(a) < _SMALL):
            f = 1.0 / max(abs(a), abs(b))
            a *= f
            b *= f
            sc -= math.log(f)
        lg[n - 1] = math.log(abs(b)) + sc if b != 0.0 else -np.inf
    r = 1
    best = -np.inf
    for n in range(1, N + 1):
        if lf[n] + lg[n] > best:
            best = lf[n] + lg[n]
            r = n
    s = 0.0
    for n in range(1, r + 1):
        s += math.exp(2.0 * (lf[n] - lf[r]))
    for n in range(r + 1, N + 1):
        s += math.exp(2.0 * (lg[n] - lg[r]))
    return -2.0 * lf[r] - math.log(s)
