"""Hot numeric kernels.

Every kernel exists twice: a numba ``@njit`` loop and a pure numpy/scipy
version.  The numba path is used when numba imports and the environment
variable ``DEGENLAB_NUMBA`` is not set to ``0``.  Both paths are importable
directly (``NUMBA_KERNELS`` / ``NUMPY_KERNELS``) so tests and the benchmark
can compare them.
"""

from __future__ import annotations

import os
from types import SimpleNamespace

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

PIVOT_TINY = 1e-300


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------


def np_thomas(lower, diag, upper, rhs):
    """Solve a tridiagonal system; returns ``(x, ok)``.

    ``lower[i]`` multiplies ``x[i-1]`` and ``upper[i]`` multiplies ``x[i+1]``
    in row ``i``; ``lower[0]`` and ``upper[-1]`` are ignored.
    """
    n = diag.shape[0]
    ab = np.zeros((3, n))
    ab[0, 1:] = upper[:-1]
    ab[1] = diag
    ab[2, :-1] = lower[1:]
    try:
        x = solve_banded((1, 1), ab, rhs)
    except (LinAlgError, ValueError):
        return np.full(n, np.nan), False
    return x, bool(np.all(np.isfinite(x)))


def np_march(kl, kd, ku, kl_b, ku_b, mass_x, react_x, a_t, c0_t, a0_t,
             lam, dt, theta, startup, loads, bl, br, u0):
    m = a_t.shape[0]
    n = kd.shape[0]
    out = np.empty((m + 1, n))
    out[0] = u0
    v = u0.copy()
    for k in range(m):
        if k < startup:
            sub = ((0.5 * dt, 1.0, 0.0, 0.5), (0.5 * dt, 1.0, 0.5, 1.0))
        else:
            sub = ((dt, theta, 0.0, 1.0),)
        for h, th, w0, w1 in sub:
            g0 = (1.0 - w0) * loads[k] + w0 * loads[k + 1]
            g1 = (1.0 - w1) * loads[k] + w1 * loads[k + 1]
            b0 = (1.0 - w0) * bl[k] + w0 * bl[k + 1]
            b1 = (1.0 - w1) * bl[k] + w1 * bl[k + 1]
            c0 = (1.0 - w0) * br[k] + w0 * br[k + 1]
            c1 = (1.0 - w1) * br[k] + w1 * br[k + 1]
            ak = a_t[k]
            mk = a0_t[k] * mass_x / h
            rk = lam * c0_t[k] * react_x
            av = ak * kd * v + rk * v
            av[1:] += ak * kl[1:] * v[:-1]
            av[:-1] += ak * ku[:-1] * v[1:]
            rhs = mk * v - (1.0 - th) * av + th * g1 + (1.0 - th) * g0
            rhs[0] -= ak * kl_b * (th * b1 + (1.0 - th) * b0)
            rhs[-1] -= ak * ku_b * (th * c1 + (1.0 - th) * c0)
            v, ok = np_thomas(th * ak * kl, mk + th * (ak * kd + rk), th * ak * ku, rhs)
            if not ok:
                out[k + 1:] = np.nan
                return out, False
        out[k + 1] = v
    return out, True


def _power_integral_np(lo, hi, e, delta):
    """Integral of |t|^e over (lo, hi) minus (-delta, delta), vectorized."""
    def prim(x):
        ax = np.abs(x)
        if e == -1.0:
            return np.sign(x) * np.log(np.where(ax > 0, ax, 1.0))
        return np.sign(x) * ax ** (e + 1.0) / (e + 1.0)

    total = np.zeros_like(lo)
    left_hi = np.minimum(hi, -delta)
    mask = lo < left_hi
    total[mask] += prim(left_hi[mask]) - prim(lo[mask])
    right_lo = np.maximum(lo, delta)
    mask = right_lo < hi
    total[mask] += prim(hi[mask]) - prim(right_lo[mask])
    return total


def np_ap_sup(lo, hi, a, b, p, eps):
    """max over intervals of avg(|t|^a) * avg(|t|^b)^(p-1).

    Exponents that are negative have the window |t| < eps*|I| removed from
    the integral (the average still divides by |I|).
    """
    length = hi - lo
    da = eps * length if a < 0 else np.zeros_like(length)
    db = eps * length if b < 0 else np.zeros_like(length)
    ia = _power_integral_np(lo, hi, a, da) / length
    ib = _power_integral_np(lo, hi, b, db) / length
    vals = ia * ib ** (p - 1.0)
    return float(np.max(vals))


def _overlap_np(a, b, t, r):
    """|E ∩ (t-r, t+r)| for each radius in r."""
    left = np.maximum(a[None, :], (t - r)[:, None])
    right = np.minimum(b[None, :], (t + r)[:, None])
    return np.clip(right - left, 0.0, None).sum(axis=1)


def np_critical_radii(a, b, centers, gamma):
    """Largest r with |E ∩ C_r(t)| = gamma |C_r(t)| for each center t.

    ``nan`` where no such radius exists.  Uses that r -> |E ∩ C_r(t)| is
    piecewise linear with breakpoints |t - endpoint|.
    """
    out = np.full(centers.shape[0], np.nan)
    total = float(np.sum(b - a))
    if total <= 0.0:
        return out
    ends = np.concatenate((a, b))
    for i, t in enumerate(centers):
        brk = np.unique(np.abs(ends - t))
        brk = brk[brk > 0.0]
        r_far = total / (2.0 * gamma)
        if brk.size == 0 or r_far >= brk[-1]:
            out[i] = r_far
            continue
        nodes = np.concatenate(([0.0], brk))
        meas = _overlap_np(a, b, t, nodes)
        for k in range(nodes.size - 2, -1, -1):
            r0, r1 = nodes[k], nodes[k + 1]
            s = (meas[k + 1] - meas[k]) / (r1 - r0)
            c = meas[k] - s * r0
            den = 2.0 * gamma - s
            if abs(den) < 1e-14:
                if abs(c) <= 1e-14 * max(1.0, total):
                    out[i] = r1
                    break
                continue
            r = c / den
            if r0 - 1e-15 * r1 <= r <= r1 * (1 + 1e-15) and r > 0.0:
                out[i] = r
                break
    return out


# ---------------------------------------------------------------------------
# numba implementations
# ---------------------------------------------------------------------------

if HAVE_NUMBA:

    @njit(cache=True)
    def nb_thomas(lower, diag, upper, rhs):
        n = diag.shape[0]
        cp = np.empty(n)
        dp = np.empty(n)
        x = np.empty(n)
        scale = 0.0
        for i in range(n):
            s = abs(diag[i]) + abs(lower[i]) + abs(upper[i])
            if s > scale:
                scale = s
        piv = diag[0]
        if abs(piv) <= 1e-14 * scale or abs(piv) < PIVOT_TINY:
            x[:] = np.nan
            return x, False
        cp[0] = upper[0] / piv
        dp[0] = rhs[0] / piv
        for i in range(1, n):
            piv = diag[i] - lower[i] * cp[i - 1]
            if abs(piv) <= 1e-14 * scale or abs(piv) < PIVOT_TINY:
                x[:] = np.nan
                return x, False
            cp[i] = upper[i] / piv
            dp[i] = (rhs[i] - lower[i] * dp[i - 1]) / piv
        x[n - 1] = dp[n - 1]
        for i in range(n - 2, -1, -1):
            x[i] = dp[i] - cp[i] * x[i + 1]
        return x, True

    @njit(cache=True)
    def nb_march(kl, kd, ku, kl_b, ku_b, mass_x, react_x, a_t, c0_t, a0_t,
                 lam, dt, theta, startup, loads, bl, br, u0):
        m = a_t.shape[0]
        n = kd.shape[0]
        out = np.empty((m + 1, n))
        out[0] = u0
        v = u0.copy()
        lo = np.empty(n)
        di = np.empty(n)
        up = np.empty(n)
        rhs = np.empty(n)
        for k in range(m):
            nsub = 2 if k < startup else 1
            for j in range(nsub):
                if nsub == 2:
                    h = 0.5 * dt
                    th = 1.0
                    w0 = 0.5 * j
                    w1 = 0.5 * (j + 1)
                else:
                    h = dt
                    th = theta
                    w0 = 0.0
                    w1 = 1.0
                ak = a_t[k]
                b0 = (1.0 - w0) * bl[k] + w0 * bl[k + 1]
                b1 = (1.0 - w1) * bl[k] + w1 * bl[k + 1]
                c0 = (1.0 - w0) * br[k] + w0 * br[k + 1]
                c1 = (1.0 - w1) * br[k] + w1 * br[k + 1]
                for i in range(n):
                    mk = a0_t[k] * mass_x[i] / h
                    rk = lam * c0_t[k] * react_x[i]
                    av = (ak * kd[i] + rk) * v[i]
                    if i > 0:
                        av += ak * kl[i] * v[i - 1]
                    if i < n - 1:
                        av += ak * ku[i] * v[i + 1]
                    g0 = (1.0 - w0) * loads[k, i] + w0 * loads[k + 1, i]
                    g1 = (1.0 - w1) * loads[k, i] + w1 * loads[k + 1, i]
                    rhs[i] = mk * v[i] - (1.0 - th) * av + th * g1 + (1.0 - th) * g0
                    lo[i] = th * ak * kl[i]
                    di[i] = mk + th * (ak * kd[i] + rk)
                    up[i] = th * ak * ku[i]
                rhs[0] -= ak * kl_b * (th * b1 + (1.0 - th) * b0)
                rhs[n - 1] -= ak * ku_b * (th * c1 + (1.0 - th) * c0)
                v, ok = nb_thomas(lo, di, up, rhs)
                if not ok:
                    for kk in range(k + 1, m + 1):
                        out[kk] = np.nan
                    return out, False
            out[k + 1] = v
        return out, True

    @njit(cache=True)
    def _prim(x, e):
        ax = abs(x)
        sg = 1.0 if x > 0 else (-1.0 if x < 0 else 0.0)
        if e == -1.0:
            if ax == 0.0:
                return 0.0
            return sg * np.log(ax)
        return sg * ax ** (e + 1.0) / (e + 1.0)

    @njit(cache=True)
    def _power_integral(lo, hi, e, delta):
        total = 0.0
        lh = min(hi, -delta)
        if lo < lh:
            total += _prim(lh, e) - _prim(lo, e)
        rl = max(lo, delta)
        if rl < hi:
            total += _prim(hi, e) - _prim(rl, e)
        return total

    @njit(cache=True)
    def nb_ap_sup(lo, hi, a, b, p, eps):
        best = -np.inf
        for i in range(lo.shape[0]):
            length = hi[i] - lo[i]
            da = eps * length if a < 0 else 0.0
            db = eps * length if b < 0 else 0.0
            ia = _power_integral(lo[i], hi[i], a, da) / length
            ib = _power_integral(lo[i], hi[i], b, db) / length
            val = ia * ib ** (p - 1.0)
            if val > best:
                best = val
        return best

    @njit(cache=True)
    def _overlap(a, b, t, r):
        s = 0.0
        for i in range(a.shape[0]):
            left = max(a[i], t - r)
            right = min(b[i], t + r)
            if right > left:
                s += right - left
        return s

    @njit(cache=True)
    def nb_critical_radii(a, b, centers, gamma):
        out = np.full(centers.shape[0], np.nan)
        total = 0.0
        for i in range(a.shape[0]):
            total += b[i] - a[i]
        if total <= 0.0:
            return out
        ends = np.concatenate((a, b))
        for ic in range(centers.shape[0]):
            t = centers[ic]
            brk = np.unique(np.abs(ends - t))
            r_far = total / (2.0 * gamma)
            if brk[-1] <= 0.0 or r_far >= brk[-1]:
                out[ic] = r_far
                continue
            cnt = 0
            for x in brk:
                if x > 0.0:
                    cnt += 1
            nodes = np.empty(cnt + 1)
            nodes[0] = 0.0
            j = 1
            for x in brk:
                if x > 0.0:
                    nodes[j] = x
                    j += 1
            meas = np.empty(cnt + 1)
            for j in range(cnt + 1):
                meas[j] = _overlap(a, b, t, nodes[j])
            for k in range(cnt - 1, -1, -1):
                r0 = nodes[k]
                r1 = nodes[k + 1]
                s = (meas[k + 1] - meas[k]) / (r1 - r0)
                c = meas[k] - s * r0
                den = 2.0 * gamma - s
                if abs(den) < 1e-14:
                    if abs(c) <= 1e-14 * max(1.0, total):
                        out[ic] = r1
                        break
                    continue
                r = c / den
                if r0 - 1e-15 * r1 <= r <= r1 * (1 + 1e-15) and r > 0.0:
                    out[ic] = r
                    break
        return out


NUMPY_KERNELS = SimpleNamespace(
    name="numpy",
    thomas=np_thomas,
    march=np_march,
    ap_sup=np_ap_sup,
    critical_radii=np_critical_radii,
)

if HAVE_NUMBA:
    NUMBA_KERNELS = SimpleNamespace(
        name="numba",
        thomas=nb_thomas,
        march=nb_march,
        ap_sup=nb_ap_sup,
        critical_radii=nb_critical_radii,
    )
else:  # pragma: no cover
    NUMBA_KERNELS = None


def use_numba() -> bool:
    return HAVE_NUMBA and os.environ.get("DEGENLAB_NUMBA", "1") != "0"


def active():
    """Kernel namespace chosen by the environment at call time."""
    return NUMBA_KERNELS if use_numba() else NUMPY_KERNELS
