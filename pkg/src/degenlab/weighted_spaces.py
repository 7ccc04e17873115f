"""Weighted norms on the half line, the dyadic cutoff family, Hardy checks
and Muckenhoupt constants.

Functions on (0, inf) are stored on uniform grids in ``s = log x``.  In
these coordinates ``x^(theta-1) dx = e^(theta s) ds`` and ``x d/dx = d/ds``,
so every weighted integral below is an exponentially weighted integral in
``s``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import simpson

from . import _kernels
from .errors import CoverageError, InvalidFunction, InvalidSpec, SupportError

LINEAR = "linear"
MIDPOINT = "midpoint"
_INTERPS = (LINEAR, MIDPOINT)

HARDY_FLOOR = 1e-30


@dataclass(frozen=True, eq=False)
class SampledFunction:
    """Values at ``x_j = exp(s_min + j h)``, zero outside the grid.

    ``interp`` is ``"linear"`` (smooth samples, Simpson quadrature) or
    ``"midpoint"`` (value held constant on the dual cell around each node).
    ``derivative`` optionally carries exact nodal values of ``x u'(x)``;
    when absent, centered differences in ``s`` are used.
    """

    s_min: float
    h: float
    values: np.ndarray
    interp: str = LINEAR
    derivative: Optional[np.ndarray] = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 1 or vals.size < 3:
            raise InvalidFunction("need at least 3 nodes (n >= 2)")
        if not (self.h > 0 and math.isfinite(self.h) and math.isfinite(self.s_min)):
            raise InvalidFunction(f"bad grid: s_min={self.s_min}, h={self.h}")
        if not np.all(np.isfinite(vals)):
            raise InvalidFunction("non-finite values")
        if self.interp not in _INTERPS:
            raise InvalidFunction(f"unknown interp {self.interp!r}")
        if self.derivative is not None:
            d = np.asarray(self.derivative, dtype=float)
            if d.shape != vals.shape or not np.all(np.isfinite(d)):
                raise InvalidFunction("derivative must be finite and match values")
            object.__setattr__(self, "derivative", d)

    @classmethod
    def from_log(cls, fn: Callable, s_min: float, s_max: float, n: int,
                 dfn: Optional[Callable] = None, interp: str = LINEAR) -> "SampledFunction":
        """Sample ``v(s)`` (and optionally ``v'(s)``) on ``n`` nodes."""
        s = np.linspace(s_min, s_max, n)
        h = (s_max - s_min) / (n - 1)
        d = None if dfn is None else dfn(s)
        return cls(s_min, h, fn(s), interp, d)

    @classmethod
    def from_x(cls, fn: Callable, x_min: float, x_max: float, n: int,
               dfn: Optional[Callable] = None, interp: str = LINEAR) -> "SampledFunction":
        """Sample ``u(x)``; ``dfn`` is ``u'(x)`` if given."""
        s = np.linspace(math.log(x_min), math.log(x_max), n)
        x = np.exp(s)
        d = None if dfn is None else x * dfn(x)
        return cls(s[0], (s[-1] - s[0]) / (n - 1), fn(x), interp, d)

    @property
    def n(self) -> int:
        return self.values.size - 1

    @property
    def s(self) -> np.ndarray:
        return self.s_min + self.h * np.arange(self.values.size)

    @property
    def x(self) -> np.ndarray:
        return np.exp(self.s)

    @property
    def s_max(self) -> float:
        return self.s_min + self.h * self.n

    def log_derivative(self) -> np.ndarray:
        """Nodal ``x u'(x) = dv/ds``."""
        if self.derivative is not None:
            return self.derivative
        return np.gradient(self.values, self.h, edge_order=2)

    def at_s(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        if self.interp == LINEAR:
            out = np.interp(s, self.s, self.values, left=0.0, right=0.0)
        else:
            idx = np.floor((s - self.s_min) / self.h + 0.5).astype(int)
            ok = (idx >= 0) & (idx <= self.n) & (s >= self.s_min) & (s <= self.s_max)
            out = np.where(ok, self.values[np.clip(idx, 0, self.n)], 0.0)
        return out

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise InvalidFunction("evaluation at x <= 0")
        return self.at_s(np.log(x))

    def with_values(self, values, derivative=None) -> "SampledFunction":
        return SampledFunction(self.s_min, self.h, values, self.interp, derivative)

    def scaled(self, c: float) -> "SampledFunction":
        d = None if self.derivative is None else c * self.derivative
        return self.with_values(c * self.values, d)

    def dilated(self, log_factor: float) -> "SampledFunction":
        """``u(e^log_factor * x)`` as a new sampled function (grid shift)."""
        return SampledFunction(self.s_min - log_factor, self.h, self.values,
                               self.interp, self.derivative)

    def support(self, rel_tol: float = 0.0) -> tuple[float, float]:
        """Smallest ``[s_lo, s_hi]`` outside which |values| <= rel_tol*max."""
        mag = np.abs(self.values)
        if self.derivative is not None:
            mag = np.maximum(mag, np.abs(self.derivative))
        top = mag.max()
        if top == 0:
            return (math.nan, math.nan)
        idx = np.nonzero(mag > rel_tol * top)[0]
        s = self.s
        return (s[idx[0]], s[idx[-1]])


@dataclass(frozen=True)
class NormSpec:
    p: float
    theta: float
    q: Optional[float] = None

    def __post_init__(self):
        if not (self.p > 1 and math.isfinite(self.p)):
            raise InvalidSpec(f"p must be in (1, inf), got {self.p}")
        if not math.isfinite(self.theta):
            raise InvalidSpec("theta must be finite")
        if self.q is None:
            object.__setattr__(self, "q", self.p)
        elif not self.q > 1:
            raise InvalidSpec(f"q must be in (1, inf), got {self.q}")


def _check(u: SampledFunction, spec: NormSpec):
    if not isinstance(spec, NormSpec):
        raise InvalidSpec("spec must be a NormSpec")
    if not np.all(np.isfinite(u.values)):
        raise InvalidFunction("non-finite values")


def _midpoint_weights(u: SampledFunction, theta: float) -> np.ndarray:
    """Exact integrals of e^(theta s) over the clipped dual cells."""
    s = u.s
    lo = np.maximum(s - 0.5 * u.h, s[0])
    hi = np.minimum(s + 0.5 * u.h, s[-1])
    if theta == 0.0:
        return hi - lo
    return np.exp(theta * lo) * np.expm1(theta * (hi - lo)) / theta


def weighted_integral(u: SampledFunction, integrand: np.ndarray, theta: float) -> float:
    """Integral of ``integrand(s) e^(theta s) ds`` with the rule for ``u.interp``."""
    if u.interp == MIDPOINT:
        return float(np.dot(integrand, _midpoint_weights(u, theta)))
    return float(simpson(integrand * np.exp(theta * u.s), dx=u.h))


def lp_theta_norm(u: SampledFunction, spec: NormSpec) -> float:
    """``(int |u|^p x^(theta-1) dx)^(1/p)``."""
    _check(u, spec)
    m = _peak(u.values)
    if m == 0.0:
        return 0.0
    val = weighted_integral(u, np.abs(u.values / m) ** spec.p, spec.theta)
    return m * max(val, 0.0) ** (1.0 / spec.p)


def h1_theta_norm(u: SampledFunction, spec: NormSpec) -> float:
    """``(||u||^p + ||x u'||^p)^(1/p)`` in ``L_{p,theta}``."""
    _check(u, spec)
    p, th = spec.p, spec.theta
    d = u.log_derivative()
    m = max(_peak(u.values), _peak(d))
    if m == 0.0:
        return 0.0
    a = weighted_integral(u, np.abs(u.values / m) ** p, th)
    b = weighted_integral(u, np.abs(d / m) ** p, th)
    return m * max(a + b, 0.0) ** (1.0 / p)


def _peak(v: np.ndarray) -> float:
    # rescaling by the peak keeps |u|^p clear of under- and overflow
    return float(np.max(np.abs(v))) if v.size else 0.0


# ---------------------------------------------------------------------------
# dyadic cutoff family
# ---------------------------------------------------------------------------


def _bump(tau):
    tau = np.asarray(tau, dtype=float)
    out = np.zeros_like(tau)
    inside = np.abs(tau) < 1.0
    t2 = tau[inside] ** 2
    out[inside] = np.exp(-1.0 / (1.0 - t2))
    return out


def _bump_prime(tau):
    tau = np.asarray(tau, dtype=float)
    out = np.zeros_like(tau)
    inside = np.abs(tau) < 1.0
    t = tau[inside]
    den = 1.0 - t * t
    out[inside] = np.exp(-1.0 / den) * (-2.0 * t / den**2)
    return out


@dataclass(frozen=True)
class CutoffFamily:
    """``zeta(x) = amplitude * bump((log x - center) / halfwidth)``.

    The support in ``x`` is ``(exp(center - halfwidth), exp(center + halfwidth))``.
    ``margin`` is how far the minimum of ``sum_n zeta^p(e^(s-n))`` exceeds 1.
    """

    p: float
    center: float
    halfwidth: float
    amplitude: float
    margin: float
    shifts: range

    @property
    def support(self) -> tuple[float, float]:
        return (math.exp(self.center - self.halfwidth), math.exp(self.center + self.halfwidth))

    def profile(self, sigma):
        """zeta(e^sigma)."""
        return self.amplitude * _bump((np.asarray(sigma) - self.center) / self.halfwidth)

    def profile_prime(self, sigma):
        """d/dsigma zeta(e^sigma) = x zeta'(x)."""
        return (self.amplitude / self.halfwidth) * _bump_prime(
            (np.asarray(sigma) - self.center) / self.halfwidth)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        pos = x > 0
        out[pos] = self.profile(np.log(x[pos]))
        return out

    def covering_sum(self, s) -> np.ndarray:
        """``sum_n zeta^p(e^(s-n))`` over all integers n."""
        s = np.asarray(s, dtype=float)
        total = np.zeros_like(s)
        lo = math.floor(np.min(s) - self.center - self.halfwidth) - 1
        hi = math.ceil(np.max(s) - self.center + self.halfwidth) + 1
        for n in range(lo, hi + 1):
            total += self.profile(s - n) ** self.p
        return total


def build_cutoff(p: float, margin: float = 0.1, halfwidth: float = 1.0,
                 shifts: range = range(-80, 81)) -> CutoffFamily:
    """Smooth bump rescaled so its dyadic ``p``-sum is at least ``1 + margin``."""
    if not p > 1:
        raise InvalidSpec(f"p must exceed 1, got {p}")
    center = 0.5
    unit = CutoffFamily(p, center, halfwidth, 1.0, 0.0, shifts)
    check = np.linspace(0.0, 1.0, 10_001)
    low = float(unit.covering_sum(check).min())
    amp = ((1.0 + margin) / low) ** (1.0 / p)
    fam = CutoffFamily(p, center, halfwidth, amp, margin, shifts)
    got = fam.covering_sum(np.linspace(-3.0, 3.0, 10_000)).min()
    assert got >= 1.0, got
    return fam


def dyadic_norm(u: SampledFunction, spec: NormSpec, cut: CutoffFamily) -> float:
    """``(sum_m e^(m theta) ||u(e^m .) zeta||^p_{W^1_p})^(1/p)``."""
    _check(u, spec)
    p, th = spec.p, spec.theta
    s_lo, s_hi = u.support()
    if math.isnan(s_lo):
        return 0.0
    s_lo -= u.h
    s_hi += u.h
    m_lo = math.floor(s_lo - cut.center - cut.halfwidth)
    m_hi = math.ceil(s_hi - cut.center + cut.halfwidth)
    if m_lo < cut.shifts.start or m_hi >= cut.shifts.stop:
        raise CoverageError(
            f"shifts {cut.shifts} do not cover [{m_lo}, {m_hi}] needed by the support")
    s = u.s
    v = u.values
    dv = u.log_derivative()
    total = 0.0
    for m in range(m_lo, m_hi + 1):
        sig = s - m
        psi = cut.profile(sig)
        if not np.any(psi):
            continue
        dpsi = cut.profile_prime(sig)
        g = np.abs(v * psi) ** p * np.exp(sig)
        dg = np.abs(dv * psi + v * dpsi) ** p * np.exp((1.0 - p) * sig)
        part = simpson(g + dg, dx=u.h)
        total += math.exp(m * th) * part
    return max(total, 0.0) ** (1.0 / p)


# ---------------------------------------------------------------------------
# Hardy inequality
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class HardyReport:
    lhs: float
    rhs: float
    holds: bool
    slack: float
    tol: float
    flagged_nodes: int = 0


def hardy_check(u: SampledFunction, spec: NormSpec, tol: float = 1e-8,
                support_tol: float = 1e-12) -> HardyReport:
    """Both sides of ``(|theta|/p)^2 int |u|^p x^(theta-1) <= int |u|^(p-2) (u')^2 x^(theta+1)``.

    For ``p < 2`` the factor ``|u|^(p-2)`` uses ``max(|u|, 1e-30)``; nodes
    where that floor is active while ``u' != 0`` are counted in
    ``flagged_nodes``.
    """
    _check(u, spec)
    p, th = spec.p, spec.theta
    v = u.values
    top = np.abs(v).max()
    if top > 0 and max(abs(v[0]), abs(v[-1])) > support_tol * top:
        raise SupportError("function does not vanish at the grid ends")
    dv = u.log_derivative()
    lhs = (th * th) / (p * p) * weighted_integral(u, np.abs(v) ** p, th)
    mag = np.abs(v)
    flagged = 0
    if p < 2:
        floor = mag < HARDY_FLOOR
        flagged = int(np.count_nonzero(floor & (dv != 0)))
        mag = np.maximum(mag, HARDY_FLOOR)
        weight = np.where(dv != 0, mag ** (p - 2.0), 0.0)
    else:
        weight = mag ** (p - 2.0)
    rhs = weighted_integral(u, weight * dv * dv, th)
    holds = bool(lhs <= rhs * (1.0 + tol))
    return HardyReport(lhs, rhs, holds, rhs - lhs, tol, flagged)


# ---------------------------------------------------------------------------
# Muckenhoupt weights on the time axis
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TimeWeight:
    """``1`` or ``|t|^a`` on the real line."""

    kind: str = "one"
    a: float = 0.0

    def __post_init__(self):
        if self.kind not in ("one", "power"):
            raise InvalidSpec(f"unknown weight kind {self.kind!r}")
        if self.kind == "power" and not self.a > -1:
            raise InvalidSpec("power weight needs a > -1 for local integrability")

    @classmethod
    def one(cls) -> "TimeWeight":
        return cls("one", 0.0)

    @classmethod
    def power(cls, a: float) -> "TimeWeight":
        return cls("power", float(a))

    @property
    def exponent(self) -> float:
        return 0.0 if self.kind == "one" else self.a

    def __call__(self, t):
        return np.abs(np.asarray(t, dtype=float)) ** self.exponent

    def measure(self, lo, hi):
        """Exact ``int_lo^hi w(t) dt`` (vectorized)."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        e = self.exponent
        if e == 0.0:
            return np.maximum(hi - lo, 0.0)

        def prim(t):
            return np.sign(t) * np.abs(t) ** (e + 1.0) / (e + 1.0)

        return np.where(hi > lo, prim(hi) - prim(lo), 0.0)

    def in_ap(self, p: float) -> bool:
        """Closed-form membership test: ``-1 < a < p - 1``."""
        return self.kind == "one" or (-1.0 < self.a < p - 1.0)


def ap_interval_family(resolution: int) -> tuple[np.ndarray, np.ndarray]:
    """Scan family: lengths ``2^-K..2^K`` and centers ``L j / 8``, ``|j| <= N``.

    Nested in ``resolution``; ``j = +-4`` gives the intervals abutting 0.
    """
    k = int(math.floor(math.log2(resolution)))
    lengths = 2.0 ** np.arange(-k, k + 1)
    j = np.arange(-resolution, resolution + 1) / 8.0
    centers = lengths[:, None] * j[None, :]
    lo = (centers - 0.5 * lengths[:, None]).ravel()
    hi = (centers + 0.5 * lengths[:, None]).ravel()
    return lo, hi


def ap_constant_estimate(w: TimeWeight, p: float, resolution: int) -> float:
    """Lower estimate of ``[w]_{A_p}`` from a finite interval scan.

    Negative exponents are integrated with the window ``|t| < |I|/N^2``
    excised, so a weight outside ``A_p`` yields a finite value that grows
    with ``resolution = N``.  Nondecreasing in ``N``.
    """
    if not p > 1:
        raise InvalidSpec(f"p must exceed 1, got {p}")
    if resolution < 16:
        raise InvalidSpec("resolution must be at least 16")
    if w.kind == "one":
        return 1.0
    lo, hi = ap_interval_family(resolution)
    dual = -w.a / (p - 1.0)
    eps = float(resolution) ** -2
    return float(_kernels.active().ap_sup(lo, hi, w.a, dual, float(p), eps))


def ap_diverges(w: TimeWeight, p: float, resolution: int = 2**8, factor: float = 1.5) -> bool:
    """Divergence detector: the estimate grows by more than ``factor`` over
    two resolution doublings."""
    a = ap_constant_estimate(w, p, resolution)
    b = ap_constant_estimate(w, p, 4 * resolution)
    return b > factor * a
