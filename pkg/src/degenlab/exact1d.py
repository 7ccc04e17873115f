"""Closed-form machinery in one space dimension.

Covers the indicial quadratic and its theta-window, the gauge transform
``v = x^gamma u``, the exact solution of the equidimensional (Euler)
equation

    -x^2 (a u')' + b x u' + x (bhat u)' + c u = F' + f     on (0, inf)

by variation of parameters, and the Black-Scholes transition density.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy import integrate
from scipy.special import ndtr

from .errors import (DegenerateRoots, DomainError, ForbiddenExponent, InvalidSpec,
                     QuadratureError)
from .weighted_spaces import MIDPOINT, SampledFunction

TOL_DISC = 1e-10
FORBIDDEN_TOL = 1e-8

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


# ---------------------------------------------------------------------------
# indicial roots and the theta window
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LowerOrderRatios:
    n_b: float = 0.0
    n_bhat: float = 0.0
    n_c: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.n_b, self.n_bhat, self.n_c)):
            raise InvalidSpec("ratios must be finite")


@dataclass(frozen=True)
class IndicialRoots:
    alpha: float
    beta: float


def indicial_roots(ratios: LowerOrderRatios) -> IndicialRoots:
    """Roots of ``z^2 + (1 + n_b + n_bhat) z - n_c = 0``, ordered."""
    b = 1.0 + ratios.n_b + ratios.n_bhat
    disc = b * b + 4.0 * ratios.n_c
    if disc <= TOL_DISC:
        raise DegenerateRoots(f"discriminant {disc:.3e} is not positive")
    sq = math.sqrt(disc)
    q = -0.5 * (b + math.copysign(sq, b) if b != 0 else sq)
    r1 = q
    r2 = -ratios.n_c / q
    return IndicialRoots(min(r1, r2), max(r1, r2))


@dataclass(frozen=True)
class ThetaWindow:
    """Interior window ``(alpha p, beta p)``; in d = 1 the two rays outside
    it are solvable too, only the endpoints are excluded."""

    lower: float
    upper: float

    @property
    def interior(self) -> tuple[float, float]:
        return (self.lower, self.upper)

    @property
    def forbidden(self) -> tuple[float, float]:
        return (self.lower, self.upper)

    @property
    def rays(self) -> tuple[tuple[float, float], tuple[float, float]]:
        return ((-math.inf, self.lower), (self.upper, math.inf))

    def classify(self, theta: float, tol: float = FORBIDDEN_TOL) -> str:
        if abs(theta - self.lower) <= tol or abs(theta - self.upper) <= tol:
            return "forbidden"
        if theta < self.lower:
            return "below"
        if theta > self.upper:
            return "above"
        return "interior"

    def __contains__(self, theta: float) -> bool:
        return self.lower < theta < self.upper


def admissible_theta(roots: IndicialRoots, p: float) -> ThetaWindow:
    if not p > 1:
        raise InvalidSpec(f"p must exceed 1, got {p}")
    return ThetaWindow(roots.alpha * p, roots.beta * p)


def normalizing_gamma(p: float, theta: float, ratios: LowerOrderRatios) -> float:
    """``gamma`` with ``(2 - 2p) gamma + theta + 1 + n_b - (p - 1) n_bhat = 0``."""
    if p == 1:
        raise InvalidSpec("p must differ from 1")
    return (theta + 1.0 + ratios.n_b - (p - 1.0) * ratios.n_bhat) / (2.0 * p - 2.0)


# ---------------------------------------------------------------------------
# forcing data
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PowerPiece:
    """``coef * x^power`` on ``[x_lo, x_hi)``."""

    x_lo: float
    x_hi: float
    coef: float = 1.0
    power: float = 0.0

    def __post_init__(self):
        if not 0 < self.x_lo < self.x_hi < math.inf:
            raise InvalidSpec(f"piece needs 0 < x_lo < x_hi < inf, got {self.x_lo}, {self.x_hi}")


@dataclass(frozen=True)
class SampledTerm:
    """``coef * x^power * func(x)``."""

    func: SampledFunction
    coef: float = 1.0
    power: float = 0.0


@dataclass(frozen=True)
class Forcing:
    """Finite sum of power pieces and (power-weighted) sampled functions."""

    pieces: tuple = ()
    samples: tuple = ()

    @classmethod
    def zero(cls) -> "Forcing":
        return cls()

    @classmethod
    def indicator(cls, x_lo: float, x_hi: float, coef: float = 1.0) -> "Forcing":
        return cls((PowerPiece(x_lo, x_hi, coef, 0.0),))

    @classmethod
    def sampled(cls, func: SampledFunction) -> "Forcing":
        return cls((), (SampledTerm(func),))

    @property
    def is_zero(self) -> bool:
        return all(pc.coef == 0 for pc in self.pieces) and all(
            t.coef == 0 or not np.any(t.func.values) for t in self.samples)

    def __add__(self, other: "Forcing") -> "Forcing":
        return Forcing(self.pieces + other.pieces, self.samples + other.samples)

    def scaled(self, c: float) -> "Forcing":
        return Forcing(tuple(replace(pc, coef=c * pc.coef) for pc in self.pieces),
                       tuple(replace(t, coef=c * t.coef) for t in self.samples))

    def times_power(self, gamma: float) -> "Forcing":
        """Multiply by ``x^gamma``."""
        return Forcing(tuple(replace(pc, power=pc.power + gamma) for pc in self.pieces),
                       tuple(replace(t, power=t.power + gamma) for t in self.samples))

    def dilated(self, factor: float) -> "Forcing":
        """``g(factor * x)``."""
        ls = math.log(factor)
        pieces = tuple(PowerPiece(pc.x_lo / factor, pc.x_hi / factor,
                                  pc.coef * factor ** pc.power, pc.power) for pc in self.pieces)
        samples = tuple(SampledTerm(t.func.dilated(ls), t.coef * factor ** t.power, t.power)
                        for t in self.samples)
        return Forcing(pieces, samples)

    def at_s(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        out = np.zeros_like(s)
        for pc in self.pieces:
            lo, hi = math.log(pc.x_lo), math.log(pc.x_hi)
            m = (s >= lo) & (s < hi)
            out[m] += pc.coef * np.exp(pc.power * s[m])
        for t in self.samples:
            out += t.coef * np.exp(t.power * s) * t.func.at_s(s)
        return out

    def __call__(self, x) -> np.ndarray:
        return self.at_s(np.log(np.asarray(x, dtype=float)))

    def breakpoints(self) -> np.ndarray:
        """Points in ``s`` where the data may fail to be smooth."""
        pts = []
        for pc in self.pieces:
            pts += [math.log(pc.x_lo), math.log(pc.x_hi)]
        for t in self.samples:
            f = t.func
            if f.interp == MIDPOINT:
                edges = f.s_min + f.h * (np.arange(f.n + 2) - 0.5)
                edges[0], edges[-1] = f.s_min, f.s_max
                pts += list(edges)
            else:
                pts += list(f.s)
        return np.unique(np.asarray(pts, dtype=float))

    def support(self) -> Optional[tuple[float, float]]:
        """Hull of the support in ``s`` (``None`` for zero data)."""
        lo, hi = math.inf, -math.inf
        for pc in self.pieces:
            if pc.coef != 0:
                lo = min(lo, math.log(pc.x_lo))
                hi = max(hi, math.log(pc.x_hi))
        for t in self.samples:
            if t.coef != 0 and np.any(t.func.values):
                a, b = t.func.support()
                lo = min(lo, a - t.func.h)
                hi = max(hi, b + t.func.h)
        if lo > hi:
            return None
        return (lo, hi)

    def weighted_integral(self, kappa: float, lo, hi) -> np.ndarray:
        """``int_lo^hi e^(kappa s) g(s) ds`` in log coordinates, vectorized.

        Exact for power pieces; for sampled terms the integrand is split at
        the interpolation breakpoints and integrated by 8-point Gauss.
        """
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        lo, hi = np.broadcast_arrays(lo, hi)
        out = np.zeros(lo.shape)
        for pc in self.pieces:
            if pc.coef == 0:
                continue
            a = np.maximum(lo, math.log(pc.x_lo))
            b = np.minimum(hi, math.log(pc.x_hi))
            k = kappa + pc.power
            m = b > a
            if not np.any(m):
                continue
            if k == 0.0:
                val = b - a
            else:
                val = np.exp(k * a) * np.expm1(k * (b - a)) / k
            out += np.where(m, pc.coef * val, 0.0)
        for t in self.samples:
            if t.coef == 0:
                continue
            out += t.coef * _sampled_exp_integral(t.func, kappa + t.power, lo, hi)
        return out


def _sampled_exp_integral(func: SampledFunction, kappa: float, lo, hi) -> np.ndarray:
    edges = Forcing((), (SampledTerm(func),)).breakpoints()
    a, b = edges[:-1], edges[1:]
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
    if func.interp == MIDPOINT:
        vals = func.at_s(np.broadcast_to(mid[:, None], nodes.shape))
    else:
        vals = func.at_s(nodes)
    cell = (half[:, None] * _GL_W[None, :] * np.exp(kappa * nodes) * vals).sum(axis=1)
    cum = np.concatenate(([0.0], np.cumsum(cell)))

    def cumulative(s):
        s = np.clip(s, edges[0], edges[-1])
        j = np.clip(np.searchsorted(edges, s, side="right") - 1, 0, len(a) - 1)
        base = cum[j]
        ca = a[j]
        h2 = 0.5 * (s - ca)
        pts = (ca + h2)[..., None] + h2[..., None] * _GL_X
        if func.interp == MIDPOINT:
            pv = func.at_s(np.broadcast_to(mid[j][..., None], pts.shape))
        else:
            pv = func.at_s(pts)
        part = (h2[..., None] * _GL_W * np.exp(kappa * pts) * pv).sum(axis=-1)
        return base + part

    res = cumulative(hi) - cumulative(lo)
    return np.where(hi > lo, res, 0.0)


# ---------------------------------------------------------------------------
# the Euler problem and its exact solution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EulerProblem:
    """Constant-coefficient problem with ``b = n_b a``, ``bhat = n_bhat a``,
    ``c = n_c a`` plus the zeroth-order term ``lam * c0 * u``."""

    a: float = 1.0
    ratios: LowerOrderRatios = field(default_factory=LowerOrderRatios)
    F: Forcing = field(default_factory=Forcing)
    f: Forcing = field(default_factory=Forcing)
    lam: float = 0.0
    c0: float = 1.0
    nu: float = 0.0

    def __post_init__(self):
        if not self.a > 0:
            raise InvalidSpec("leading coefficient must be positive")
        if self.nu and not (self.nu <= self.a <= 1.0 / self.nu):
            raise InvalidSpec(f"a={self.a} outside [nu, 1/nu] with nu={self.nu}")
        if self.lam < 0:
            raise InvalidSpec("lambda must be nonnegative")

    @property
    def effective_ratios(self) -> LowerOrderRatios:
        """Ratios with ``lam c0`` folded into ``c``."""
        return replace(self.ratios, n_c=self.ratios.n_c + self.lam * self.c0 / self.a)

    @property
    def roots(self) -> IndicialRoots:
        return indicial_roots(self.effective_ratios)

    def dilated(self, factor: float) -> "EulerProblem":
        """Data ``F(factor x) / factor`` and ``f(factor x)``; the solution
        becomes ``u(factor x)``."""
        return replace(self, F=self.F.dilated(factor).scaled(1.0 / factor),
                       f=self.f.dilated(factor))


def gauge_shift(problem: EulerProblem, gamma: float) -> EulerProblem:
    """Problem satisfied by ``x^gamma u``; roots shift by ``-gamma``."""
    r = problem.ratios
    ratios = LowerOrderRatios(
        r.n_b + gamma,
        r.n_bhat + gamma,
        r.n_c - gamma * (gamma + 1.0) - gamma * r.n_b - gamma * r.n_bhat,
    )
    F = problem.F.times_power(gamma)
    f = problem.f.times_power(gamma) + problem.F.times_power(gamma - 1.0).scaled(-gamma)
    return replace(problem, ratios=ratios, F=F, f=f)


def _tail_power_integral(A: float, B: float, alpha: float, beta: float, theta: float,
                         p: float, S: float, side: str) -> float:
    """``int |A e^(-alpha s) + B e^(-beta s)|^p e^(theta s) ds`` over
    ``[S, inf)`` (side ``"right"``) or ``(-inf, S]`` (``"left"``)."""
    if A == 0 and B == 0:
        return 0.0
    if side == "right":
        # dominant term as s -> +inf is the one with the smaller root
        dom, sub, rd, rs = (A, B, alpha, beta) if A != 0 else (B, 0.0, beta, beta)
        rate = theta - rd * p
        if rate >= 0:
            return math.inf
        kappa = -rate
        sgn = 1.0
    else:
        dom, sub, rd, rs = (B, A, beta, alpha) if B != 0 else (A, 0.0, alpha, alpha)
        rate = theta - rd * p
        if rate <= 0:
            return math.inf
        kappa = rate
        sgn = -1.0
    if sub == 0.0:
        return abs(dom) ** p * math.exp(-sgn * kappa * S) / kappa

    def inner(w):
        s = S - sgn * math.log(w) / kappa
        return abs(dom + sub * math.exp((rd - rs) * s)) ** p

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(inner, 0.0, 1.0, epsabs=0.0, epsrel=1e-13, limit=400)
    return val * math.exp(-sgn * kappa * S) / kappa


def _segments(points: np.ndarray, max_width: float) -> tuple[np.ndarray, np.ndarray]:
    a, b = [], []
    for lo, hi in zip(points[:-1], points[1:]):
        k = max(1, int(math.ceil((hi - lo) / max_width)))
        e = np.linspace(lo, hi, k + 1)
        a.append(e[:-1])
        b.append(e[1:])
    return np.concatenate(a), np.concatenate(b)


def gauss_integrate(fn: Callable, points: np.ndarray, max_width: float = 0.05) -> float:
    """Composite 8-point Gauss of ``fn(s)`` over segments split at ``points``."""
    points = np.unique(np.asarray(points, dtype=float))
    if points.size < 2:
        return 0.0
    a, b = _segments(points, max_width)
    mid = 0.5 * (a + b)
    half = 0.5 * (b - a)
    nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
    vals = fn(nodes.ravel()).reshape(nodes.shape)
    return float((half[:, None] * _GL_W[None, :] * vals).sum())


@dataclass(frozen=True, eq=False)
class ExactSolution:
    """``u(x) = C1(x) x^-alpha + C2(x) x^-beta`` with the branch constants
    fixed by ``regime``.  Outside the data support both coefficients are
    constant, so tails are integrated in closed form."""

    problem: EulerProblem
    roots: IndicialRoots
    regime: str
    p: float
    theta: float
    from_zero: tuple  # per branch: True -> integrate from 0, False -> from inf

    @property
    def _den(self) -> float:
        return self.problem.a * (self.roots.beta - self.roots.alpha)

    def _branch_integrals(self, s, which):
        root = self.roots.alpha if which == 0 else self.roots.beta
        F, f = self.problem.F, self.problem.f
        s = np.asarray(s, dtype=float)
        if self.from_zero[which]:
            lo, hi = np.full(s.shape, -np.inf), s
        else:
            lo, hi = s, np.full(s.shape, np.inf)
        val = f.weighted_integral(root, lo, hi)
        if not F.is_zero:
            val = val - (root - 1.0) * F.weighted_integral(root - 1.0, lo, hi)
        return val

    def coefficients(self, s) -> tuple[np.ndarray, np.ndarray]:
        """``(C1, C2)`` so that ``v(s) = C1 e^(-alpha s) + C2 e^(-beta s)``."""
        i1 = self._branch_integrals(s, 0)
        i2 = self._branch_integrals(s, 1)
        c1 = (-i1 if self.from_zero[0] else i1) / self._den
        c2 = (i2 if self.from_zero[1] else -i2) / self._den
        return c1, c2

    def evaluate(self, s) -> tuple[np.ndarray, np.ndarray]:
        """``(u, x u')`` at ``x = e^s``."""
        s = np.asarray(s, dtype=float)
        al, be = self.roots.alpha, self.roots.beta
        c1, c2 = self.coefficients(s)
        e1, e2 = np.exp(-al * s), np.exp(-be * s)
        v = c1 * e1 + c2 * e2
        dv = -al * c1 * e1 - be * c2 * e2
        if not self.problem.F.is_zero:
            dv = dv - self.problem.F.at_s(s) * np.exp(-s) / self.problem.a
        return v, dv

    def __call__(self, x) -> np.ndarray:
        return self.evaluate(np.log(np.asarray(x, dtype=float)))[0]

    def sampled(self, s_min: float, s_max: float, n: int) -> SampledFunction:
        s = np.linspace(s_min, s_max, n)
        v, dv = self.evaluate(s)
        return SampledFunction(s_min, (s_max - s_min) / (n - 1), v, derivative=dv)

    @property
    def data_support(self) -> Optional[tuple[float, float]]:
        sF = self.problem.F.support()
        sf = self.problem.f.support()
        if sF is None:
            return sf
        if sf is None:
            return sF
        return (min(sF[0], sf[0]), max(sF[1], sf[1]))

    def breakpoints(self) -> np.ndarray:
        pts = np.concatenate((self.problem.F.breakpoints(), self.problem.f.breakpoints()))
        sup = self.data_support
        if sup is None:
            return np.zeros(0)
        return pts[(pts >= sup[0]) & (pts <= sup[1])]

    def norms(self, p: Optional[float] = None, theta: Optional[float] = None,
              max_width: float = 0.05) -> tuple[float, float]:
        """``(||u||_{L_{p,theta}}, ||x u'||_{L_{p,theta}})`` including the
        closed-form tails beyond the data support."""
        p = self.p if p is None else p
        theta = self.theta if theta is None else theta
        sup = self.data_support
        if sup is None:
            return 0.0, 0.0
        pts = self.breakpoints()
        lo, hi = sup
        out = []
        for k in (0, 1):
            def integrand(s, k=k):
                val = self.evaluate(s)[k]
                return np.abs(val) ** p * np.exp(theta * s)
            mid = gauss_integrate(integrand, pts, max_width)
            tails = 0.0
            for side, S in (("left", lo), ("right", hi)):
                c1, c2 = (float(c) for c in self.coefficients(np.array(S)))
                al, be = self.roots.alpha, self.roots.beta
                if k == 1:
                    c1, c2 = -al * c1, -be * c2
                tails += _tail_power_integral(c1, c2, al, be, theta, p, S, side)
            out.append((mid + tails) ** (1.0 / p))
        return out[0], out[1]

    def weak_residual(self, psi: Callable, dpsi: Callable, support: tuple[float, float],
                      max_width: float = 0.02) -> tuple[float, float]:
        """Residual of the weak form against ``phi(x) = psi(log x) / x``.

        Returns ``(residual, scale)`` where ``scale`` is the size of the
        largest individual term.
        """
        P = self.problem
        a = P.a
        r = P.ratios
        b, bh, c = r.n_b * a, r.n_bhat * a, r.n_c * a + P.lam * P.c0
        pts = np.concatenate((self.breakpoints(), support))
        pts = pts[(pts >= support[0]) & (pts <= support[1])]

        def lhs(s):
            v, dv = self.evaluate(s)
            ps, dps = psi(s), dpsi(s)
            return a * dv * dps + (a + b) * dv * ps - bh * v * dps + c * v * ps

        def rhs(s):
            ps, dps = psi(s), dpsi(s)
            return P.F.at_s(s) * np.exp(-s) * (ps - dps) + P.f.at_s(s) * ps

        L = gauss_integrate(lhs, pts, max_width)
        R = gauss_integrate(rhs, pts, max_width)
        scale = max(abs(L), abs(R), gauss_integrate(lambda s: np.abs(lhs(s)), pts, max_width))
        return L - R, scale


def euler_solve_exact(problem: EulerProblem, p: float, theta: float) -> ExactSolution:
    """Exact ``H^1_{p,theta}`` solution selected by where theta sits
    relative to ``(alpha p, beta p)``."""
    roots = problem.roots
    window = admissible_theta(roots, p)
    regime = window.classify(theta)
    if regime == "forbidden":
        raise ForbiddenExponent(
            f"theta={theta} is an endpoint of the window {window.interior}")
    from_zero = {
        "below": (True, True),
        "above": (False, False),
        "interior": (False, True),
    }[regime]
    return ExactSolution(problem, roots, regime, p, theta, from_zero)


def data_norms(problem: EulerProblem, p: float, theta: float,
               max_width: float = 0.05) -> tuple[float, float]:
    """``(||x^-1 F||_{L_{p,theta}}, ||f||_{L_{p,theta}})`` by piecewise Gauss."""
    out = []
    for g, shift in ((problem.F, -1.0), (problem.f, 0.0)):
        sup = g.support()
        if sup is None:
            out.append(0.0)
            continue
        pts = g.breakpoints()
        pts = np.concatenate((pts[(pts >= sup[0]) & (pts <= sup[1])], sup))
        val = gauss_integrate(
            lambda s, g=g, shift=shift: np.abs(np.exp(shift * s) * g.at_s(s)) ** p
            * np.exp(theta * s), pts, max_width)
        out.append(val ** (1.0 / p))
    return out[0], out[1]


# ---------------------------------------------------------------------------
# Black-Scholes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Payoff:
    """``call``/``put`` with strike ``K``, ``indicator`` of ``[lo, hi)``,
    ``power`` ``y^k`` (``k=0`` is the constant one), or ``custom``."""

    kind: str = "call"
    K: float = 100.0
    lo: float = 0.0
    hi: float = math.inf
    k: float = 0.0
    func: Optional[Callable] = None
    growth: float = 1.0

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        if self.kind == "call":
            return np.maximum(y - self.K, 0.0)
        if self.kind == "put":
            return np.maximum(self.K - y, 0.0)
        if self.kind == "indicator":
            return ((y >= self.lo) & (y < self.hi)).astype(float)
        if self.kind == "power":
            return y ** self.k
        if self.kind == "custom" and self.func is not None:
            return np.asarray(self.func(y), dtype=float)
        raise InvalidSpec(f"unknown payoff {self.kind!r}")

    @property
    def degree(self) -> float:
        return {"call": 1.0, "put": 0.0, "indicator": 0.0}.get(
            self.kind, abs(self.k) if self.kind == "power" else self.growth)

    def kinks(self) -> list[float]:
        if self.kind in ("call", "put"):
            return [self.K]
        if self.kind == "indicator":
            return [v for v in (self.lo, self.hi) if 0 < v < math.inf]
        return []


@dataclass(frozen=True)
class BSParams:
    sigma: float
    r: float
    horizon: float
    payoff: Payoff = field(default_factory=Payoff)

    def __post_init__(self):
        if not self.sigma > 0:
            raise InvalidSpec("sigma must be positive")
        if not self.horizon > 0:
            raise InvalidSpec("horizon must be positive")


def bs_density(x, y, params: BSParams):
    """Lognormal transition density of the price from ``x`` to ``y``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise DomainError("bs_density needs x > 0 and y > 0")
    s, h, r = params.sigma, params.horizon, params.r
    z = np.log(y / x) - (r - 0.5 * s * s) * h
    out = np.exp(-z * z / (2.0 * h * s * s)) / (s * y * math.sqrt(2.0 * math.pi * h))
    return out if out.ndim else float(out)


def _truncation(params: BSParams, deg: float, mass: float = 1e-12) -> float:
    # Gaussian tail: P(|Z| > k) < mass for k = 7.13; each unit of payoff
    # growth shifts the effective mean by sigma*sqrt(h).
    sd = params.sigma * math.sqrt(params.horizon)
    k = math.sqrt(2.0 * math.log(1.0 / mass)) + 1.0
    return (k + deg * sd) * sd


def bs_solve(params: BSParams, x: float) -> float:
    """Discounted expectation ``e^(-r h) int payoff(y) p(x, y) dy`` by adaptive
    quadrature in ``log y``."""
    if not x > 0:
        raise DomainError("x must be positive")
    s, h, r = params.sigma, params.horizon, params.r
    mu = (r - 0.5 * s * s) * h
    sd = s * math.sqrt(h)
    half = _truncation(params, params.payoff.degree)
    lo, hi = mu - half, mu + half
    pts = sorted(z for z in (math.log(k / x) for k in params.payoff.kinks()) if lo < z < hi)

    def integrand(z):
        phi = math.exp(-0.5 * ((z - mu) / sd) ** 2) / (sd * math.sqrt(2.0 * math.pi))
        return float(params.payoff(x * math.exp(z))) * phi

    edges = [lo] + pts + [hi]
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        with warnings.catch_warnings():
            warnings.simplefilter("error", integrate.IntegrationWarning)
            try:
                val, err = integrate.quad(integrand, a, b, epsabs=1e-13, epsrel=1e-12, limit=500)
            except integrate.IntegrationWarning as exc:
                raise QuadratureError(str(exc)) from exc
        total += val
    return math.exp(-r * h) * total


def bs_call_closed_form(x: float, K: float, sigma: float, r: float, horizon: float) -> float:
    """Normal-CDF price of a European call (independent cross-check)."""
    sd = sigma * math.sqrt(horizon)
    d1 = (math.log(x / K) + (r + 0.5 * sigma * sigma) * horizon) / sd
    d2 = d1 - sd
    return float(x * ndtr(d1) - K * math.exp(-r * horizon) * ndtr(d2))
