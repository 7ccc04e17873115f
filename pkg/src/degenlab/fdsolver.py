"""Finite differences in log coordinates.

With ``v(s) = u(e^s)`` the operator ``-x^2 (a u')' + b x u' + x (bhat u)' + c u``
becomes ``-(a v_s)_s + (a + b) v_s + (bhat v)_s + c v`` and the right side
``F' + f`` becomes ``e^-s F_s + f``.  The second-order part is differenced
conservatively with harmonic-mean face coefficients; first-order parts are
centered; data enters through hat-function loads, which lets ``F`` appear
without differentiating it.  Truncated ends carry homogeneous Dirichlet
values (or user-supplied boundary values for the Cauchy problem).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from . import _kernels
from .errors import (DegenerateRoots, InvalidGrid, InvalidSpec, NonConvergence,
                     SingularOperator, SupportError, TruncationError)
from .exact1d import (BSParams, Forcing, LowerOrderRatios, admissible_theta,
                      indicial_roots)
from .weighted_spaces import NormSpec, SampledFunction, lp_theta_norm

MIN_SOLVER_NODES = 16
RESIDUAL_TOL = 1e-10
SUPPORT_TOL = 1e-8

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LogGrid:
    s_min: float
    s_max: float
    n: int

    def __post_init__(self):
        if not (math.isfinite(self.s_min) and math.isfinite(self.s_max)):
            raise InvalidGrid("grid ends must be finite")
        if not self.s_min < self.s_max:
            raise InvalidGrid(f"need s_min < s_max, got {self.s_min}, {self.s_max}")
        if int(self.n) != self.n or self.n < 3:
            raise InvalidGrid(f"need an integer n >= 3, got {self.n}")

    @property
    def h(self) -> float:
        return (self.s_max - self.s_min) / (self.n - 1)

    @property
    def s(self) -> np.ndarray:
        return np.linspace(self.s_min, self.s_max, self.n)

    @property
    def x(self) -> np.ndarray:
        return np.exp(self.s)

    def refined(self) -> "LogGrid":
        return LogGrid(self.s_min, self.s_max, 2 * self.n - 1)

    def sampled(self, values, derivative=None) -> SampledFunction:
        return SampledFunction(self.s_min, self.h, values, derivative=derivative)


def build_log_grid(x_min: float, x_max: float, n: int) -> LogGrid:
    """Uniform grid in ``s = log x`` whose end nodes are exactly ``log x_min``
    and ``log x_max``."""
    if not (x_min > 0 and x_max > 0 and math.isfinite(x_min) and math.isfinite(x_max)):
        raise InvalidGrid("grid ends must be positive and finite")
    if not x_min < x_max:
        raise InvalidGrid(f"need x_min < x_max, got {x_min}, {x_max}")
    return LogGrid(math.log(x_min), math.log(x_max), n)


@dataclass(frozen=True)
class TimeGrid:
    t_end: float
    m: int

    def __post_init__(self):
        if not (self.t_end > 0 and math.isfinite(self.t_end)):
            raise InvalidGrid(f"t_end must be positive, got {self.t_end}")
        if int(self.m) != self.m or self.m < 4:
            raise InvalidGrid(f"need m >= 4 steps, got {self.m}")

    @property
    def dt(self) -> float:
        return self.t_end / self.m

    @property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, self.t_end, self.m + 1)

    def refined(self) -> "TimeGrid":
        return TimeGrid(self.t_end, 2 * self.m)


# ---------------------------------------------------------------------------
# coefficients
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PiecewiseConstant:
    """``values[k]`` on ``[breaks[k-1], breaks[k])`` of the natural variable
    (``x`` or ``t``); the first and last pieces extend to the ends."""

    breaks: tuple = ()
    values: tuple = (1.0,)

    def __post_init__(self):
        b = tuple(float(v) for v in self.breaks)
        v = tuple(float(v) for v in self.values)
        object.__setattr__(self, "breaks", b)
        object.__setattr__(self, "values", v)
        if len(v) != len(b) + 1:
            raise InvalidSpec("need len(values) == len(breaks) + 1")
        if any(q <= p for p, q in zip(b[:-1], b[1:])):
            raise InvalidSpec("breaks must increase strictly")
        if not all(math.isfinite(x) for x in v):
            raise InvalidSpec("values must be finite")

    @classmethod
    def constant(cls, value: float) -> "PiecewiseConstant":
        return cls((), (value,))

    @property
    def is_constant(self) -> bool:
        return len(set(self.values)) == 1

    @property
    def lo(self) -> float:
        return min(self.values)

    @property
    def hi(self) -> float:
        return max(self.values)

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        idx = np.searchsorted(np.asarray(self.breaks), z, side="right")
        return np.asarray(self.values)[idx]

    def _cell_integrals(self, lo, hi, transform, reciprocal=False) -> np.ndarray:
        # exact integral of the field (or its reciprocal) over [lo, hi] in a
        # coordinate in which the breaks sit at transform(breaks)
        vals = np.asarray(self.values)
        if reciprocal:
            vals = 1.0 / vals
        if not self.breaks:
            return vals[0] * (hi - lo)
        B = transform(np.asarray(self.breaks))
        cum = np.concatenate(([0.0], np.cumsum(vals[1:-1] * np.diff(B)))) if B.size > 1 \
            else np.zeros(1)

        def prim(z):
            k = np.searchsorted(B, z, side="right")
            kk = np.clip(k - 1, 0, B.size - 1)
            base = np.where(k == 0, 0.0, cum[kk])
            return base + vals[k] * (z - B[kk])

        return prim(hi) - prim(lo)

    def log_means(self, lo, hi, harmonic=False) -> np.ndarray:
        """Cell means over ``[lo, hi]`` in ``s = log x`` (arithmetic or harmonic)."""
        width = hi - lo
        if harmonic:
            return width / self._cell_integrals(lo, hi, np.log, reciprocal=True)
        return self._cell_integrals(lo, hi, np.log) / width


def _field(v) -> PiecewiseConstant:
    if isinstance(v, PiecewiseConstant):
        return v
    return PiecewiseConstant.constant(float(v))


@dataclass(frozen=True)
class RoughCoefficients:
    """``a0, a, c0`` piecewise constant in the single variable ``variable``
    (``"x"`` or ``"t"``); ``b, bhat, c`` are ``ratios`` times ``a``."""

    a: Union[PiecewiseConstant, float] = 1.0
    a0: Union[PiecewiseConstant, float] = 1.0
    c0: Union[PiecewiseConstant, float] = 1.0
    ratios: LowerOrderRatios = field(default_factory=LowerOrderRatios)
    variable: str = "x"
    nu: Optional[float] = None
    K: Optional[float] = None

    def __post_init__(self):
        for name in ("a", "a0", "c0"):
            object.__setattr__(self, name, _field(getattr(self, name)))
        if self.variable not in ("x", "t"):
            raise InvalidSpec(f"variable must be 'x' or 't', got {self.variable!r}")
        if self.variable == "x":
            for name in ("a", "a0", "c0"):
                if any(b <= 0 for b in getattr(self, name).breaks):
                    raise InvalidSpec(f"{name}: breaks in x must be positive")
        a, a0, c0 = self.a, self.a0, self.c0
        if a.lo <= 0 or a0.lo <= 0 or c0.lo <= 0:
            raise InvalidSpec("a, a0, c0 must be positive")
        nu = self.nu if self.nu is not None else min(a.lo, 1.0 / a.hi)
        K = self.K if self.K is not None else max(a0.hi, c0.hi, 1.0 / a0.lo, 1.0 / c0.lo)
        if not (0 < nu <= a.lo and a.hi <= 1.0 / nu):
            raise InvalidSpec(f"a outside [nu, 1/nu] with nu={nu}")
        if not (1.0 / K <= min(a0.lo, c0.lo) and max(a0.hi, c0.hi) <= K):
            raise InvalidSpec(f"a0, c0 outside [1/K, K] with K={K}")
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "K", K)

    @classmethod
    def constant(cls, a: float = 1.0, ratios: Optional[LowerOrderRatios] = None,
                 a0: float = 1.0, c0: float = 1.0, **kw) -> "RoughCoefficients":
        return cls(a, a0, c0, ratios or LowerOrderRatios(), **kw)

    @property
    def is_constant(self) -> bool:
        return self.a.is_constant and self.a0.is_constant and self.c0.is_constant

    def effective_ratios(self, lam: float) -> LowerOrderRatios:
        """Ratios with the weakest ``lam c0 / a`` folded into ``n_c``."""
        r = self.ratios
        return LowerOrderRatios(r.n_b, r.n_bhat, r.n_c + lam * self.c0.lo / self.a.hi)


# ---------------------------------------------------------------------------
# data adaptors
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LogData:
    """Spatial data given as a function of ``s``; ``points`` lists kinks."""

    fn: Callable
    points: tuple = ()

    def at_s(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return np.broadcast_to(np.asarray(self.fn(s), dtype=float), s.shape)

    def __call__(self, x) -> np.ndarray:
        return self.at_s(np.log(np.asarray(x, dtype=float)))

    def breakpoints(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float)

    def __add__(self, other: "LogData") -> "LogData":
        f, g = self.fn, other.fn
        return LogData(lambda s: f(s) + g(s), self.points + other.points)


@dataclass(frozen=True)
class SpaceTime:
    """Data ``fn(t, s)`` in log coordinates; ``static`` marks time independence."""

    fn: Callable
    points: tuple = ()
    static: bool = False

    @classmethod
    def separable(cls, time_fn: Callable, spatial) -> "SpaceTime":
        g = as_log_data(spatial)
        return cls(lambda t, s: time_fn(t) * g.at_s(s), tuple(_breaks(g)))

    def at(self, t: float) -> Callable:
        return lambda s: np.broadcast_to(np.asarray(self.fn(t, s), dtype=float), np.shape(s))

    def breakpoints(self) -> np.ndarray:
        return np.asarray(self.points, dtype=float)


def _breaks(g) -> np.ndarray:
    if g is None:
        return np.zeros(0)
    if isinstance(g, SampledFunction):
        return g.s
    if hasattr(g, "breakpoints"):
        return np.asarray(g.breakpoints(), dtype=float)
    return np.zeros(0)


def as_log_data(g):
    """Forcing, SampledFunction, LogData or a callable of ``x`` (or ``None``)."""
    if g is None:
        return None
    if isinstance(g, Forcing) and g.is_zero:
        return None
    if hasattr(g, "at_s"):
        return g
    if callable(g):
        return LogData(lambda s, g=g: g(np.exp(s)))
    raise InvalidSpec(f"unsupported data type {type(g).__name__}")


def as_space_time(g) -> Optional[SpaceTime]:
    if g is None or isinstance(g, SpaceTime):
        return g
    d = as_log_data(g)
    if d is None:
        return None
    return SpaceTime(lambda t, s, d=d: d.at_s(s), tuple(_breaks(d)), static=True)


def _zero(s):
    return np.zeros(np.shape(s))


def _hat_loads(grid: LogGrid, f_at: Callable, F_at: Callable, points) -> np.ndarray:
    """``(1/h) int (f psi_i + F e^-s (psi_i - psi_i')) ds`` for interior nodes."""
    s, h = grid.s, grid.h
    pts = np.asarray(points, dtype=float)
    pts = pts[(pts > s[0]) & (pts < s[-1])]
    edges = np.union1d(s, pts)
    a, b = edges[:-1], edges[1:]
    keep = b - a > 1e-14 * h
    a, b = a[keep], b[keep]
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    nodes = mid[:, None] + half[:, None] * _GL_X[None, :]
    w = half[:, None] * _GL_W[None, :]
    j = np.clip(np.searchsorted(s, mid, side="right") - 1, 0, grid.n - 2)
    xi = (nodes - s[j][:, None]) / h
    fv = f_at(nodes)
    Fv = F_at(nodes) * np.exp(-nodes)
    left = (w * (fv * (1.0 - xi) + Fv * ((1.0 - xi) + 1.0 / h))).sum(axis=1)
    right = (w * (fv * xi + Fv * (xi - 1.0 / h))).sum(axis=1)
    g = np.zeros(grid.n)
    np.add.at(g, j, left)
    np.add.at(g, j + 1, right)
    return g[1:-1] / h


def _data_support(grid: LogGrid, samples) -> Optional[tuple[float, float]]:
    mag = np.zeros(grid.n)
    for v in samples:
        mag = np.maximum(mag, np.abs(v))
    top = mag.max()
    if top == 0:
        return None
    idx = np.nonzero(mag > SUPPORT_TOL * top)[0]
    s = grid.s
    return (s[max(idx[0] - 1, 0)], s[min(idx[-1] + 1, grid.n - 1)])


# ---------------------------------------------------------------------------
# assembly
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpatialOperator:
    """Interior rows of the discrete operator (``a`` factored out when the
    coefficients depend on ``t``)."""

    kl: np.ndarray
    kd: np.ndarray
    ku: np.ndarray
    mass: np.ndarray
    react: np.ndarray

    @property
    def kl_b(self) -> float:
        return float(self.kl[0])

    @property
    def ku_b(self) -> float:
        return float(self.ku[-1])

    def apply(self, v_full: np.ndarray) -> np.ndarray:
        """Operator rows applied to a full-grid vector (boundary included)."""
        return self.kl * v_full[:-2] + self.kd * v_full[1:-1] + self.ku * v_full[2:]


def assemble_operator(coeffs: RoughCoefficients, grid: LogGrid) -> SpatialOperator:
    s, h = grid.s, grid.h
    n = grid.n
    if coeffs.variable == "x":
        lo, hi = s[:-1], s[1:]
        A = coeffs.a.log_means(lo, hi, harmonic=True)
        am = coeffs.a.log_means(lo, hi)
        a_node = np.concatenate(([am[0]], 0.5 * (am[:-1] + am[1:]), [am[-1]]))
        m0 = coeffs.a0.log_means(lo, hi)
        c0 = coeffs.c0.log_means(lo, hi)
        mass = 0.5 * (m0[:-1] + m0[1:])
        react = 0.5 * (c0[:-1] + c0[1:])
    else:
        A = np.ones(n - 1)
        a_node = np.ones(n)
        mass = np.ones(n - 2)
        react = np.ones(n - 2)
    r = coeffs.ratios
    ai = a_node[1:-1]
    bh = r.n_bhat * a_node
    first = (ai + r.n_b * ai) / (2.0 * h)
    h2 = h * h
    kl = -A[:-1] / h2 - first - bh[:-2] / (2.0 * h)
    kd = (A[:-1] + A[1:]) / h2 + r.n_c * ai
    ku = -A[1:] / h2 + first + bh[2:] / (2.0 * h)
    return SpatialOperator(kl, kd, ku, mass, react)


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SolveReport:
    solution: SampledFunction
    residual_norm: float
    factorization: str
    truncation_certificate: float
    window_violation: bool
    theta: Optional[float]
    lam: float
    backend: str
    space_time: Optional[np.ndarray] = None
    times: Optional[np.ndarray] = None

    @property
    def values(self) -> np.ndarray:
        return self.solution.values


def _certificate(coeffs: RoughCoefficients, lam: float, p: float, theta: Optional[float],
                 grid: LogGrid, support) -> tuple[float, bool]:
    """``(certificate, window_violation)``."""
    try:
        roots = indicial_roots(coeffs.effective_ratios(lam))
    except DegenerateRoots:
        return (1.0 if support is not None else 0.0), theta is not None
    if theta is None:
        theta = 0.5 * p * (roots.alpha + roots.beta)
        violation = False
    else:
        violation = admissible_theta(roots, p).classify(theta) != "interior"
    if support is None:
        return 0.0, violation
    margin = min(support[0] - grid.s_min, grid.s_max - support[1])
    if margin <= 0:
        return 1.0, violation
    decay = min(abs(roots.alpha - theta / p), abs(roots.beta - theta / p))
    return math.exp(-decay * margin), violation


def _check_solver_grid(grid: LogGrid):
    if grid.n < MIN_SOLVER_NODES:
        raise InvalidGrid(f"solvers need n >= {MIN_SOLVER_NODES}, got {grid.n}")


# ---------------------------------------------------------------------------
# elliptic
# ---------------------------------------------------------------------------


def elliptic_solve_fd(coeffs: RoughCoefficients, lam: float, F, f, grid: LogGrid, *,
                      p: float = 2.0, theta: Optional[float] = None,
                      truncation_tol: float = 0.5) -> SolveReport:
    """Solve the divergence-form elliptic problem on the truncated grid.

    ``F`` and ``f`` may be a ``Forcing``, ``SampledFunction``, ``LogData``,
    a callable of ``x`` or ``None``.  ``theta`` (with ``p``) is only used to
    grade the truncation and to stamp ``window_violation``.
    """
    _check_solver_grid(grid)
    if lam < 0:
        raise InvalidSpec("lambda must be nonnegative")
    if coeffs.variable == "t" and not coeffs.is_constant:
        raise InvalidSpec("elliptic problems need coefficients independent of t")
    Fd, fd = as_log_data(F), as_log_data(f)
    F_at = Fd.at_s if Fd is not None else _zero
    f_at = fd.at_s if fd is not None else _zero
    s = grid.s
    support = _data_support(grid, (F_at(s), f_at(s)))
    cert, violation = _certificate(coeffs, lam, p, theta, grid, support)
    if cert > truncation_tol:
        raise TruncationError(
            f"truncation certificate {cert:.3e} exceeds {truncation_tol:.3e}; widen the grid")

    op = assemble_operator(coeffs, grid)
    a_scale = coeffs.a.values[0] if coeffs.variable == "t" else 1.0
    c0_scale = coeffs.c0.values[0] if coeffs.variable == "t" else 1.0
    kl, kd, ku = a_scale * op.kl, a_scale * op.kd + lam * c0_scale * op.react, a_scale * op.ku
    pts = np.concatenate((_breaks(Fd), _breaks(fd)))
    g = _hat_loads(grid, f_at, F_at, pts)
    kern = _kernels.active()
    v_int, ok = kern.thomas(kl, kd, ku, g)
    if not ok:
        raise SingularOperator(f"tridiagonal solve failed (theta={theta}, lambda={lam})",
                               theta=theta, lam=lam)
    v = np.concatenate(([0.0], v_int, [0.0]))
    resid = kl * v[:-2] + kd * v[1:-1] + ku * v[2:] - g
    scale = max(np.max(np.abs(g)), np.max(np.abs(kd * v[1:-1])), np.finfo(float).tiny)
    rel = float(np.max(np.abs(resid)) / scale) if np.any(g) else float(np.max(np.abs(resid)))
    if not math.isfinite(rel) or rel > RESIDUAL_TOL:
        raise SingularOperator(f"residual {rel:.3e} after direct solve (theta={theta}, "
                               f"lambda={lam})", theta=theta, lam=lam)
    return SolveReport(grid.sampled(v), rel, "thomas", cert, violation, theta, lam, kern.name)


# ---------------------------------------------------------------------------
# parabolic
# ---------------------------------------------------------------------------

SCHEMES = {"implicit-euler": 1.0, "crank-nicolson": 0.5}


def _time_samples(fld: PiecewiseConstant, coeffs: RoughCoefficients, tg: TimeGrid) -> np.ndarray:
    if coeffs.variable == "t":
        t = tg.t
        return fld(0.5 * (t[:-1] + t[1:]))
    return np.ones(tg.m)


def _boundary_series(boundary, tg: TimeGrid) -> tuple[np.ndarray, np.ndarray]:
    t = tg.t
    if boundary is None:
        return np.zeros(t.size), np.zeros(t.size)
    left, right = boundary
    ev = (lambda b: np.array([float(b(tk)) for tk in t]) if callable(b)
          else np.full(t.size, float(b)))
    return ev(left), ev(right)


def parabolic_solve_fd(coeffs: RoughCoefficients, lam: float, F, f, grid: LogGrid,
                       tg: TimeGrid, *, scheme: str = "implicit-euler", u0=None,
                       boundary=None, startup: Optional[int] = None, p: float = 2.0,
                       theta: Optional[float] = None,
                       truncation_tol: float = 0.5) -> SolveReport:
    """Time-march ``a0 u_t + L u + lam c0 u = F' + f`` from ``u(0) = u0``
    (zero by default).

    ``scheme`` is ``"implicit-euler"`` or ``"crank-nicolson"``; ``startup``
    Crank-Nicolson steps are replaced by two implicit half steps (defaults
    to 2 when ``u0`` is given, else 0).  ``boundary`` is an optional pair of
    values or callables ``t -> value`` for the two grid ends.
    """
    _check_solver_grid(grid)
    if lam < 0:
        raise InvalidSpec("lambda must be nonnegative")
    if scheme not in SCHEMES:
        raise InvalidSpec(f"scheme must be one of {sorted(SCHEMES)}")
    th = SCHEMES[scheme]
    if startup is None:
        startup = 2 if (u0 is not None and th < 1.0) else 0
    startup = min(int(startup), tg.m)

    Fd, fd = as_space_time(F), as_space_time(f)
    s, t = grid.s, tg.t
    pts = np.concatenate((_breaks(Fd), _breaks(fd)))

    def at(d, tk):
        return d.at(tk) if d is not None else _zero

    if (Fd is None or Fd.static) and (fd is None or fd.static):
        g0 = _hat_loads(grid, at(fd, 0.0), at(Fd, 0.0), pts)
        loads = np.broadcast_to(g0, (t.size, grid.n - 2)).copy()
        probe = [at(Fd, 0.0)(s), at(fd, 0.0)(s)]
    else:
        loads = np.stack([_hat_loads(grid, at(fd, tk), at(Fd, tk), pts) for tk in t])
        idx = np.unique(np.linspace(0, tg.m, min(tg.m + 1, 9)).astype(int))
        probe = [at(d, t[k])(s) for k in idx for d in (Fd, fd)]
    support = _data_support(grid, probe)
    cert, violation = _certificate(coeffs, lam, p, theta, grid, support)
    if cert > truncation_tol:
        raise TruncationError(
            f"truncation certificate {cert:.3e} exceeds {truncation_tol:.3e}; widen the grid")

    if u0 is None:
        v0 = np.zeros(grid.n)
    elif isinstance(u0, SampledFunction) or hasattr(u0, "at_s"):
        v0 = np.asarray(u0.at_s(s), dtype=float)
    else:
        v0 = np.asarray(u0(s), dtype=float) * np.ones(grid.n)
    bl, br = _boundary_series(boundary, tg)

    op = assemble_operator(coeffs, grid)
    a_t = _time_samples(coeffs.a, coeffs, tg)
    c0_t = _time_samples(coeffs.c0, coeffs, tg)
    a0_t = _time_samples(coeffs.a0, coeffs, tg)
    kern = _kernels.active()
    U, ok = kern.march(op.kl, op.kd, op.ku, op.kl_b, op.ku_b, op.mass, op.react,
                       a_t, c0_t, a0_t, float(lam), tg.dt, th, startup,
                       loads, bl, br, v0[1:-1].copy())
    if not ok or not np.all(np.isfinite(U)):
        raise SingularOperator(f"time step solve failed (theta={theta}, lambda={lam})",
                               theta=theta, lam=lam)
    full = np.empty((t.size, grid.n))
    full[:, 1:-1] = U
    full[:, 0], full[:, -1] = bl, br
    full[0, 0], full[0, -1] = v0[0], v0[-1]

    rel = _march_residual(op, full, loads, a_t, c0_t, a0_t, lam, tg.dt, th, startup)
    if not math.isfinite(rel) or rel > 1e-8:
        raise SingularOperator(f"time-step residual {rel:.3e} (theta={theta}, lambda={lam})",
                               theta=theta, lam=lam)
    return SolveReport(grid.sampled(full[-1]), rel, "thomas", cert, violation, theta, lam,
                       kern.name, space_time=full, times=t)


def _march_residual(op, full, loads, a_t, c0_t, a0_t, lam, dt, th, startup) -> float:
    """Relative residual of the theta-scheme equations after the start-up."""
    k = np.arange(startup, a_t.size)
    if k.size == 0:
        return 0.0
    V0, V1 = full[k], full[k + 1]
    A0 = np.stack([op.apply(v) for v in V0])
    A1 = np.stack([op.apply(v) for v in V1])
    at, rt = a_t[k][:, None], (lam * c0_t[k])[:, None] * op.react
    mass = a0_t[k][:, None] * op.mass
    r = (mass * (V1[:, 1:-1] - V0[:, 1:-1]) / dt
         + th * (at * A1 + rt * V1[:, 1:-1]) + (1 - th) * (at * A0 + rt * V0[:, 1:-1])
         - th * loads[k + 1] - (1 - th) * loads[k])
    scale = max(np.max(np.abs(mass * V1[:, 1:-1] / dt)), np.max(np.abs(loads)),
                np.finfo(float).tiny)
    return float(np.max(np.abs(r)) / scale)


# ---------------------------------------------------------------------------
# Black-Scholes by finite differences
# ---------------------------------------------------------------------------


def bs_coefficients(params: BSParams) -> RoughCoefficients:
    """Reversed-time Black-Scholes as ``u_t - x^2 (a u')' + b x u' + c u = 0``
    with ``a = sigma^2/2``, ``b = -r``, ``c = r``."""
    a = 0.5 * params.sigma ** 2
    ratios = LowerOrderRatios(n_b=-params.r / a, n_bhat=0.0, n_c=params.r / a)
    return RoughCoefficients.constant(a, ratios, nu=min(a, 1.0 / a))


def bs_price_fd(params: BSParams, x: float, n_space: int = 2049, n_time: int = 2048, *,
                half_width: Optional[float] = None,
                scheme: str = "crank-nicolson", startup: int = 2) -> tuple[float, SolveReport]:
    """Price at spot ``x`` on a log grid centered at ``log x``.

    Boundary values are the discounted payoff of the forward price, which
    is exact for calls and puts far from the strike.
    """
    if not x > 0:
        raise InvalidSpec("spot must be positive")
    if n_space % 2 == 0:
        n_space += 1
    sd = params.sigma * math.sqrt(params.horizon)
    if half_width is None:
        half_width = 10.0 * sd + abs(params.r) * params.horizon
    c = math.log(x)
    grid = LogGrid(c - half_width, c + half_width, n_space)
    tg = TimeGrid(params.horizon, n_time)
    pay, r = params.payoff, params.r
    x_lo, x_hi = grid.x[0], grid.x[-1]
    boundary = (lambda tau: math.exp(-r * tau) * float(pay(x_lo * math.exp(r * tau))),
                lambda tau: math.exp(-r * tau) * float(pay(x_hi * math.exp(r * tau))))
    rep = parabolic_solve_fd(bs_coefficients(params), 0.0, None, None, grid, tg,
                             scheme=scheme, u0=lambda s: pay(np.exp(s)), boundary=boundary,
                             startup=startup, truncation_tol=math.inf)
    return float(rep.solution.values[n_space // 2]), rep


# ---------------------------------------------------------------------------
# manufactured solutions and convergence
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClosedForm:
    """``v(s) = u(e^s)`` with its first two ``s``-derivatives."""

    v: Callable
    dv: Callable
    d2v: Callable

    def __add__(self, other: "ClosedForm") -> "ClosedForm":
        return ClosedForm(lambda s: self.v(s) + other.v(s), lambda s: self.dv(s) + other.dv(s),
                          lambda s: self.d2v(s) + other.d2v(s))

    @classmethod
    def gaussian(cls, center: float = 0.0, width: float = 1.0, amp: float = 1.0) -> "ClosedForm":
        def v(s):
            z = (np.asarray(s, dtype=float) - center) / width
            return amp * np.exp(-z * z)

        def dv(s):
            z = (np.asarray(s, dtype=float) - center) / width
            return amp * (-2.0 * z / width) * np.exp(-z * z)

        def d2v(s):
            z = (np.asarray(s, dtype=float) - center) / width
            return amp * (4.0 * z * z - 2.0) / width ** 2 * np.exp(-z * z)

        return cls(v, dv, d2v)


@dataclass(frozen=True)
class SpaceTimeClosedForm:
    """``v(t, s)`` with ``v_t``, ``v_s``, ``v_ss``."""

    v: Callable
    vt: Callable
    vs: Callable
    vss: Callable


def _constant_parts(coeffs: RoughCoefficients):
    if coeffs.variable == "x" and not coeffs.is_constant:
        raise InvalidSpec("manufactured data needs coefficients constant in x")
    return coeffs.a.values[0], coeffs.a0.values[0], coeffs.c0.values[0]


def _fourth_order_derivatives(v: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    d1 = np.zeros_like(v)
    d2 = np.zeros_like(v)
    d1[2:-2] = (v[:-4] - 8 * v[1:-3] + 8 * v[3:-1] - v[4:]) / (12 * h)
    d2[2:-2] = (-v[:-4] + 16 * v[1:-3] - 30 * v[2:-2] + 16 * v[3:-1] - v[4:]) / (12 * h * h)
    for i in (1, -2):
        d1[i] = (v[i + 1] - v[i - 1]) / (2 * h)
        d2[i] = (v[i + 1] - 2 * v[i] + v[i - 1]) / (h * h)
    return d1, d2


def manufactured_problem(u_exact, coeffs: RoughCoefficients, lam: float,
                         grid: Optional[LogGrid] = None, tol: float = 1e-10):
    """Data ``(F, f)`` with ``F = 0`` for which ``u_exact`` solves the
    elliptic problem.  Closed forms are differentiated analytically,
    sampled functions by fourth-order differences."""
    a, _, c0 = _constant_parts(coeffs)
    r = coeffs.ratios
    k1 = 1.0 + r.n_b + r.n_bhat

    def apply(v, dv, d2v):
        return a * (-d2v + k1 * dv + r.n_c * v) + lam * c0 * v

    if isinstance(u_exact, SampledFunction):
        v = u_exact.values
        top = np.max(np.abs(v))
        if top > 0 and max(np.max(np.abs(v[:2])), np.max(np.abs(v[-2:]))) > tol * top:
            raise SupportError("sampled solution does not vanish near the grid ends")
        d1, d2 = _fourth_order_derivatives(v, u_exact.h)
        return None, u_exact.with_values(apply(v, d1, d2))
    if isinstance(u_exact, ClosedForm):
        if grid is not None:
            vals = np.abs(u_exact.v(grid.s))
            top = vals.max()
            if top > 0 and max(vals[0], vals[-1]) > tol * top:
                raise SupportError("closed-form solution does not vanish at the grid ends")
        return None, LogData(lambda s: apply(u_exact.v(s), u_exact.dv(s), u_exact.d2v(s)))
    raise InvalidSpec("u_exact must be a SampledFunction or ClosedForm")


def manufactured_parabolic(u_exact: SpaceTimeClosedForm, coeffs: RoughCoefficients,
                           lam: float) -> tuple[None, SpaceTime]:
    """Space-time data for which ``u_exact`` solves the Cauchy problem."""
    if coeffs.variable == "x":
        _constant_parts(coeffs)
    r = coeffs.ratios
    k1 = 1.0 + r.n_b + r.n_bhat
    a_f, a0_f, c0_f = coeffs.a, coeffs.a0, coeffs.c0

    def pick(fld, t):
        return fld(t) if coeffs.variable == "t" else fld.values[0]

    def fn(t, s):
        v = u_exact.v(t, s)
        return (pick(a0_f, t) * u_exact.vt(t, s)
                + pick(a_f, t) * (-u_exact.vss(t, s) + k1 * u_exact.vs(t, s) + r.n_c * v)
                + lam * pick(c0_f, t) * v)

    return None, SpaceTime(fn)


@dataclass(frozen=True)
class ConvergenceProblem:
    """Refinement study descriptor.

    ``exact(s)`` is the reference solution (at ``t_end`` for parabolic
    runs).  Each level doubles the resolution named by ``refine``
    (``"space"``, ``"time"`` or ``"both"``).
    """

    coeffs: RoughCoefficients
    exact: Callable
    s_min: float
    s_max: float
    n0: int
    F: object = None
    f: object = None
    lam: float = 0.0
    p: float = 2.0
    theta: float = 0.0
    kind: str = "elliptic"
    t_end: float = 1.0
    m0: int = 8
    scheme: str = "implicit-euler"
    refine: str = "space"


@dataclass(frozen=True)
class ConvergenceRow:
    h: float
    dt: Optional[float]
    error: float
    order: float


def convergence_study(problem: ConvergenceProblem, levels: int = 3) -> list[ConvergenceRow]:
    if levels < 3:
        raise InvalidSpec("levels must be at least 3")
    P = problem
    spec = NormSpec(P.p, P.theta)
    rows = []
    errors = []
    for k in range(levels):
        fs = 2 ** k if P.refine in ("space", "both") else 1
        ft = 2 ** k if P.refine in ("time", "both") else 1
        grid = LogGrid(P.s_min, P.s_max, (P.n0 - 1) * fs + 1)
        if P.kind == "elliptic":
            rep = elliptic_solve_fd(P.coeffs, P.lam, P.F, P.f, grid, p=P.p, theta=P.theta,
                                    truncation_tol=math.inf)
            dt = None
        else:
            tg = TimeGrid(P.t_end, P.m0 * ft)
            rep = parabolic_solve_fd(P.coeffs, P.lam, P.F, P.f, grid, tg, scheme=P.scheme,
                                     p=P.p, theta=P.theta, truncation_tol=math.inf)
            dt = tg.dt
        diff = rep.solution.values - np.asarray(P.exact(grid.s), dtype=float)
        err = lp_theta_norm(grid.sampled(diff), spec)
        errors.append(err)
        if k == 0 or errors[k] == 0.0 or errors[k - 1] == 0.0:
            order = math.nan
        else:
            order = math.log2(errors[k - 1] / errors[k])
        rows.append(ConvergenceRow(grid.h, dt, err, order))
    if any(e1 > e0 for e0, e1 in zip(errors[:-1], errors[1:])):
        warnings.warn(NonConvergence(f"errors not monotone: {errors}"), stacklevel=2)
    return rows
