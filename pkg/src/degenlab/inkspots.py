"""Interval-set measure algebra and the covering argument behind the
"crawling of ink spots" lemma on the real line.

For a finite union of intervals ``E`` and a center ``t``, the overlap
``r -> |E ∩ (t - r, t + r)|`` is piecewise linear with breakpoints
``|t - endpoint|``, so the density ``phi_t(r)`` is piecewise rational and
every level crossing can be solved exactly on its segment.  Inclusions are
understood up to null sets: touching intervals are merged.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from . import _kernels
from .errors import (CoverageShortfall, DomainError, HypothesisViolated, InvalidSpec,
                     NoCriticalRadius)
from .weighted_spaces import TimeWeight, ap_constant_estimate, ap_diverges

DILATION = 5.0
RADIUS_FLOOR = 1e-9
VITALI_TOL = 1e-6
LEVEL_TOL = 1e-10


class IntervalSet:
    """Sorted disjoint open intervals ``(a_i, b_i)``; immutable."""

    __slots__ = ("a", "b")

    def __init__(self, intervals: Iterable = ()):
        pairs = sorted((float(lo), float(hi)) for lo, hi in intervals)
        for lo, hi in pairs:
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise InvalidSpec("interval ends must be finite")
            if not lo < hi:
                raise InvalidSpec(f"empty or reversed interval ({lo}, {hi})")
        merged: list[list[float]] = []
        for lo, hi in pairs:
            if merged and lo <= merged[-1][1]:
                merged[-1][1] = max(merged[-1][1], hi)
            else:
                merged.append([lo, hi])
        a = np.array([m[0] for m in merged], dtype=float)
        b = np.array([m[1] for m in merged], dtype=float)
        a.flags.writeable = False
        b.flags.writeable = False
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    def __setattr__(self, name, value):
        raise AttributeError("IntervalSet is immutable")

    @property
    def intervals(self) -> list[tuple[float, float]]:
        return list(zip(self.a.tolist(), self.b.tolist()))

    @property
    def total_length(self) -> float:
        return float(np.sum(self.b - self.a))

    measure = total_length

    @property
    def is_empty(self) -> bool:
        return self.a.size == 0

    def __len__(self) -> int:
        return int(self.a.size)

    def __repr__(self) -> str:
        return f"IntervalSet({self.intervals})"

    def hull(self) -> tuple[float, float]:
        return (float(self.a[0]), float(self.b[-1])) if len(self) else (0.0, 0.0)

    def overlap(self, lo, hi) -> np.ndarray:
        """``|E ∩ (lo, hi)|``, vectorized over ``lo, hi``."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        if self.is_empty:
            return np.zeros(np.broadcast(lo, hi).shape)
        left = np.maximum(self.a, lo[..., None])
        right = np.minimum(self.b, hi[..., None])
        return np.clip(right - left, 0.0, None).sum(axis=-1)

    def covers(self, lo, hi, tol: float = 1e-12) -> np.ndarray:
        """Whether ``(lo, hi) ⊂ E`` up to a set of measure ``tol * (hi - lo)``."""
        lo = np.asarray(lo, dtype=float)
        hi = np.asarray(hi, dtype=float)
        width = np.maximum(hi - lo, 0.0)
        return width - self.overlap(lo, hi) <= tol * np.maximum(width, 1.0)

    def union(self, other: "IntervalSet") -> "IntervalSet":
        return IntervalSet(self.intervals + other.intervals)

    def intersection(self, other: "IntervalSet") -> "IntervalSet":
        out = []
        for lo, hi in self.intervals:
            for c, d in other.intervals:
                l, r = max(lo, c), min(hi, d)
                if l < r:
                    out.append((l, r))
        return IntervalSet(out)

    def difference_measure(self, other: "IntervalSet") -> float:
        return self.total_length - self.intersection(other).total_length

    def weighted_measure(self, w: TimeWeight) -> float:
        return float(np.sum(w.measure(self.a, self.b)))


@dataclass(frozen=True)
class Cylinder:
    t: float
    R: float
    T: float = math.inf

    def __post_init__(self):
        if not self.R > 0:
            raise DomainError(f"radius must be positive, got {self.R}")

    @property
    def interval(self) -> tuple[float, float]:
        return (self.t - self.R, self.t + self.R)

    @property
    def clipped(self) -> tuple[float, float]:
        """``C_R(t) ∩ {s <= T}`` (possibly empty, then ``lo >= hi``)."""
        return (self.t - self.R, min(self.t + self.R, self.T))

    def dilated(self, factor: float = DILATION) -> "Cylinder":
        return Cylinder(self.t, factor * self.R, self.T)


def density(E: IntervalSet, t: float, r: float) -> float:
    """``|E ∩ C_r(t)| / |C_r(t)|``."""
    if not r > 0:
        raise DomainError(f"radius must be positive, got {r}")
    return float(E.overlap(np.array(t - r), np.array(t + r))) / (2.0 * r)


def critical_radii(E: IntervalSet, centers, gamma: float) -> np.ndarray:
    """Vector of ``sup{r : phi_t(r) = gamma}`` (``nan`` where none)."""
    if not 0 < gamma < 1:
        raise DomainError(f"gamma must lie in (0, 1), got {gamma}")
    c = np.atleast_1d(np.asarray(centers, dtype=float))
    if E.is_empty:
        return np.full(c.shape, np.nan)
    return _kernels.active().critical_radii(E.a, E.b, c, float(gamma))


def critical_radius(E: IntervalSet, t: float, gamma: float) -> float:
    R = float(critical_radii(E, [t], gamma)[0])
    if not math.isfinite(R) or R <= 0:
        raise NoCriticalRadius(f"phi_t never reaches {gamma} at t={t}")
    if abs(density(E, t, R) - gamma) > LEVEL_TOL:
        raise NoCriticalRadius(f"level mismatch at t={t}: {density(E, t, R)} vs {gamma}")
    return R


@dataclass(frozen=True)
class CoverSelection:
    centers: tuple
    radii: tuple
    gamma: float
    dilation: float = DILATION
    residual: float = 0.0
    refinement: int = 0

    @property
    def cylinders(self) -> list[Cylinder]:
        return [Cylinder(t, R) for t, R in zip(self.centers, self.radii)]

    def __len__(self) -> int:
        return len(self.centers)


def _candidate_centers(E: IntervalSet, level: int) -> np.ndarray:
    k = np.arange(1, 2 ** level) / 2.0 ** level
    return (E.a[:, None] + (E.b - E.a)[:, None] * k[None, :]).ravel()


def _greedy(E: IntervalSet, centers: np.ndarray, gamma: float, floor: float):
    R = critical_radii(E, centers, gamma)
    ok = np.isfinite(R) & (R >= floor)
    t, R = centers[ok], R[ok]
    order = np.argsort(-R, kind="stable")
    t, R = t[order], R[order]
    alive = np.ones(t.size, dtype=bool)
    chosen_t, chosen_R = [], []
    for i in range(t.size):
        if not alive[i]:
            continue
        chosen_t.append(float(t[i]))
        chosen_R.append(float(R[i]))
        # candidates whose open cylinder meets the selected one
        hit = np.abs(t - t[i]) < R + R[i]
        alive &= ~hit
    return chosen_t, chosen_R


def _vitali_residual(E: IntervalSet, centers, radii, factor: float) -> float:
    if not centers:
        return E.total_length
    cover = IntervalSet((c - factor * r, c + factor * r) for c, r in zip(centers, radii))
    return E.difference_measure(cover)


def select_cover(E: IntervalSet, gamma: float, max_level: int = 14,
                 floor_rel: float = RADIUS_FLOOR) -> CoverSelection:
    """Greedy disjoint selection of critical cylinders (largest radius
    first) over a dyadically refined lattice of centers in ``E``, refined
    until the 5R dilations cover ``E`` up to ``1e-6 |E|``."""
    if not 0 < gamma < 1:
        raise DomainError(f"gamma must lie in (0, 1), got {gamma}")
    if E.is_empty:
        return CoverSelection((), (), gamma)
    total = E.total_length
    floor = floor_rel * total
    residual = total
    for level in range(1, max_level + 1):
        ts, Rs = _greedy(E, _candidate_centers(E, level), gamma, floor)
        residual = _vitali_residual(E, ts, Rs, DILATION)
        if residual < VITALI_TOL * total:
            return CoverSelection(tuple(ts), tuple(Rs), gamma, DILATION, residual, level)
    raise CoverageShortfall(f"Vitali residual {residual:.3e} after {max_level} refinements",
                            residual=residual)


def hypothesis_check(E: IntervalSet, F: IntervalSet, gamma: float, T: float = math.inf,
                     scan: int = 2 ** 8) -> tuple[bool, Optional[tuple[float, float]]]:
    """Search for ``(t, R)`` with ``t <= T``, ``phi_t(R) >= gamma`` and the
    clipped cylinder not inside ``F``.

    Centers (ascending): endpoints of ``E`` and ``F`` plus ``scan + 1``
    lattice points over their hull.  Radii per center: ``hull 2^-j``
    (descending) followed by the critical radius.  The first violation in
    this order is returned as the witness.
    """
    if scan < 2 ** 8:
        raise InvalidSpec("scan resolution must be at least 2^8")
    if not 0 < gamma < 1:
        raise DomainError(f"gamma must lie in (0, 1), got {gamma}")
    if E.is_empty:
        return True, None
    both = E.union(F) if not F.is_empty else E
    lo, hi = both.hull()
    width = hi - lo
    centers = np.unique(np.concatenate((E.a, E.b, F.a, F.b, np.linspace(lo, hi, scan + 1))))
    centers = centers[centers <= T]
    if centers.size == 0:
        return True, None
    ladder = width * 2.0 ** -np.arange(1, 41)
    crit = critical_radii(E, centers, gamma)
    radii = np.concatenate((np.broadcast_to(ladder, (centers.size, ladder.size)),
                            crit[:, None]), axis=1)
    t = np.broadcast_to(centers[:, None], radii.shape)
    valid = np.isfinite(radii) & (radii > 0)
    r = np.where(valid, radii, 1.0)
    dens = E.overlap(t - r, t + r) / (2.0 * r)
    cl_hi = np.minimum(t + r, T)
    inside = F.covers(t - r, cl_hi) | (cl_hi <= t - r)
    bad = valid & (dens >= gamma - 1e-12) & ~inside
    if not bad.any():
        return True, None
    i, j = np.argwhere(bad)[0]
    return False, (float(t[i, j]), float(radii[i, j]))


# ---------------------------------------------------------------------------
# weights: doubling, measure comparison, and the lemma's bound
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeightCheck:
    status: str  # "pass" | "fail" | "not-applicable"
    constant: float = math.nan
    witness: Optional[tuple] = None

    def __bool__(self) -> bool:
        return self.status == "pass"


def ap_estimate(w: TimeWeight, p: float, resolution: int = 2 ** 10) -> float:
    return ap_constant_estimate(w, p, resolution)


def doubling_check(w: TimeWeight, p: float, centers: Optional[Sequence[float]] = None,
                   radii: Optional[Sequence[float]] = None,
                   resolution: int = 2 ** 10) -> WeightCheck:
    """``w(C_R(t)) <= R^p [w]_{A_p} w(C_1(t))`` on a lattice with ``R in (1, 2^10]``."""
    if ap_diverges(w, p):
        return WeightCheck("not-applicable")
    A = ap_estimate(w, p, resolution)
    t = np.linspace(-8.0, 8.0, 33) if centers is None else np.asarray(centers, dtype=float)
    R = 2.0 ** np.linspace(0.05, 10.0, 60) if radii is None else np.asarray(radii, dtype=float)
    if np.any(R <= 1):
        raise DomainError("doubling radii must exceed 1")
    tt, RR = np.meshgrid(t, R, indexing="ij")
    big = w.measure(tt - RR, tt + RR)
    unit = w.measure(tt - 1.0, tt + 1.0)
    ok = big <= RR ** p * A * unit * (1.0 + 1e-12)
    if ok.all():
        return WeightCheck("pass", A)
    i, j = np.argwhere(~ok)[0]
    return WeightCheck("fail", A, (float(tt[i, j]), float(RR[i, j])))


def _extremal_ratio(w: TimeWeight, lo: np.ndarray, hi: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Largest ``w(E) / w(C)`` over ``E ⊂ C = (lo, hi)`` with ``|E| = rho |C|``.

    ``|t|^a`` is monotone in ``|t|``, so the extremal set is a superlevel set
    (for ``a >= 0`` the part of ``C`` farthest from 0, else the nearest).
    """
    L = hi - lo
    m = rho * L
    total = w.measure(lo, hi)
    if w.exponent == 0:
        return rho * np.ones_like(total)
    # superlevel set of |t|^a (a > 0) is C minus a window around 0; for
    # a < 0 it is a window around 0.  Find the window by bisection on its
    # half-width around the clipped origin.
    far = w.exponent > 0
    c = np.clip(0.0, lo, hi)
    target = L - m if far else m
    left, right = np.zeros_like(L), L.copy()
    for _ in range(80):
        mid = 0.5 * (left + right)
        win = np.minimum(hi, c + mid) - np.maximum(lo, c - mid)
        big = win > target
        right = np.where(big, mid, right)
        left = np.where(big, left, mid)
    win_w = w.measure(np.maximum(lo, c - right), np.minimum(hi, c + right))
    best = total - win_w if far else win_w
    return best / total


def calibrate_delta(w: TimeWeight, p: float, N: Optional[float] = None,
                    resolution: int = 2 ** 10) -> tuple[float, float]:
    """``(N, delta)`` with ``w(E)/w(C) <= N (|E|/|C|)^delta`` on the extremal
    sets of a scale-free family of intervals.  ``N`` defaults to the
    ``A_p`` estimate; ``delta = 1`` for the unit weight."""
    if w.exponent == 0:
        return 1.0, 1.0
    if N is None:
        N = ap_estimate(w, p, resolution)
    # power weights are dilation invariant: intervals (c - 1, c + 1)
    cs = np.linspace(0.0, 6.0, 61)
    rho = np.geomspace(1e-6, 1.0 - 1e-9, 200)
    cc, rr = np.meshgrid(cs, rho, indexing="ij")
    ratio = _extremal_ratio(w, cc - 1.0, cc + 1.0, rr)
    q = np.log(ratio / N) / np.log(rr)
    q = np.where(ratio / N >= 1.0, np.where(ratio / N > 1.0, -np.inf, np.inf), q)
    delta = float(min(1.0, np.min(q)))
    if not delta > 0:
        raise InvalidSpec(f"no positive delta for N={N}")
    return float(N), delta


def measure_comparison_check(w: TimeWeight, p: float, E: IntervalSet, C: Cylinder,
                             N: Optional[float] = None, delta: Optional[float] = None,
                             tol: float = 1e-12) -> WeightCheck:
    """``N^-1 rho^p <= w(E)/w(C) <= N rho^delta`` for ``E ⊂ C``,
    ``rho = |E|/|C|``.  The lower bound uses the ``A_p`` estimate."""
    lo, hi = C.interval
    if E.difference_measure(IntervalSet([(lo, hi)])) > tol * (hi - lo):
        raise DomainError("E must lie inside the cylinder")
    if N is None or delta is None:
        Nc, dc = calibrate_delta(w, p)
        N = Nc if N is None else N
        delta = dc if delta is None else delta
    A = ap_estimate(w, p)
    rho = E.total_length / (hi - lo)
    wc = float(w.measure(lo, hi))
    ratio = E.weighted_measure(w) / wc
    lower = rho ** p / A
    upper = N * rho ** delta
    ok = lower * (1 - tol) <= ratio <= upper * (1 + tol)
    return WeightCheck("pass" if ok else "fail", N, None if ok else (rho, ratio, lower, upper))


@dataclass(frozen=True)
class LemmaReport:
    hypothesis_holds: bool
    counterexample: Optional[tuple]
    wE: float
    wF: float
    bound_rhs: float
    conclusion_holds: bool
    p: float
    ap_constant: float
    delta: float
    N: float
    gamma: float


def ink_spots_bound(E: IntervalSet, F: IntervalSet, gamma: float, w: TimeWeight, p: float,
                    T: float = math.inf, resolution: int = 2 ** 10) -> LemmaReport:
    """``w(E) <= 10^p [w]^2 gamma^delta w(F)`` after verifying the hypothesis."""
    holds, witness = hypothesis_check(E, F, gamma, T)
    if not holds:
        raise HypothesisViolated(f"hypothesis fails at (t, R) = {witness}", witness=witness)
    A = ap_estimate(w, p, resolution)
    _, delta = calibrate_delta(w, p, resolution=resolution)
    N = 10.0 ** p * A * A
    wE, wF = E.weighted_measure(w), F.weighted_measure(w)
    rhs = N * gamma ** delta * wF
    return LemmaReport(True, None, wE, wF, rhs, wE <= rhs, p, A, delta, N, gamma)
