"""Both sides of the a priori estimates, theta and lambda sweeps, and the
invariance checks.

The estimate ratio is

    ((1 + sqrt(lam)) ||u|| + ||x u'||) / (||x^-1 F|| + ||f|| / (1 + sqrt(lam)))

with all norms in ``L_{p,theta}`` (and additionally ``L_p`` in time for
the Cauchy problem).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np
from scipy.integrate import simpson

from .exact1d import (EulerProblem, Forcing, admissible_theta, data_norms,
                      euler_solve_exact, gauge_shift, gauss_integrate)
from .errors import InvalidSpec
from .fdsolver import (LogGrid, RoughCoefficients, TimeGrid, _breaks, as_log_data,
                       as_space_time, elliptic_solve_fd, parabolic_solve_fd)
from .weighted_spaces import NormSpec, lp_theta_norm

DEFAULT_EPS = (0.1, 0.01, 0.001)
BLOWUP_FACTOR = 10.0


@dataclass(frozen=True)
class EstimateReport:
    lhs: float
    rhs: float
    ratio: float
    p: float
    q: float
    theta: float
    lam: float
    grid_id: str = "exact"
    coeff_id: str = ""
    solver: str = "exact"
    window_violation: bool = False
    u_norm: float = 0.0
    du_norm: float = 0.0
    F_norm: float = 0.0
    f_norm: float = 0.0

    def as_row(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def _assemble_report(u_norm, du_norm, F_norm, f_norm, p, theta, lam, **tags) -> EstimateReport:
    sl = 1.0 + math.sqrt(lam)
    lhs = sl * u_norm + du_norm
    rhs = F_norm + f_norm / sl
    if lhs == 0.0 and rhs == 0.0:
        ratio = 0.0
    elif rhs == 0.0:
        ratio = math.inf
    else:
        ratio = lhs / rhs
    return EstimateReport(lhs, rhs, ratio, p, tags.pop("q", p), theta, lam, u_norm=u_norm,
                          du_norm=du_norm, F_norm=F_norm, f_norm=f_norm, **tags)


def _coeff_id(obj) -> str:
    if isinstance(obj, EulerProblem):
        r = obj.ratios
        return f"a={obj.a:g};ratios=({r.n_b:g},{r.n_bhat:g},{r.n_c:g})"
    if isinstance(obj, RoughCoefficients):
        r = obj.ratios
        return (f"{obj.variable}:a={obj.a.values};a0={obj.a0.values};c0={obj.c0.values};"
                f"ratios=({r.n_b:g},{r.n_bhat:g},{r.n_c:g})")
    return type(obj).__name__


def _grid_id(grid: LogGrid, tg: Optional[TimeGrid] = None) -> str:
    gid = f"s[{grid.s_min:g},{grid.s_max:g}]n{grid.n}"
    return gid if tg is None else f"{gid};T{tg.t_end:g}m{tg.m}"


def _spatial_data_norm(g, shift: float, p: float, theta: float, grid: LogGrid) -> float:
    d = as_log_data(g)
    if d is None:
        return 0.0
    if isinstance(d, Forcing):
        sup = d.support()
        if sup is None:
            return 0.0
        pts = d.breakpoints()
        pts = np.concatenate((pts[(pts >= sup[0]) & (pts <= sup[1])], sup))
    else:
        pts = np.concatenate((grid.s[[0, -1]], _breaks(d)))
        pts = pts[(pts >= grid.s_min) & (pts <= grid.s_max)]
    val = gauss_integrate(lambda s: np.abs(np.exp(shift * s) * d.at_s(s)) ** p
                          * np.exp(theta * s), pts)
    return val ** (1.0 / p)


def coefficients_of(problem: EulerProblem) -> RoughCoefficients:
    return RoughCoefficients.constant(problem.a, problem.ratios, c0=problem.c0,
                                      nu=min(problem.a, 1.0 / problem.a))


def default_grid() -> LogGrid:
    return LogGrid(-40.0, 40.0, 8001)


def estimate_ratio_elliptic(problem: Union[EulerProblem, tuple], p: float, theta: float,
                            lam: Optional[float] = None, solver: str = "exact",
                            grid: Optional[LogGrid] = None) -> EstimateReport:
    """Estimate ratio for an ``EulerProblem`` (exact or FD) or, with the FD
    solver, for a ``(RoughCoefficients, F, f)`` triple."""
    spec = NormSpec(p, theta)
    if solver not in ("exact", "fd"):
        raise InvalidSpec(f"solver must be 'exact' or 'fd', got {solver!r}")
    if isinstance(problem, EulerProblem):
        if lam is None:
            lam = problem.lam
        problem = replace(problem, lam=lam)
        coeffs, F, f = coefficients_of(problem), problem.F, problem.f
    else:
        if solver == "exact":
            raise InvalidSpec("the exact solver needs an EulerProblem")
        coeffs, F, f = problem
        lam = 0.0 if lam is None else lam
    cid = _coeff_id(problem if isinstance(problem, EulerProblem) else coeffs)
    if solver == "exact":
        sol = euler_solve_exact(problem, p, theta)
        un, dn = sol.norms()
        Fn, fn = data_norms(problem, p, theta)
        return _assemble_report(un, dn, Fn, fn, p, theta, lam, coeff_id=cid, solver="exact")
    grid = grid or default_grid()
    rep = elliptic_solve_fd(coeffs, lam, F, f, grid, p=p, theta=theta,
                            truncation_tol=math.inf)
    u = rep.solution
    un = lp_theta_norm(u, spec)
    dn = lp_theta_norm(u.with_values(u.log_derivative()), spec)
    if isinstance(problem, EulerProblem):
        Fn, fn = data_norms(problem, p, theta)
    else:
        Fn = _spatial_data_norm(F, -1.0, p, theta, grid)
        fn = _spatial_data_norm(f, 0.0, p, theta, grid)
    return _assemble_report(un, dn, Fn, fn, p, theta, lam, coeff_id=cid, solver="fd",
                            grid_id=_grid_id(grid), window_violation=rep.window_violation)


def _time_lp(per_step: np.ndarray, t: np.ndarray, p: float) -> float:
    """``(int_0^T g(t)^p dt)^(1/p)`` from the per-level values ``g``."""
    return max(float(simpson(per_step ** p, x=t)), 0.0) ** (1.0 / p)


def estimate_ratio_parabolic(coeffs: RoughCoefficients, p: float, theta: float, lam: float,
                             F, f, grid: LogGrid, tg: TimeGrid,
                             scheme: str = "crank-nicolson") -> EstimateReport:
    """Space-time estimate ratio with ``q = p`` and unit time weight."""
    spec = NormSpec(p, theta)
    rep = parabolic_solve_fd(coeffs, lam, F, f, grid, tg, scheme=scheme, p=p, theta=theta,
                             truncation_tol=math.inf)
    t, s = tg.t, grid.s
    U = rep.space_time
    un = np.array([lp_theta_norm(grid.sampled(row), spec) for row in U])
    dn = np.array([lp_theta_norm(grid.sampled(np.gradient(row, grid.h, edge_order=2)), spec)
                   for row in U])
    Fd, fd = as_space_time(F), as_space_time(f)
    norms = []
    for d, shift in ((Fd, -1.0), (fd, 0.0)):
        if d is None:
            norms.append(np.zeros(t.size))
            continue
        w = np.exp(shift * s)
        norms.append(np.array([lp_theta_norm(grid.sampled(w * d.at(tk)(s)), spec)
                               for tk in t]))
    return _assemble_report(_time_lp(un, t, p), _time_lp(dn, t, p), _time_lp(norms[0], t, p),
                            _time_lp(norms[1], t, p), p, theta, lam, coeff_id=_coeff_id(coeffs),
                            solver=f"fd-{scheme}", grid_id=_grid_id(grid, tg),
                            window_violation=rep.window_violation)


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepResult:
    rows: tuple
    blowup_flags: tuple
    growth: dict = field(default_factory=dict)
    reference: Optional[EstimateReport] = None
    lambda_star: Optional[float] = None
    refinement_change: Optional[float] = None


def _map(fn, items, workers: int):
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def theta_sweep(problem: EulerProblem, p: float, thetas: Optional[Sequence[float]] = None,
                lam: float = 0.0, eps: Sequence[float] = DEFAULT_EPS, solver: str = "exact",
                grid: Optional[LogGrid] = None, factor: float = BLOWUP_FACTOR,
                workers: int = 1) -> SweepResult:
    """Sweep theta across and around the window and flag blow-up.

    An endpoint is flagged when the ratio approached from inside the window
    grows monotonically as ``eps`` shrinks and its last value is at least
    ``factor`` times the ratio at the window midpoint.  Any other theta
    whose ratio reaches ``factor`` times the midpoint ratio is flagged too.
    """
    problem = replace(problem, lam=lam)
    win = admissible_theta(problem.roots, p)
    lo, hi = win.interior
    mid = 0.5 * (lo + hi)
    eps = sorted(eps, reverse=True)
    if thetas is None:
        thetas = np.linspace(lo - 0.5, hi + 0.5, 13)
    lattice = [float(t) for t in thetas if min(abs(t - lo), abs(t - hi)) >= 1e-3]
    approach = {}
    for e in (lo, hi):
        for side in (-1.0, 1.0):
            approach[(e, side)] = [e + side * d for d in eps]
    pts = sorted(set(lattice) | {mid} | {t for v in approach.values() for t in v})

    def run(th):
        return estimate_ratio_elliptic(problem, p, th, lam, solver, grid)

    reports = dict(zip(pts, _map(run, pts, workers)))
    ref = reports[mid].ratio
    growth = {}
    flags = []
    for e in (lo, hi):
        for side in (-1.0, 1.0):
            seq = [reports[t].ratio / ref for t in approach[(e, side)]]
            growth[(e, side)] = seq
        inside = growth[(e, 1.0 if e == lo else -1.0)]
        monotone = all(b > a for a, b in zip(inside[:-1], inside[1:]))
        if monotone and inside[-1] >= factor:
            flags.append(e)
    for t in lattice:
        if reports[t].ratio >= factor * ref:
            flags.append(t)
    rows = tuple(reports[t] for t in pts)
    return SweepResult(rows, tuple(sorted(flags)), growth, reports[mid])


def lambda_sweep(problem, p: float, theta: float,
                 lams: Sequence[float] = tuple([0.0] + [4.0 ** k for k in range(7)]),
                 grid: Optional[LogGrid] = None, solver: str = "fd",
                 tol: float = 0.1, workers: int = 1) -> SweepResult:
    """Ratio against lambda; ``lambda_star`` is the smallest lambda after
    which consecutive ratios agree within ``tol``.  The largest lambda is
    also rerun on a refined grid (``refinement_change``)."""
    grid = grid or default_grid()
    lams = sorted(float(v) for v in lams)

    def run(lam):
        return estimate_ratio_elliptic(problem, p, theta, lam, solver, grid)

    rows = _map(run, lams, workers)
    r = [row.ratio for row in rows]
    star = None
    for k in range(len(r) - 1, 0, -1):
        if not (math.isfinite(r[k]) and math.isfinite(r[k - 1])):
            break
        if r[k] == 0.0 and r[k - 1] == 0.0 or (
                r[k] > 0 and abs(r[k - 1] - r[k]) / r[k] < tol):
            star = lams[k - 1]
        else:
            break
    change = None
    if solver == "fd":
        fine = estimate_ratio_elliptic(problem, p, theta, lams[-1], solver, grid.refined())
        last = rows[-1].ratio
        change = 0.0 if last == fine.ratio else abs(fine.ratio - last) / max(abs(fine.ratio),
                                                                              1e-300)
    flags = tuple(row.lam for row in rows if row.window_violation)
    return SweepResult(tuple(rows), flags, lambda_star=star, refinement_change=change)


# ---------------------------------------------------------------------------
# invariance checks
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InvarianceReport:
    passed: bool
    tol: float
    details: tuple

    def __bool__(self) -> bool:
        return self.passed


def scaling_invariance_check(problem: EulerProblem, factors: Sequence[float], p: float,
                             theta: float, solver: str = "exact",
                             grid: Optional[LogGrid] = None,
                             tol: Optional[float] = None) -> InvarianceReport:
    """Ratio of the dilated problem (``F(sx)/s``, ``f(sx)``) against the
    original.  FD runs compare at tolerance ``20 h^2`` unless ``tol`` is set."""
    if solver == "fd":
        grid = grid or default_grid()
        tol = 20.0 * grid.h ** 2 if tol is None else tol
    else:
        tol = 1e-10 if tol is None else tol
    base = estimate_ratio_elliptic(problem, p, theta, None, solver, grid).ratio
    details = []
    ok = True
    for fac in factors:
        r = estimate_ratio_elliptic(problem.dilated(fac), p, theta, None, solver, grid).ratio
        err = abs(r - base) / max(abs(base), 1e-300) if r != base else 0.0
        details.append((fac, base, r, err))
        ok &= err <= tol
    return InvarianceReport(bool(ok), tol, tuple(details))


def gauge_invariance_check(problem: EulerProblem, gammas: Sequence[float], p: float,
                           theta: float, tol: float = 1e-8,
                           probe: Optional[np.ndarray] = None) -> InvarianceReport:
    """Check the gauge substitution ``v = x^gamma u`` on the exact solver.

    For each ``gamma`` the shifted problem at ``theta - gamma p`` must have
    roots shifted by ``-gamma``, a solution equal to ``x^gamma u`` at the
    probe points, and the same ``||u||`` and ``||x^-1 F||``.  The full ratio
    is not compared: ``x v'`` and the shifted ``f`` pick up ``gamma``
    dependent terms.
    """
    sol = euler_solve_exact(problem, p, theta)
    un, _ = sol.norms()
    Fn, _ = data_norms(problem, p, theta)
    if probe is None:
        probe = np.linspace(-6.0, 6.0, 49)
    u = sol.evaluate(probe)[0]
    scale = max(np.max(np.abs(u)), 1e-300)
    details = []
    ok = True
    for g in gammas:
        shifted = gauge_shift(problem, g)
        th = theta - g * p
        r0, r1 = problem.roots, shifted.roots
        root_err = max(abs(r1.alpha - (r0.alpha - g)), abs(r1.beta - (r0.beta - g)))
        s2 = euler_solve_exact(shifted, p, th)
        v = s2.evaluate(probe)[0]
        sol_err = float(np.max(np.abs(v * np.exp(-g * probe) - u)) / scale)
        vn, _ = s2.norms()
        Gn, _ = data_norms(shifted, p, th)
        norm_err = abs(vn - un) / max(un, 1e-300)
        data_err = abs(Gn - Fn) / max(Fn, 1e-300) if Fn else abs(Gn)
        worst = max(root_err, sol_err, norm_err, data_err)
        details.append(dict(gamma=g, root_err=root_err, solution_err=sol_err,
                            norm_err=norm_err, data_err=data_err))
        ok &= worst <= tol
    return InvarianceReport(bool(ok), tol, tuple(details))
