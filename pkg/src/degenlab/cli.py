"""Batch experiment runner.

    degenlab run --config exp.toml --out results/
    degenlab theta-sweep --config sweep.toml
    degenlab validate exp.toml

A config is a TOML file with a top-level ``kind`` and optional ``seed``,
``params``, ``grid``, ``time`` and ``output`` tables.  Unknown keys are
rejected.  Each run writes ``results.csv`` (or ``results.json``) and
``summary.json`` into the output directory.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import os
import re
import sys
from datetime import datetime, timezone
from typing import Any, Optional

import jsonschema
import numpy as np
import tomli

from .errors import ConfigError, DegenlabError
from .exact1d import (BSParams, EulerProblem, Forcing, LowerOrderRatios, Payoff, PowerPiece,
                      admissible_theta, bs_call_closed_form, bs_solve,
                      euler_solve_exact)
from .fdsolver import (ConvergenceProblem, LogGrid, RoughCoefficients, TimeGrid,
                       bs_price_fd, convergence_study, elliptic_solve_fd)
from .inkspots import (IntervalSet, doubling_check, hypothesis_check, ink_spots_bound,
                       select_cover)
from .verifier import (coefficients_of, estimate_ratio_elliptic, estimate_ratio_parabolic,
                       lambda_sweep, theta_sweep)
from .weighted_spaces import (NormSpec, TimeWeight, ap_constant_estimate,
                              ap_diverges, build_cutoff, dyadic_norm, h1_theta_norm,
                              hardy_check, lp_theta_norm)

KINDS = ("norms", "hardy", "euler-exact", "solve-elliptic", "solve-parabolic", "bs-price",
         "theta-sweep", "lambda-sweep", "ink-spots", "ap-weight", "convergence")

EXIT_OK, EXIT_CONFIG, EXIT_MODULE = 0, 2, 3

# ---------------------------------------------------------------------------
# schema
# ---------------------------------------------------------------------------

_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}
_P = {"type": "number", "exclusiveMinimum": 1}
_INT = {"type": "integer"}
_PIECES = {"type": "array", "items": {"type": "array", "items": _NUM,
                                      "minItems": 2, "maxItems": 4}}
_INTERVALS = {"type": "array", "items": {"type": "array", "items": _NUM,
                                         "minItems": 2, "maxItems": 2}}
_WEIGHT = {"type": "object", "additionalProperties": False,
           "properties": {"kind": {"enum": ["one", "power"]}, "a": _NUM}}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "additionalProperties": False, "properties": props,
            "required": list(required)}


_PROFILE = {"profile": {"enum": ["xexp", "gaussian", "bump"]}, "center": _NUM,
            "width": _POS, "amplitude": _NUM}
_PROBLEM = {"a": _POS, "ratios": {"type": "array", "items": _NUM, "minItems": 3,
                                  "maxItems": 3},
            "lam": _NONNEG, "c0": _POS, "F": _PIECES, "f": _PIECES}

PARAMS = {
    "norms": _obj({**_PROFILE, "p": _P, "theta": _NUM, "random": _INT}),
    "hardy": _obj({**_PROFILE, "p": _P, "theta": _NUM, "tol": _POS}),
    "euler-exact": _obj({**_PROBLEM, "p": _P, "theta": _NUM,
                         "probe": {"type": "array", "items": _POS}}),
    "solve-elliptic": _obj({**_PROBLEM, "p": _P, "theta": _NUM}),
    "solve-parabolic": _obj({**_PROBLEM, "p": _P, "theta": _NUM, "a0": _POS}),
    "bs-price": _obj({"sigma": _POS, "r": _NUM, "horizon": _POS,
                      "payoff": {"enum": ["call", "put"]}, "strike": _POS,
                      "spot": {"type": "array", "items": _POS}, "n_space": _INT,
                      "n_time": _INT}),
    "theta-sweep": _obj({**_PROBLEM, "p": _P, "thetas": {"type": "array", "items": _NUM},
                         "eps": {"type": "array", "items": _POS}, "solver":
                         {"enum": ["exact", "fd"]}}),
    "lambda-sweep": _obj({**_PROBLEM, "p": _P, "theta": _NUM,
                          "lams": {"type": "array", "items": _NONNEG}}),
    "ink-spots": _obj({"E": _INTERVALS, "F": _INTERVALS, "gamma": _NUM, "p": _P,
                       "T": _NUM, "weight": _WEIGHT, "random": _INT}),
    "ap-weight": _obj({"weight": _WEIGHT, "p": _P,
                       "resolutions": {"type": "array", "items": _INT}}),
    "convergence": _obj({**_PROBLEM, "p": _P, "theta": _NUM, "levels": _INT}),
}

_GRID = _obj({"s_min": _NUM, "s_max": _NUM, "x_min": _POS, "x_max": _POS, "n": _INT})
_TIME = _obj({"t_end": _POS, "m": _INT,
              "scheme": {"enum": ["implicit-euler", "crank-nicolson"]}})
_OUTPUT = _obj({"dir": {"type": "string"}, "format": {"enum": ["csv", "json"]}})


def schema_for(kind: str) -> dict:
    return _obj({"kind": {"enum": list(KINDS)},
                 "seed": {"type": "integer", "minimum": 0, "maximum": 2 ** 64 - 1},
                 "threads": {"type": "integer", "minimum": 1},
                 "params": PARAMS[kind], "grid": _GRID, "time": _TIME,
                 "output": _OUTPUT}, required=["kind"])


def _line_of(text: str, key: str) -> Optional[int]:
    pat = re.compile(rf"^\s*\"?{re.escape(key)}\"?\s*=|^\s*\[{re.escape(key)}\]")
    for i, line in enumerate(text.splitlines(), start=1):
        if pat.search(line):
            return i
    return None


def _diagnostic(err: jsonschema.ValidationError, text: str) -> dict:
    path = ".".join(str(p) for p in err.absolute_path)
    key = None
    if err.validator == "additionalProperties":
        m = re.findall(r"'([^']+)'", err.message)
        key = m[0] if m else None
        path = f"{path}.{key}" if path and key else (key or path)
    elif err.absolute_path:
        key = str(list(err.absolute_path)[-1])
    return {"level": "error", "field": path or "<root>", "line": _line_of(text, key) if key
            else None, "message": err.message}


def parse_config(text: str) -> tuple[dict, list[dict]]:
    """Parse and schema-check; returns ``(config, diagnostics)``."""
    try:
        cfg = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        return {}, [{"level": "error", "field": "<toml>", "line": None, "message": str(exc)}]
    kind = cfg.get("kind")
    if kind not in KINDS:
        return cfg, [{"level": "error", "field": "kind", "line": _line_of(text, "kind"),
                      "message": f"kind must be one of {list(KINDS)}, got {kind!r}"}]
    validator = jsonschema.Draft202012Validator(schema_for(kind))
    diags = [_diagnostic(e, text) for e in sorted(validator.iter_errors(cfg), key=str)]
    if not diags:
        diags += _semantic_warnings(cfg, text)
    return cfg, diags


def _semantic_warnings(cfg: dict, text: str) -> list[dict]:
    prm = cfg.get("params", {})
    out = []
    if "ratios" in prm and "p" in prm and "theta" in prm:
        try:
            prob = _problem(prm)
            win = admissible_theta(prob.roots, prm["p"])
        except DegenlabError as exc:
            return [{"level": "error", "field": "params.ratios",
                     "line": _line_of(text, "ratios"), "message": str(exc)}]
        if win.classify(prm["theta"]) == "forbidden":
            out.append({"level": "warning", "field": "params.theta",
                        "line": _line_of(text, "theta"),
                        "message": f"theta={prm['theta']} is an endpoint of the window "
                                   f"({win.lower:g}, {win.upper:g})"})
    return out


def load_config(path: str, overrides: Optional[dict] = None) -> dict:
    try:
        with open(path, "rb") as fh:
            text = fh.read().decode("utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    cfg, diags = parse_config(text)
    errors = [d for d in diags if d["level"] == "error"]
    if errors:
        raise ConfigError(f"{len(errors)} config error(s)", diagnostics=errors)
    for k, v in (overrides or {}).items():
        if v is not None:
            cfg[k] = v
    return cfg


def config_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


# ---------------------------------------------------------------------------
# builders
# ---------------------------------------------------------------------------


def _forcing(pieces) -> Forcing:
    out = []
    for pc in pieces or []:
        lo, hi = pc[0], pc[1]
        coef = pc[2] if len(pc) > 2 else 1.0
        power = pc[3] if len(pc) > 3 else 0.0
        out.append(PowerPiece(lo, hi, coef, power))
    return Forcing(tuple(out))


def _problem(prm: dict) -> EulerProblem:
    r = prm.get("ratios", [0.0, 0.0, 0.0])
    return EulerProblem(prm.get("a", 1.0), LowerOrderRatios(*r), _forcing(prm.get("F")),
                        _forcing(prm.get("f")), prm.get("lam", 0.0), prm.get("c0", 1.0))


def _grid(cfg: dict, default: LogGrid) -> LogGrid:
    g = cfg.get("grid")
    if not g:
        return default
    n = g.get("n", default.n)
    if "x_min" in g or "x_max" in g:
        return LogGrid(math.log(g.get("x_min", math.exp(default.s_min))),
                       math.log(g.get("x_max", math.exp(default.s_max))), n)
    return LogGrid(g.get("s_min", default.s_min), g.get("s_max", default.s_max), n)


def _profile(prm: dict, grid: LogGrid, rng: Optional[np.random.Generator] = None):
    s = grid.s
    kind = prm.get("profile", "xexp")
    c = prm.get("center", 0.0)
    w = prm.get("width", 1.0)
    amp = prm.get("amplitude", 1.0)
    if rng is not None:
        c, w, amp = rng.uniform(-2, 2), rng.uniform(0.3, 2.0), rng.uniform(0.5, 2.0)
    if kind == "xexp":
        x = np.exp(s)
        v = amp * x * np.exp(-x)
        dv = v * (1.0 - x)
    elif kind == "gaussian":
        z = (s - c) / w
        v = amp * np.exp(-z * z)
        dv = -2.0 * z / w * v
    else:
        z = (s - c) / w
        inside = np.abs(z) < 1
        v = np.zeros_like(s)
        dv = np.zeros_like(s)
        zi = z[inside]
        v[inside] = amp * np.exp(-1.0 / (1.0 - zi * zi))
        dv[inside] = v[inside] * (-2.0 * zi / (1.0 - zi * zi) ** 2) / w
    return grid.sampled(v, dv)


def _weight(spec: Optional[dict]) -> TimeWeight:
    spec = spec or {}
    return TimeWeight.one() if spec.get("kind", "one") == "one" else \
        TimeWeight.power(spec.get("a", 0.0))


def _random_intervals(rng: np.random.Generator) -> IntervalSet:
    m = int(rng.integers(1, 8))
    pts = np.sort(rng.uniform(0.0, 10.0, 2 * m))
    return IntervalSet(zip(pts[::2], pts[1::2]))


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------


def _report_row(rep) -> dict:
    row = rep.as_row()
    row["window_violation"] = bool(row["window_violation"])
    return row


def run_norms(cfg, rng, workers):
    prm = cfg.get("params", {})
    grid = _grid(cfg, LogGrid(-12.0, 12.0, 4801))
    spec = NormSpec(prm.get("p", 2.0), prm.get("theta", 0.0))
    cut = build_cutoff(spec.p)
    count = prm.get("random", 0)
    rows = []
    for k in range(max(count, 1)):
        u = _profile(prm, grid, rng if count else None)
        direct = h1_theta_norm(u, spec)
        dyad = dyadic_norm(u, spec, cut)
        rows.append({"index": k, "p": spec.p, "theta": spec.theta,
                     "lp": lp_theta_norm(u, spec), "h1": direct, "dyadic": dyad,
                     "equivalence_ratio": dyad / direct if direct else math.nan})
    return rows, {}


def run_hardy(cfg, rng, workers):
    prm = cfg.get("params", {})
    grid = _grid(cfg, LogGrid(-30.0, math.log(60.0), 14001))
    spec = NormSpec(prm.get("p", 2.0), prm.get("theta", 1.0))
    rep = hardy_check(_profile(prm, grid), spec, prm.get("tol", 1e-8))
    return [{"p": spec.p, "theta": spec.theta, "lhs": rep.lhs, "rhs": rep.rhs,
             "holds": rep.holds, "slack": rep.slack}], {}


def run_euler_exact(cfg, rng, workers):
    prm = cfg.get("params", {})
    prob = _problem(prm)
    p, th = prm.get("p", 2.0), prm.get("theta", 0.0)
    sol = euler_solve_exact(prob, p, th)
    rep = estimate_ratio_elliptic(prob, p, th)
    rows = []
    for x in prm.get("probe", [0.5, 1.0, 1.5, 2.0, 3.0]):
        u, du = sol.evaluate(np.array(math.log(x)))
        rows.append({"x": x, "u": float(u), "xDu": float(du), "regime": sol.regime})
    roots = prob.roots
    return rows, {"alpha": roots.alpha, "beta": roots.beta, "regime": sol.regime,
                  "ratio": rep.ratio, "lhs": rep.lhs, "rhs": rep.rhs}


def run_solve_elliptic(cfg, rng, workers):
    prm = cfg.get("params", {})
    prob = _problem(prm)
    p, th = prm.get("p", 2.0), prm.get("theta", 0.0)
    grid = _grid(cfg, LogGrid(-40.0, 40.0, 8001))
    sol = elliptic_solve_fd(coefficients_of(prob), prob.lam, prob.F, prob.f, grid, p=p,
                            theta=th, truncation_tol=math.inf)
    rep = estimate_ratio_elliptic(prob, p, th, prob.lam, "fd", grid)
    row = _report_row(rep)
    row.update(residual_norm=sol.residual_norm, truncation_certificate=sol.truncation_certificate,
               max_abs_u=float(np.max(np.abs(sol.values))), backend=sol.backend)
    return [row], {}


def run_solve_parabolic(cfg, rng, workers):
    prm = cfg.get("params", {})
    prob = _problem(prm)
    p, th = prm.get("p", 2.0), prm.get("theta", 0.0)
    grid = _grid(cfg, LogGrid(-20.0, 20.0, 2001))
    t = cfg.get("time", {})
    tg = TimeGrid(t.get("t_end", 1.0), t.get("m", 200))
    coeffs = RoughCoefficients.constant(prob.a, prob.ratios, a0=prm.get("a0", 1.0),
                                        c0=prob.c0, nu=min(prob.a, 1 / prob.a))
    rep = estimate_ratio_parabolic(coeffs, p, th, prob.lam, prob.F, prob.f, grid, tg,
                                   t.get("scheme", "crank-nicolson"))
    return [_report_row(rep)], {}


def run_bs_price(cfg, rng, workers):
    prm = cfg.get("params", {})
    pay = Payoff(prm.get("payoff", "call"), prm.get("strike", 100.0))
    par = BSParams(prm.get("sigma", 0.2), prm.get("r", 0.05), prm.get("horizon", 1.0), pay)
    rows = []
    for x in prm.get("spot", [100.0]):
        quad = bs_solve(par, x)
        fd, rep = bs_price_fd(par, x, prm.get("n_space", 2049), prm.get("n_time", 2048))
        norm = bs_solve(BSParams(par.sigma, 0.0, par.horizon, Payoff("power", k=0.0)), x)
        mean = bs_solve(BSParams(par.sigma, par.r, par.horizon, Payoff("power", k=1.0)), x)
        row = {"spot": x, "price_quadrature": quad, "price_fd": fd,
               "relative_gap": abs(fd - quad) / abs(quad) if quad else math.nan,
               "density_mass": norm, "forward_mean": mean * math.exp(par.r * par.horizon),
               "backend": rep.backend}
        if pay.kind == "call":
            row["price_closed_form"] = bs_call_closed_form(x, pay.K, par.sigma, par.r,
                                                           par.horizon)
        rows.append(row)
    return rows, {}


def run_theta_sweep(cfg, rng, workers):
    prm = cfg.get("params", {})
    prob = _problem(prm)
    p = prm.get("p", 2.0)
    grid = _grid(cfg, LogGrid(-40.0, 40.0, 8001)) if prm.get("solver") == "fd" else None
    kw = {"eps": prm["eps"]} if "eps" in prm else {}
    res = theta_sweep(prob, p, prm.get("thetas"), prob.lam, solver=prm.get("solver", "exact"),
                      grid=grid, workers=workers, **kw)
    flags = set(res.blowup_flags)
    rows = []
    for rep in res.rows:
        row = _report_row(rep)
        row["blowup_flag"] = rep.theta in flags
        rows.append(row)
    growth = {f"{e:g}{'+' if side > 0 else '-'}": v for (e, side), v in res.growth.items()}
    return rows, {"blowup_flags": list(res.blowup_flags), "growth": growth}


def run_lambda_sweep(cfg, rng, workers):
    prm = cfg.get("params", {})
    prob = _problem(prm)
    grid = _grid(cfg, LogGrid(-12.0, 12.0, 4801))
    kw = {"lams": prm["lams"]} if "lams" in prm else {}
    res = lambda_sweep(prob, prm.get("p", 2.0), prm.get("theta", 0.0), grid=grid,
                       workers=workers, **kw)
    return [_report_row(r) for r in res.rows], {"lambda_star": res.lambda_star,
                                                 "refinement_change": res.refinement_change}


def run_ink_spots(cfg, rng, workers):
    prm = cfg.get("params", {})
    gamma = prm.get("gamma", 0.5)
    w = _weight(prm.get("weight"))
    p = prm.get("p", 2.0)
    T = prm.get("T", math.inf)
    count = prm.get("random", 0)
    cases = []
    if count:
        for _ in range(count):
            E = _random_intervals(rng)
            cases.append((E, E))
    else:
        E = IntervalSet(prm.get("E", []))
        cases.append((E, IntervalSet(prm.get("F", prm.get("E", [])))))
    rows = []
    for k, (E, F) in enumerate(cases):
        holds, witness = hypothesis_check(E, F, gamma, T)
        cover = select_cover(E, gamma)
        row = {"index": k, "gamma": gamma, "measure_E": E.total_length,
               "hypothesis_holds": holds,
               "witness_t": witness[0] if witness else None,
               "witness_R": witness[1] if witness else None,
               "cylinders": len(cover), "vitali_residual": cover.residual}
        if holds:
            rep = ink_spots_bound(E, F, gamma, w, p, T)
            row.update(wE=rep.wE, wF=rep.wF, bound_rhs=rep.bound_rhs,
                       conclusion_holds=rep.conclusion_holds, ap_constant=rep.ap_constant,
                       delta=rep.delta)
        rows.append(row)
    return rows, {}


def run_ap_weight(cfg, rng, workers):
    prm = cfg.get("params", {})
    w = _weight(prm.get("weight"))
    p = prm.get("p", 2.0)
    rows = [{"resolution": n, "estimate": ap_constant_estimate(w, p, n)}
            for n in prm.get("resolutions", [2 ** 8, 2 ** 10, 2 ** 12])]
    dbl = doubling_check(w, p)
    return rows, {"diverges": ap_diverges(w, p), "in_ap_closed_form": w.in_ap(p),
                  "doubling": dbl.status}


def run_convergence(cfg, rng, workers):
    prm = cfg.get("params", {})
    prob = _problem(prm)
    p, th = prm.get("p", 2.0), prm.get("theta", 0.0)
    grid = _grid(cfg, LogGrid(-40.0, 40.0, 2001))
    exact = euler_solve_exact(prob, p, th)
    cp = ConvergenceProblem(coefficients_of(prob), lambda s: exact.evaluate(s)[0],
                            grid.s_min, grid.s_max, grid.n, prob.F, prob.f, prob.lam, p, th)
    rows = [{"h": r.h, "error": r.error, "order": r.order}
            for r in convergence_study(cp, prm.get("levels", 4))]
    return rows, {"final_order": rows[-1]["order"]}


RUNNERS = {
    "norms": run_norms, "hardy": run_hardy, "euler-exact": run_euler_exact,
    "solve-elliptic": run_solve_elliptic, "solve-parabolic": run_solve_parabolic,
    "bs-price": run_bs_price, "theta-sweep": run_theta_sweep,
    "lambda-sweep": run_lambda_sweep, "ink-spots": run_ink_spots,
    "ap-weight": run_ap_weight, "convergence": run_convergence,
}


def run(cfg: dict, workers: int = 1) -> tuple[list[dict], dict]:
    """Dispatch a validated config; rows carry the kind, index and config hash."""
    kind = cfg["kind"]
    h = config_hash(cfg)
    rng = np.random.default_rng(int(cfg.get("seed", 0)))
    body, extra = RUNNERS[kind](cfg, rng, workers)
    rows = [{"experiment": kind, "row": i, "config_hash": h, **r} for i, r in enumerate(body)]
    summary = {"experiment": kind, "config_hash": h, "seed": int(cfg.get("seed", 0)),
               "rows": len(rows), **extra}
    return rows, summary


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _fmt(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return "{:.17g}".format(float(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def rows_to_csv(rows: list[dict]) -> str:
    header: list[str] = []
    for r in rows:
        header += [k for k in r if k not in header]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(r.get(k)) for k in header])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        f = float(v)
        return f if math.isfinite(f) else repr(f)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.bool_):
        return bool(v)
    return v


def write_outputs(rows, summary, out_dir: str, fmt: str = "csv") -> None:
    os.makedirs(out_dir, exist_ok=True)
    if fmt == "csv":
        with open(os.path.join(out_dir, "results.csv"), "w", newline="") as fh:
            fh.write(rows_to_csv(rows))
    else:
        with open(os.path.join(out_dir, "results.json"), "w") as fh:
            json.dump(_jsonable(rows), fh, indent=1, sort_keys=True)
    summary = dict(summary, timestamp=datetime.now(timezone.utc).isoformat())
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(_jsonable(summary), fh, indent=1, sort_keys=True)


def _fail(exc: DegenlabError, code: int) -> int:
    obj = {"error": exc.code, "message": str(exc)}
    diags = getattr(exc, "diagnostics", None)
    if diags:
        obj["diagnostics"] = diags
    witness = getattr(exc, "witness", None)
    if witness is not None:
        obj["witness"] = list(witness)
    print(json.dumps(_jsonable(obj)), file=sys.stderr)
    return code


def _workers(arg: Optional[int], cfg: dict) -> int:
    if arg:
        return arg
    env = os.environ.get("DEGENLAB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"DEGENLAB_THREADS must be an integer, got {env!r}") from exc
    return int(cfg.get("threads", 1))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="degenlab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="TOML experiment file")
        p.add_argument("--out", help="output directory (default: output.dir or ./results)")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--threads", type=int, help="worker threads for sweeps")
        p.add_argument("--format", choices=("csv", "json"), help="results file format")

    common(sub.add_parser("run", help="run the experiment named by the config"))
    for kind in KINDS:
        common(sub.add_parser(kind, help=f"run a {kind} experiment"))
    v = sub.add_parser("validate", help="parse and schema-check a config")
    v.add_argument("path")
    return ap


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "validate":
        try:
            with open(args.path, "rb") as fh:
                text = fh.read().decode("utf-8")
        except OSError as exc:
            return _fail(ConfigError(str(exc)), EXIT_CONFIG)
        _, diags = parse_config(text)
        print(json.dumps({"diagnostics": diags}, indent=1))
        return EXIT_CONFIG if any(d["level"] == "error" for d in diags) else EXIT_OK
    try:
        cfg = load_config(args.config, {"seed": args.seed})
        if args.command != "run" and cfg["kind"] != args.command:
            raise ConfigError(f"config kind {cfg['kind']!r} does not match subcommand "
                              f"{args.command!r}")
        workers = _workers(args.threads, cfg)
    except ConfigError as exc:
        return _fail(exc, EXIT_CONFIG)
    out_cfg = cfg.get("output", {})
    out_dir = args.out or out_cfg.get("dir", "results")
    fmt = args.format or out_cfg.get("format", "csv")
    try:
        rows, summary = run(cfg, workers)
    except DegenlabError as exc:
        return _fail(exc, EXIT_MODULE)
    write_outputs(rows, summary, out_dir, fmt)
    print(json.dumps({"rows": len(rows), "out": out_dir, "config_hash": summary["config_hash"]}))
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
