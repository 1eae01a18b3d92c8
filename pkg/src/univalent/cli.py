"""Configuration-driven experiment runner.

Configs are flat ``key = value`` text with at most one dot per key; blank
lines and ``#`` comments are ignored.  Every experiment writes
``<experiment>.json`` into ``--out`` and, when it samples a grid,
``<experiment>_grid.csv`` with columns ``x,y,value``.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import re
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError, UnivalentError
from .foundation import (
    Annulus,
    ClosedDisk,
    Contour,
    PuncturedPlane,
    UnitDisk,
    WholePlane,
    interior_grid,
)
from .metrics import GEOMETRIES, GridSpec, curvature, harmonic_glue, liouville_construct
from .rational import Polynomial, RationalFunction, schwarzian
from .runge import LaurentBasis, fit_analytic_ls, lu_holomorphic_runge, zero_free_runge
from .schwarzian_ode import (
    SchwarzianODE,
    meromorphic_lu_runge,
    numerical_schwarzian,
    obstruction_residue,
    solve_ivp_along,
    wronskian_drift,
)
from .universality import (
    DiskAutomorphisms,
    Translations,
    build_finite_universal,
    diagnose_sequence,
    metric_orbit_experiment,
)

CATALOG = {
    "schwarzian": "Schwarzian of a rational map, checked against finite differences",
    "runge": "locally univalent Runge approximation with certified sup error",
    "ode-reconstruct": "solve w'' + (p/2) w = 0 along a path, or rebuild f from its Schwarzian",
    "curvature": "Gauss curvature of a canonical density on a grid",
    "glue": "harmonic gluing of two densities along a translation",
    "orbit": "finite-stage universal function (or metric) along a self-map sequence",
    "diagnose-seq": "run-away indices and injectivity verdicts of a self-map sequence",
    "counterexample": "residue obstruction for -3/(2 z^2) and polynomial fits that respect it",
}

DEFAULTS = {
    "schwarzian": {
        "f": "ratio(1,0,1|0,1)",
        "probe.radius": "0.5",
        "probe.center": "2",
        "probe.count": "16",
    },
    "runge": {
        "f": "poly(0,0.1,0.5)",
        "region.kind": "annulus",
        "region.center": "0",
        "region.inner": "0.5",
        "region.outer": "2",
        "region.radius": "1",
        "domain.kind": "punctured",
        "domain.punctures": "0",
        "runge.mode": "lu",
        "runge.epsilon": "1e-6",
        "runge.degree_cap": "256",
        "grid.spacing": "0.1",
    },
    "ode-reconstruct": {
        "ode.mode": "solve",
        "ode.p": "poly(2)",
        "ode.path": "0;0.7853981633974483",
        "ode.tol": "1e-10",
        "f": "ratio(1,0,1|0,1)",
        "region.center": "0",
        "region.radius": "0.5",
        "runge.epsilon": "1e-6",
        "runge.degree_cap": "256",
    },
    "curvature": {
        "geometry": "hyperbolic",
        "grid.center": "0",
        "grid.radius": "0.8",
        "grid.spacing": "0.005",
        "curvature.richardson": "false",
        "curvature.tolerance": "1e-3",
    },
    "glue": {
        "glue.lambda": "exp-re",
        "glue.mu": "one",
        "glue.stride": "8",
        "region.center": "0",
        "region.radius": "1",
        "glue.epsilon": "1e-3",
        "glue.degree_cap": "40",
        "grid.spacing": "0.05",
    },
    "orbit": {
        "targets": "identity;exp-taylor(12);ratio(1|1,-0.1)",
        "region.center": "0",
        "region.radius": "1",
        "seq.kind": "translations",
        "seq.stride": "8",
        "seq.a": "",
        "seq.theta": "",
        "orbit.epsilon": "1e-3",
        "orbit.metric": "none",
        "orbit.max_index": "0",
    },
    "diagnose-seq": {
        "seq.kind": "translations",
        "seq.stride": "1",
        "seq.a": "",
        "seq.theta": "",
        "regions": "0,1;2,0.5",
        "seq.count": "10",
    },
    "counterexample": {
        "region.inner": "0.5",
        "region.outer": "2",
        "contour.radius": "1",
        "fit.min_degree": "8",
        "fit.max_degree": "50",
        "fit.samples": "1024",
    },
}


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------

def parse_config(text: str) -> dict:
    out = {}
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {no}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if not re.fullmatch(r"[a-z][a-z0-9_\-]*(\.[a-z][a-z0-9_\-]*)?", key):
            raise ConfigError(f"line {no}: bad key {key!r}")
        if key in out:
            raise ConfigError(f"line {no}: duplicate key {key!r}")
        out[key] = value
    return out


def resolve(kind: str, given: dict) -> dict:
    cfg = dict(DEFAULTS[kind])
    for key, value in given.items():
        if key == "experiment":
            if value != kind:
                raise ConfigError(f"config is for {value!r}, not {kind!r}")
            continue
        if key not in cfg:
            raise ConfigError(f"unknown key {key!r} for {kind}")
        cfg[key] = value
    return cfg


def _num(cfg, key, lo=None, hi=None) -> float:
    try:
        v = float(cfg[key])
    except ValueError:
        raise ConfigError(f"{key}: not a number: {cfg[key]!r}") from None
    if not math.isfinite(v) or (lo is not None and v < lo) or (hi is not None and v > hi):
        raise ConfigError(f"{key}: {v} outside [{lo}, {hi}]")
    return v


def _int(cfg, key, lo=None, hi=None) -> int:
    v = _num(cfg, key, lo, hi)
    if v != int(v):
        raise ConfigError(f"{key}: expected an integer")
    return int(v)


def _cplx(text: str, key="value") -> complex:
    try:
        return complex(text.strip().replace(" ", ""))
    except ValueError:
        raise ConfigError(f"{key}: not a complex number: {text!r}") from None


def _clist(text: str, key, sep=";") -> list:
    return [_cplx(t, key) for t in text.split(sep) if t.strip()]


def _bool(cfg, key) -> bool:
    v = cfg[key].lower()
    if v not in ("true", "false"):
        raise ConfigError(f"{key}: expected true or false")
    return v == "true"


def parse_function(spec: str) -> RationalFunction:
    """``identity``, ``reciprocal``, ``exp-taylor(d)``, ``poly(c0,c1,...)`` or
    ``ratio(n0,n1,...|d0,d1,...)`` with ascending complex coefficients."""
    s = spec.strip()
    if s == "identity":
        return RationalFunction.from_polynomial(Polynomial([0, 1]))
    if s == "reciprocal":
        return RationalFunction(Polynomial([1]), Polynomial([0, 1]))
    m = re.fullmatch(r"exp-taylor\((\d+)\)", s)
    if m:
        d = int(m.group(1))
        return RationalFunction.from_polynomial(Polynomial([1 / math.factorial(k) for k in range(d + 1)]))
    m = re.fullmatch(r"poly\((.*)\)", s)
    if m:
        return RationalFunction.from_polynomial(Polynomial(_clist(m.group(1), spec, ",")))
    m = re.fullmatch(r"ratio\((.*)\|(.*)\)", s)
    if m:
        num, den = Polynomial(_clist(m.group(1), spec, ",")), Polynomial(_clist(m.group(2), spec, ","))
        if den.degree < 0:
            raise ConfigError(f"zero denominator in {spec!r}")
        return RationalFunction(num, den)
    raise ConfigError(f"unknown function spec {spec!r}")


def parse_density(spec: str):
    s = spec.strip()
    if s == "one":
        return lambda z: np.ones(np.shape(z))
    if s == "exp-re":
        return lambda z: np.exp(np.real(z))
    if s in GEOMETRIES:
        return GEOMETRIES[s].density
    raise ConfigError(f"unknown density {spec!r}")


def _region(cfg):
    kind = cfg["region.kind"]
    c = _cplx(cfg["region.center"], "region.center")
    if kind == "disk":
        return ClosedDisk(c, _num(cfg, "region.radius", 1e-12))
    if kind == "annulus":
        return Annulus(c, _num(cfg, "region.inner", 1e-12), _num(cfg, "region.outer", 1e-12))
    raise ConfigError(f"region.kind: unknown {kind!r}")


def _domain(cfg):
    kind = cfg["domain.kind"]
    if kind == "plane":
        return WholePlane()
    if kind == "punctured":
        return PuncturedPlane(tuple(_clist(cfg["domain.punctures"], "domain.punctures")))
    if kind == "disk":
        return UnitDisk()
    raise ConfigError(f"domain.kind: unknown {kind!r}")


def _sequence(cfg):
    kind = cfg["seq.kind"]
    if kind == "translations":
        return Translations(_cplx(cfg["seq.stride"], "seq.stride"))
    if kind in ("automorphisms", "rotations"):
        theta = [float(t) for t in cfg["seq.theta"].split(";") if t.strip()]
        a = _clist(cfg["seq.a"], "seq.a") if kind == "automorphisms" else [0j] * len(theta)
        if not theta:
            theta = [0.0] * len(a)
        if not a:
            raise ConfigError("seq.a / seq.theta must list the sequence parameters")
        return DiskAutomorphisms(tuple(a), tuple(theta))
    raise ConfigError(f"seq.kind: unknown {kind!r}")


# ---------------------------------------------------------------------------
# Experiments: each returns (summary fields, details, grid or None)
# ---------------------------------------------------------------------------

def _run_schwarzian(cfg):
    f = parse_function(cfg["f"])
    S = schwarzian(f)
    n = _int(cfg, "probe.count", 1, 4096)
    c, r = _cplx(cfg["probe.center"], "probe.center"), _num(cfg, "probe.radius", 1e-6)
    z = c + r * np.exp(2j * np.pi * (np.arange(n) + 0.5) / n)
    err = float(np.max(np.abs(S(z) - numerical_schwarzian(f, z))) / max(1.0, np.max(np.abs(S(z)))))
    return ({"sup_error": err},
            {"numerator": S.num.to_text(), "denominator": S.den.to_text()}, None)


def _run_runge(cfg):
    f = parse_function(cfg["f"])
    K, omega = _region(cfg), _domain(cfg)
    eps = _num(cfg, "runge.epsilon", 1e-14, 1)
    cap = _int(cfg, "runge.degree_cap", 1, 1024)
    mode = cfg["runge.mode"]
    if mode == "lu":
        G = lu_holomorphic_runge(f, K, omega, eps, cap)
        rep = G.report
        evaluate = G
    elif mode == "zero-free":
        G, rep = zero_free_runge(f, K, omega, eps, cap)
        evaluate = G
    else:
        raise ConfigError(f"runge.mode: unknown {mode!r}")
    pts = interior_grid(K, _num(cfg, "grid.spacing", 1e-4)).points
    grid = np.column_stack([pts.real, pts.imag, np.abs(evaluate(pts) - f(pts))])
    return ({"sup_error": rep.certified_sup_error, "residual_norm": rep.final_residual_norm,
             "iterations": rep.newton_iterations, "degree_used": rep.degree_used},
            {"samples_used": rep.samples_used}, grid)


def _run_ode(cfg):
    mode = cfg["ode.mode"]
    tol = _num(cfg, "ode.tol", 1e-13, 1e-6)
    if mode == "solve":
        p = parse_function(cfg["ode.p"])
        path = _clist(cfg["ode.path"], "ode.path")
        if len(path) < 2:
            raise ConfigError("ode.path needs two or more points")
        ode = SchwarzianODE(p)
        s1 = solve_ivp_along(ode, path, (0, 1), tol)
        s2 = solve_ivp_along(ode, path, (1, 0), tol)
        u1, u2 = s1.path_values[-1, 0], s2.path_values[-1, 0]
        quotient = complex(u1 / u2)
        drift = wronskian_drift(s1, s2)
        return ({"residual_norm": drift, "iterations": int(s1.nodes.size)},
                {"quotient_re": quotient.real, "quotient_im": quotient.imag, "wronskian_drift": drift}, None)
    if mode == "meromorphic":
        f = parse_function(cfg["f"])
        K = ClosedDisk(_cplx(cfg["region.center"], "region.center"), _num(cfg, "region.radius", 1e-12))
        approx = meromorphic_lu_runge(f, K, _num(cfg, "runge.epsilon", 1e-14, 1),
                                      _int(cfg, "runge.degree_cap", 1, 1024), tol)
        rep = approx.report
        return ({"sup_error": rep.certified_sup_error, "degree_used": rep.degree_used},
                {"frame_point_re": approx.frame.z0.real, "frame_point_im": approx.frame.z0.imag}, None)
    raise ConfigError(f"ode.mode: unknown {mode!r}")


def _run_curvature(cfg):
    name = cfg["geometry"]
    if name not in GEOMETRIES:
        raise ConfigError(f"geometry: unknown {name!r}")
    geom = GEOMETRIES[name]
    spec = GridSpec(_cplx(cfg["grid.center"], "grid.center"), _num(cfg, "grid.radius", 1e-6),
                    _num(cfg, "grid.spacing", 1e-5, 1))
    lam = liouville_construct(RationalFunction.from_polynomial(Polynomial([0, 1])), geom, spec)
    rep = curvature(lam, geom.curvature, _bool(cfg, "curvature.richardson"))
    tol = _num(cfg, "curvature.tolerance", 0)
    z, _, _ = spec.layout()
    ok = np.isfinite(rep.curvature_grid)
    grid = np.column_stack([z[ok].real, z[ok].imag, rep.curvature_grid[ok]])
    return ({"curvature_max_dev": rep.max_abs_deviation_from_c},
            {"cells_evaluated": rep.cells_evaluated, "expected": geom.curvature,
             "within_tolerance": bool(rep.max_abs_deviation_from_c <= tol)}, grid)


def _run_glue(cfg):
    lam, mu = parse_density(cfg["glue.lambda"]), parse_density(cfg["glue.mu"])
    K = ClosedDisk(_cplx(cfg["region.center"], "region.center"), _num(cfg, "region.radius", 1e-12))
    T = _cplx(cfg["glue.stride"], "glue.stride")
    hg = harmonic_glue(lam, mu, T, K, _num(cfg, "glue.epsilon", 1e-14, 1), _int(cfg, "glue.degree_cap", 1, 512))
    pts = interior_grid(K, _num(cfg, "grid.spacing", 1e-4)).points
    grid = np.column_stack([pts.real, pts.imag, hg.density(pts)])
    return ({"sup_error": max(hg.e1, hg.e2), "degree_used": hg.degree},
            {"error_lambda": hg.e1, "error_mu": hg.e2}, grid)


def _run_orbit(cfg):
    targets = [parse_function(s) for s in cfg["targets"].split(";") if s.strip()]
    if not targets:
        raise ConfigError("targets: empty list")
    K = ClosedDisk(_cplx(cfg["region.center"], "region.center"), _num(cfg, "region.radius", 1e-12))
    seq = _sequence(cfg)
    eps = _num(cfg, "orbit.epsilon", 1e-14, 1)
    max_index = _int(cfg, "orbit.max_index", 0) or None
    metric = cfg["orbit.metric"]
    if metric == "none":
        rep = build_finite_universal(targets, K, seq, eps, max_index)
    elif metric in GEOMETRIES:
        rep = metric_orbit_experiment(targets, GEOMETRIES[metric], K, seq, eps, max_index)
    else:
        raise ConfigError(f"orbit.metric: unknown {metric!r}")
    return ({"sup_error": max(rep.errors), "degree_used": rep.F.report.degree_used,
             "iterations": rep.F.report.newton_iterations,
             "residual_norm": rep.F.report.final_residual_norm},
            {"errors": list(rep.errors), "stages": list(rep.stages),
             "certificate_counts": list(rep.certificate_counts), "certified": rep.verdict}, None)


def _run_diagnose(cfg):
    seq = _sequence(cfg)
    regions = []
    for item in cfg["regions"].split(";"):
        if item.strip():
            parts = item.split(",")
            if len(parts) != 2:
                raise ConfigError("regions: expected center,radius pairs separated by ';'")
            try:
                radius = float(parts[1])
            except ValueError:
                raise ConfigError(f"regions: bad radius {parts[1]!r}") from None
            regions.append(ClosedDisk(_cplx(parts[0], "regions"), radius))
    N = _int(cfg, "seq.count", 1, 10000)
    d = diagnose_sequence(seq, regions, N)
    verdicts = {f"{n},{i}": v for (n, i), v in sorted(d.injectivity_verdicts.items())}
    return ({}, {"runaway_indices": list(d.runaway_indices), "injectivity": verdicts,
                 "eventually_injective": list(d.eventually_injective)}, None)


def _run_counterexample(cfg):
    r_in, r_out = _num(cfg, "region.inner", 1e-6), _num(cfg, "region.outer", 1e-6)
    rho = _num(cfg, "contour.radius", 1e-6)
    if not r_in < rho < r_out:
        raise ConfigError("contour.radius must lie strictly between the annulus radii")
    # f = z^2 is locally univalent on the annulus; S_f = -3/(2 z^2)
    S = schwarzian(RationalFunction.from_polynomial(Polynomial([0, 0, 1])))
    res = obstruction_residue(S, Contour(0j, rho))
    bound = abs(res) / (2 * math.pi * rho ** 2)
    lo, hi = _int(cfg, "fit.min_degree", 0, 200), _int(cfg, "fit.max_degree", 0, 200)
    n = _int(cfg, "fit.samples", 16, 1 << 16)
    circle = Contour(0j, rho)
    errs = []
    for d in range(lo, hi + 1):
        pts = circle.nodes(max(n, 4 * (d + 1)))
        vpts = circle.nodes(4 * max(n, 4 * (d + 1)), 0.5)
        fit = fit_analytic_ls(pts, S(pts), LaurentBasis(d, 0j, rho), (vpts, S(vpts)))
        errs.append(fit.certified_sup_error)
    return ({"sup_error": min(errs)},
            {"residue_re": res.real, "residue_im": res.imag, "lower_bound": bound,
             "fit_degrees": [lo, hi], "fits_respect_bound": bool(min(errs) >= bound - 1e-6)}, None)


RUNNERS = {
    "schwarzian": _run_schwarzian,
    "runge": _run_runge,
    "ode-reconstruct": _run_ode,
    "curvature": _run_curvature,
    "glue": _run_glue,
    "orbit": _run_orbit,
    "diagnose-seq": _run_diagnose,
    "counterexample": _run_counterexample,
}

SUMMARY_FIELDS = ("sup_error", "residual_norm", "iterations", "degree_used", "curvature_max_dev")


# ---------------------------------------------------------------------------
# Records
# ---------------------------------------------------------------------------

def _numbers(obj):
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return
    if isinstance(obj, (int, float, np.integer, np.floating)):
        yield float(obj)
    elif isinstance(obj, (complex, np.complexfloating)):
        yield float(obj.real)
        yield float(obj.imag)
    elif isinstance(obj, dict):
        for k in sorted(obj):
            yield from _numbers(obj[k])
    elif isinstance(obj, (list, tuple, np.ndarray)):
        for x in obj:
            yield from _numbers(x)


def fingerprint(*objs) -> str:
    """sha256 of every number, rounded to 1e-12, in a fixed order."""
    h = hashlib.sha256()
    for obj in objs:
        for x in _numbers(obj):
            r = round(x, 12) if math.isfinite(x) else x
            h.update(repr(0.0 if r == 0 else r).encode())
            h.update(b";")
    return h.hexdigest()


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else str(float(obj))
    return obj


def run(kind: str, cfg_text: str, out_dir: Path, seed: int = 0) -> dict:
    cfg = resolve(kind, parse_config(cfg_text))
    t0 = time.perf_counter()
    summary, details, grid = RUNNERS[kind](cfg)
    wall = time.perf_counter() - t0
    record = {"experiment": kind, "status": "ok"}
    for key in SUMMARY_FIELDS:
        record[key] = summary.get(key)
    record["fingerprint"] = fingerprint(summary, details, grid)
    record.update({"details": details, "wall_time": wall, "version": __version__, "seed": seed,
                   "config": dict(cfg, experiment=kind)})
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / f"{kind}.json").write_text(json.dumps(_plain(record), indent=2) + "\n")
    if grid is not None:
        np.savetxt(out_dir / f"{kind}_grid.csv", grid, delimiter=",", header="x,y,value", comments="",
                   fmt="%.17g")
    return record


def config_text(cfg: dict) -> str:
    """Serialize a config echo back into the text format."""
    return "".join(f"{k} = {v}\n" for k, v in cfg.items())


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="univalent", description="Run univalent-map experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="print the experiment catalog")
    for kind, desc in CATALOG.items():
        p = sub.add_parser(kind, help=desc)
        p.add_argument("--config", type=Path, help="flat key = value config file")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--seed", type=int, default=0, help="reserved; recorded in the report")
        p.add_argument("--verbose", action="store_true")
    args = parser.parse_args(argv)
    if args.command == "list":
        for kind, desc in CATALOG.items():
            print(f"{kind:16s} {desc}")
        return 0
    try:
        try:
            text = args.config.read_text() if args.config else ""
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc.strerror}") from None
        rec = run(args.command, text, args.out, args.seed)
    except UnivalentError as exc:
        print(f"error[{exc.exit_code}] {type(exc).__name__}: {exc}".replace("\n", " "), file=sys.stderr)
        return exc.exit_code
    if args.verbose:
        print(json.dumps(_plain({k: rec[k] for k in ("experiment", "status", *SUMMARY_FIELDS)}), indent=2))
    else:
        print(f"{rec['experiment']}: {rec['status']} ({rec['fingerprint'][:12]})")
    return 0
