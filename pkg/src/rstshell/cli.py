"""Command-line front end: ``rstshell {run, convergence, compare, bench}``.

Configs are INI files with sections ``study``, ``geometry``, ``material``,
``load`` and ``discretization``. Physical inputs (``R_phys``, ``L_phys``,
``h``, ``p_phys``, ``mu``) are rescaled once on load.
"""
from __future__ import annotations

import argparse
import configparser
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from .errors import ConfigError, SolverError, ValidationError

log = logging.getLogger("rstshell")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_ACCEPTANCE = 0, 2, 3, 4
UNITS = "rescaled"
DISCRETIZATION_DEFAULTS = {
    "element": "nurbs-cubic",
    "n1": 1,
    "n2": 32,
    "levels": 4,
    "bvp_points": 2048,
    "ring_element": "q9",
    "ring_n_theta": 128,
    "ring_n_r": 4,
    "samples": 201,
}


def _get(parser, section, key, kind=float, default=None):
    if parser.has_option(section, key):
        raw = parser.get(section, key)
        try:
            return kind(raw)
        except ValueError as exc:
            raise ConfigError(f"{section}.{key}: cannot parse {raw!r}") from exc
    return default


def load_config(path):
    """Parse and rescale a config file into a plain dict."""
    parser = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for sec in ("geometry", "material", "load"):
        if not parser.has_section(sec):
            raise ConfigError(f"section [{sec}] missing")
    h = _get(parser, "geometry", "h")
    if h is not None and not h > 0:
        raise ConfigError("geometry.h must be positive")

    def length(key):
        val = _get(parser, "geometry", key)
        phys = _get(parser, "geometry", f"{key}_phys")
        if val is not None:
            return val
        if phys is not None:
            if h is None:
                raise ConfigError(f"geometry.{key}_phys needs geometry.h")
            return phys / h
        return None

    R = length("R")
    if R is None:
        raise ConfigError("geometry.R missing")
    L = length("L") or 10.0
    case = _get(parser, "geometry", "case", int, 2)
    if case not in (1, 2, 3):
        raise ConfigError(f"geometry.case must be 1, 2 or 3, got {case}")
    nu = _get(parser, "material", "nu")
    if nu is None:
        raise ConfigError("material.nu missing")
    p = _get(parser, "load", "p")
    if p is None:
        p_phys, mu = _get(parser, "load", "p_phys"), _get(parser, "load", "mu")
        if p_phys is None or mu is None or h is None:
            raise ConfigError("load.p missing (or give load.p_phys, load.mu and geometry.h)")
        p = h * p_phys / mu
    disc = dict(DISCRETIZATION_DEFAULTS)
    for key, default in DISCRETIZATION_DEFAULTS.items():
        disc[key] = _get(parser, "discretization", key, type(default), default)
    theories = [t.strip() for t in parser.get("study", "theories", fallback="").split(",") if t.strip()]
    theory = parser.get("study", "theory", fallback=theories[0] if theories else "rst2d").strip()
    return {
        "study": {"theory": theory, "theories": theories},
        "geometry": {"R": R, "L": L, "case": case, "side": parser.get("geometry", "side", fallback="sliding")},
        "material": {"nu": nu},
        "load": {"p": p},
        "discretization": disc,
    }


def _write_csv(path, columns):
    names = list(columns)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([f"{n} [{UNITS}]" for n in names])
        for row in zip(*(np.asarray(columns[n]) for n in names)):
            w.writerow([repr(float(v)) for v in row])


def _section_grid(cfg):
    R = cfg["geometry"]["R"]
    return np.linspace(0.0, np.pi * R, cfg["discretization"]["samples"])


def _summary(name, tab, ref=None):
    lines = [f"theory {name}:"]
    u = tab["u"]
    lines.append(f"  u_max = {np.nanmax(np.abs(u)):.10g}")
    for key in ("N", "minus_M", "Q"):
        if np.all(np.isfinite(tab[key])):
            lines.append(f"  {key}: min {np.min(tab[key]):.6g}  max {np.max(tab[key]):.6g}")
    if ref is not None:
        err = np.max(np.abs(u - ref["u"])) / np.max(np.abs(ref["u"]))
        lines.append(f"  max relative difference of u vs rst1d = {err:.3e}")
    return "\n".join(lines)


def cmd_run(cfg, out, threads):
    from .plotting import section_figure
    from .studies import rst1d_section, theory_section

    theory = cfg["study"]["theory"]
    x2 = _section_grid(cfg)
    tab, sol = theory_section(theory, cfg, x2, threads)
    _write_csv(out / f"{theory}_section.csv", {"x2": x2, **tab})
    if theory == "rst1d" and cfg["geometry"]["case"] != 1:
        _write_bvp_csv(cfg, out / "rst1d_bvp.csv")
    if theory == "ring2d":
        theta = x2 / cfg["geometry"]["R"]
        _write_csv(out / "ring2d_section_theta.csv", {"theta": theta, "u_n": tab["u"], "psi": tab["psi2"],
                                                       "N": tab["N"], "M": -tab["minus_M"], "Q": tab["Q"]})
    ref = None
    if theory != "rst1d":
        g = cfg["geometry"]
        ref = rst1d_section(g["R"], cfg["material"]["nu"], cfg["load"]["p"], g["case"], x2)
    section_figure(x2, {theory: tab}, out / f"{theory}_section.png")
    print(_summary(theory, tab, ref))
    return EXIT_OK


def _write_bvp_csv(cfg, path):
    from .bench1d import ArcProblem, arc_resultants, solve_arc
    from .shell2d import CASES

    g = cfg["geometry"]
    pr = ArcProblem(g["R"], cfg["material"]["nu"], cfg["load"]["p"], CASES[g["case"]])
    sol = solve_arc(pr, cfg["discretization"]["bvp_points"])
    N, mM, Q = arc_resultants(sol)
    s, p = pr.sigma, pr.p
    cols = {"x2": sol.x2, **{k: sol[k] for k in sol.fields}, "n": N + s * p / 2, "m": mM + s * p / 10, "q": Q}
    _write_csv(path, cols)


def cmd_convergence(cfg, out, threads):
    from .plotting import convergence_figure
    from .shell2d import CylinderProblem
    from .studies import convergence_ladder

    g, d = cfg["geometry"], cfg["discretization"]
    if d["levels"] < 3:
        raise ConfigError("discretization.levels must be at least 3")
    base = CylinderProblem(g["R"], cfg["material"]["nu"], cfg["load"]["p"], g["case"], g["L"],
                           d["element"], d["n1"], d["n2"], g["side"])
    rep = convergence_ladder(base, d["levels"], threads=threads)
    _write_csv(out / "convergence.csv", {"level": np.arange(len(rep.h_elem)), "h_elem": rep.h_elem,
                                         "n_dof": rep.n_dof, "l2_error": rep.errors, "slope_running": rep.running})
    convergence_figure(rep, out / "convergence.png", d["element"])
    print(f"element {d['element']}: fitted slope {rep.slope:.3f}, final rate {rep.running[-1]:.3f}")
    if not rep.monotone:
        print("warning: error sequence is not monotone")
    return EXIT_OK


def cmd_compare(cfg, out, threads):
    from .plotting import section_figure
    from .studies import SECTION_KEYS, THEORIES, theory_section

    theories = cfg["study"]["theories"]
    if len(theories) < 2:
        raise ConfigError("study.theories must list at least two theories")
    bad = [t for t in theories if t not in THEORIES]
    if bad:
        raise ConfigError(f"study.theories: unknown {bad}")
    x2 = _section_grid(cfg)
    tables = {t: theory_section(t, cfg, x2, threads)[0] for t in theories}
    cols = {"x2": x2}
    for key in SECTION_KEYS:
        for t in theories:
            cols[f"{key}_{t}"] = tables[t][key]
    _write_csv(out / "compare.csv", cols)
    section_figure(x2, tables, out / "compare.png")
    for t in theories:
        print(_summary(t, tables[t]))
    return EXIT_OK


def cmd_bench(out, threads, seed, numbers=None):
    from .acceptance import run_all

    results = run_all(numbers, threads=threads, seed=seed)
    with open(out / "acceptance.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["criterion", "passed", "elapsed_s", "metrics"])
        for r in results:
            w.writerow([r.number, r.passed, f"{r.elapsed:.2f}", "; ".join(f"{k}={v}" for k, v in r.metrics.items())])
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed" + (f"; failed: {failed}" if failed else ""))
    return EXIT_ACCEPTANCE if failed else EXIT_OK


def build_parser():
    ap = argparse.ArgumentParser(prog="rstshell", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("run", "convergence", "compare", "bench"):
        sp = sub.add_parser(name)
        if name != "bench":
            sp.add_argument("--config", required=True, help="INI config file")
        else:
            sp.add_argument("--criteria", type=int, nargs="*", help="subset of criteria (default all)")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--seed", type=int, default=0, help="seed of the randomized oracle checks")
    return ap


def main(argv=None):
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be positive")
        out.mkdir(parents=True, exist_ok=True)
        if args.command == "bench":
            return cmd_bench(out, args.threads, args.seed, args.criteria)
        cfg = load_config(args.config)
        cmd = {"run": cmd_run, "convergence": cmd_convergence, "compare": cmd_compare}[args.command]
        return cmd(cfg, out, args.threads)
    except (ConfigError, ValidationError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
