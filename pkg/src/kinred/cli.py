"""Command-line driver.

    kinred <subcommand> [--config PATH] [--seed N] [--threads N] [--out DIR]
                        [--tolerance-scale X]

Exit codes: 0 all checks pass, 1 a check failed, 2 usage or config error.
"""

from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import os
import sys
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from pathlib import Path

import jsonschema
import numpy as np

from . import bounds, brackets, closure, dynamics
from .grid import GridError, make_phase_grid
from .hamiltonians import CouplingConstants, decompose
from .moments import bimodal_counterexample, kinetic_velocity_temperature, poisson_map_JA
from .samples import random_distribution

log = logging.getLogger("kinred")

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
SUBCOMMANDS = ("verify-brackets", "simulate", "closure-check", "bound-check", "demo-bimodal", "decompose")

_GRID = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "n": {"enum": [1, 2]},
        "Lq": {"type": "number", "exclusiveMinimum": 0},
        "Nq": {"type": "integer", "minimum": 8},
        "Pmax": {"type": "number", "exclusiveMinimum": 0},
        "Np": {"type": "integer", "minimum": 8},
    },
}

_VARIANT = {
    "type": "object",
    "additionalProperties": False,
    "required": ["variant"],
    "properties": {
        "variant": {"enum": list(brackets.VARIANTS)},
        "A": {"type": "integer", "minimum": 0, "maximum": 8},
        "xi": {"type": "number", "minimum": -0.5, "maximum": 1.0},
    },
}

_SCENARIOS = {
    "verify-brackets": {
        "trials": {"type": "integer", "minimum": 1},
        "variants": {"type": "array", "items": _VARIANT, "minItems": 1},
        "kmax": {"type": "integer", "minimum": 1},
        "bumps": {"type": "integer", "minimum": 0},
        "bump_amp": {"type": "number", "minimum": 0, "maximum": 0.5},
        "corrupt": {"type": "boolean"},
        "threshold": {"type": "number", "exclusiveMinimum": 0},
    },
    "simulate": {
        "method": {"enum": list(dynamics.METHODS)},
        "initial": {"type": "object"},
        "mode": {"enum": ["neutral", "electrostatic", "selfgravitating"]},
        "e2": {"type": "number", "minimum": 0},
        "G": {"type": "number", "minimum": 0},
        "dt": {"type": "number", "exclusiveMinimum": 0},
        "T_end": {"type": "number", "minimum": 0},
        "cadence": {"type": "integer", "minimum": 1},
        "drift_tolerance": {"type": "number", "exclusiveMinimum": 0},
    },
    "closure-check": {
        "n": {"type": "integer", "minimum": 1},
        "A": {"type": "integer", "minimum": 2, "maximum": 8},
        "eta1": {"type": "array", "items": {"type": "string"}},
        "eps": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 2},
        "betas": {"type": "object", "additionalProperties": {"type": "number"}},
        "symbolic": {"type": "boolean"},
    },
    "bound-check": {
        "trials": {"type": "integer", "minimum": 0},
        "trajectory": {"type": "boolean"},
        "mode": {"enum": ["neutral", "electrostatic", "selfgravitating"]},
        "e2": {"type": "number", "minimum": 0},
        "G": {"type": "number", "minimum": 0},
        "T_end": {"type": "number", "minimum": 0},
        "dt": {"type": "number", "exclusiveMinimum": 0},
    },
    "demo-bimodal": {
        "c": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}, "minItems": 2},
        "width": {"type": "number", "exclusiveMinimum": 0},
        "order": {"type": "integer", "minimum": 0, "maximum": 8},
    },
    "decompose": {
        "trials": {"type": "integer", "minimum": 1},
    },
}

DEFAULTS = {
    "verify-brackets": {
        "grid": {"n": 1, "Lq": 2 * np.pi, "Nq": 64, "Pmax": 12.0, "Np": 128},
        "scenario": {
            "trials": 20,
            "variants": [
                {"variant": "J_A", "A": 0},
                {"variant": "J_A", "A": 1},
                {"variant": "J_A", "A": 2},
                {"variant": "J_xi", "xi": -0.3},
                {"variant": "J_xi", "xi": 0.3},
                {"variant": "J_pol", "A": 2},
            ],
            "kmax": 3,
            "bumps": 2,
            "bump_amp": 0.2,
            "corrupt": False,
            "threshold": brackets.PASS_THRESHOLD,
        },
    },
    "simulate": {
        "grid": {"n": 1, "Lq": 4 * np.pi, "Nq": 64, "Pmax": 8.0, "Np": 256},
        "scenario": {
            "method": "vlasov_poisson",
            "initial": {"family": "landau", "eps": 0.01, "k": 0.5},
            "mode": "electrostatic",
            "e2": 1.0,
            "G": 0.0,
            "dt": 1.0 / 64,
            "T_end": 10.0,
            "cadence": 16,
            "drift_tolerance": 1e-6,
        },
    },
    "closure-check": {
        "grid": {"n": 1, "Lq": 2 * np.pi, "Nq": 16, "Pmax": 14.0, "Np": 256},
        "scenario": {
            "n": 1,
            "A": 4,
            "eta1": ["0", "1/3", "-5/2", "7/4", "2"],
            "eps": [1e-2, 5e-3, 2.5e-3],
            "betas": {"2": 0.01, "3": -0.0075, "4": 0.0125},
            "symbolic": True,
        },
    },
    "bound-check": {
        "grid": {"n": 1, "Lq": 2 * np.pi, "Nq": 64, "Pmax": 12.0, "Np": 128},
        "scenario": {"trials": 20, "trajectory": True, "mode": "neutral", "e2": 0.0, "G": 0.0, "T_end": 10.0, "dt": 1.0 / 64},
    },
    "demo-bimodal": {
        "grid": {"n": 1, "Lq": 2 * np.pi, "Nq": 8, "Pmax": 255 / 32, "Np": 256},
        "scenario": {"c": [1.0, 2.0, 4.0], "width": 1.0, "order": 4},
    },
    "decompose": {
        "grid": {"n": 1, "Lq": 2 * np.pi, "Nq": 64, "Pmax": 12.0, "Np": 128},
        "scenario": {"trials": 5},
    },
}


def config_schema(subcommand: str) -> dict:
    return {
        "type": "object",
        "additionalProperties": False,
        "properties": {
            "subcommand": {"enum": list(SUBCOMMANDS)},
            "grid": _GRID,
            "scenario": {"type": "object", "additionalProperties": False, "properties": _SCENARIOS[subcommand]},
            "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
            "output": {"type": "string"},
            "tolerances": {
                "type": "object",
                "additionalProperties": False,
                "properties": {"scale": {"type": "number", "exclusiveMinimum": 0}},
            },
        },
    }


class ConfigError(ValueError):
    pass


def resolve_config(subcommand: str, raw: dict | None, seed=None, out=None, tol_scale=None) -> dict:
    """Validate ``raw`` and merge it over the subcommand defaults; flags override the file."""
    raw = raw or {}
    try:
        jsonschema.validate(raw, config_schema(subcommand))
    except jsonschema.ValidationError as exc:
        raise ConfigError(exc.message) from exc
    if raw.get("subcommand", subcommand) != subcommand:
        raise ConfigError(f"config is for {raw['subcommand']!r}, not {subcommand!r}")
    cfg = copy.deepcopy(DEFAULTS[subcommand])
    cfg["grid"].update(raw.get("grid", {}))
    cfg["scenario"].update(raw.get("scenario", {}))
    cfg["subcommand"] = subcommand
    cfg["seed"] = int(seed if seed is not None else raw.get("seed", 0))
    cfg["output"] = str(out if out is not None else raw.get("output", "kinred_out"))
    cfg["tolerances"] = {"scale": float(tol_scale if tol_scale is not None else raw.get("tolerances", {}).get("scale", 1.0))}
    return cfg


def _grid(cfg):
    g = cfg["grid"]
    return make_phase_grid(g["n"], g["Lq"], g["Nq"], g["Pmax"], g["Np"])


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow([f"{x:.17g}" if isinstance(x, float) else x for x in r])


def _write_json(path: Path, obj):
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def _threads(arg) -> int:
    if arg is not None:
        return max(1, int(arg))
    env = os.environ.get("KINRED_THREADS")
    return max(1, int(env)) if env else 1


# ---------------------------------------------------------------- subcommands


def _bracket_trial(args):
    grid, variant, seed, kmax, bumps, bump_amp, corrupt = args
    rng = np.random.default_rng(seed)
    dist = random_distribution(rng, n=grid.n, kmax=kmax, n_bumps=bumps, bump_amp=bump_amp, Lq=grid.Lq)
    A = variant.get("A", 0)
    F = brackets.evaluate_functional(grid, brackets.random_functional(rng, grid.n, A, kmax))
    G = brackets.evaluate_functional(grid, brackets.random_functional(rng, grid.n, A, kmax))
    return brackets.verify_poisson_map(grid, F, G, dist(grid), variant["variant"], variant.get("xi"), corrupt=corrupt, seed=seed)


def cmd_verify_brackets(cfg, threads=1):
    grid = _grid(cfg)
    sc = cfg["scenario"]
    tasks = []
    for vi, variant in enumerate(sc["variants"]):
        for t in range(sc["trials"]):
            seed = cfg["seed"] * 1_000_003 + vi * 10_007 + t
            tasks.append((grid, variant, seed, sc["kmax"], sc["bumps"], sc["bump_amp"], sc["corrupt"]))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with ThreadPoolExecutor(max_workers=threads) as ex:
            reports = list(ex.map(_bracket_trial, tasks))
    thr = sc["threshold"] * cfg["tolerances"]["scale"]
    rows = [(r.variant, float(r.order), r.seed, r.lhs, r.rhs, r.rel_err) for r in reports]
    ok = all(r.rel_err < thr for r in reports)
    worst = {}
    for r in reports:
        key = f"{r.variant}:{r.order}"
        worst[key] = max(worst.get(key, 0.0), r.rel_err)
    return ok, {"brackets.csv": (["variant", "order", "seed", "lhs", "rhs", "rel_err"], rows)}, {"threshold": thr, "max_rel_err": worst}


def _couplings(sc):
    mode = sc.get("mode", "neutral")
    return CouplingConstants(mode, e2=sc.get("e2", 0.0) if mode == "electrostatic" else 0.0, G_grav=sc.get("G", 0.0) if mode == "selfgravitating" else 0.0)


def cmd_simulate(cfg, threads=1):
    g, sc = cfg["grid"], cfg["scenario"]
    scenario = dynamics.Scenario(
        n=g["n"], Lq=g["Lq"], Nq=g["Nq"], Pmax=g["Pmax"], Np=g["Np"],
        initial=sc["initial"], method=sc["method"], couplings=_couplings(sc),
        dt=sc["dt"], T_end=sc["T_end"], cadence=sc["cadence"], seed=cfg["seed"],
    )
    series = dynamics.run_simulation(scenario)
    tol = sc["drift_tolerance"] * cfg["tolerances"]["scale"]
    s = series.summary
    if sc["method"] == "euler":
        ok = s["mass"] < tol and s["entropy"] < tol
    else:
        watched = ["mass", "H"] if sc["method"] == "vlasov_poisson" else [c for c in s if c not in ("max_clamp_fraction", "min_margin")]
        ok = all(s[c] < tol for c in watched) and s["max_clamp_fraction"] <= dynamics.CLAMP_TOL
        if scenario.couplings.mode != "selfgravitating":
            ok = ok and s["min_margin"] >= -bounds.SLACK
    rows = [tuple(float(x) for x in r) for r in series.rows]
    return ok, {"diagnostics.csv": (series.columns, rows)}, {"drifts": s, "tolerance": tol}


def cmd_closure_check(cfg, threads=1):
    sc = cfg["scenario"]
    n, A = sc["n"], sc["A"]
    exact = {}
    ok = True
    for e in sc["eta1"]:
        e1 = Fraction(e)
        M = closure.closure_matrix(A, e1, n)
        Minv = closure.closure_matrix_inverse(M)
        ident = [[sum(M[i][k] * Minv[k][j] for k in range(len(M))) for j in range(len(M))] for i in range(len(M))]
        ok = ok and all(ident[i][j] == (1 if i == j else 0) for i in range(len(M)) for j in range(len(M)))
        exact[e] = {
            "eta_bar": {str(a): str(closure.eta_bar(a, e1, n)) for a in range(2, A + 1)},
            "M": [[str(x) for x in row] for row in M],
            "M_inverse": [[str(x) for x in row] for row in Minv],
        }
    summary = {"n": n, "A": A, "exact": exact}
    if sc.get("symbolic"):
        import sympy as sp

        eta = sp.symbols(f"eta1:{A + 1}")
        summary["symbolic"] = {
            "eta_bar": {str(a): str(sp.expand(closure.eta_bar(a, eta[0], n))) for a in range(2, A + 1)},
            "M": [[str(sp.expand(x)) for x in row] for row in closure.closure_matrix(A, eta[0], n)],
            "beta_tilde": {str(b): str(sp.factor(x)) for b, x in zip(range(2, A + 1), closure.beta_tilde_from_eta(list(eta), n))},
        }
    betas = {int(k): float(v) for k, v in sc["betas"].items()}
    rows = []
    beta_err, dh_err = [], []
    grid = _grid(cfg) if n == 1 else None
    for eps in sc["eps"]:
        if grid is not None:
            q = grid.q
            f = closure.synthesize_isotropic(grid, 1 + 0.2 * np.sin(q), np.array([0.3 * np.cos(q)]), 1 + 0.1 * np.cos(2 * q), betas, eps)
            state = poisson_map_JA(grid, f, A)
            bt = closure.beta_tilde(state)
            errs = [float(np.max(np.abs(bt[b - 2] / eps - betas.get(b, 0.0)))) for b in range(2, A + 1)]
            from .hamiltonians import delta_h

            dh_err.append(abs(delta_h(grid, f) - closure.delta_h_truncated(state, A)))
        else:
            eta = closure.chi_quadrature_eta(n, -0.5, betas, eps, A)
            bt = closure.beta_tilde_from_eta(eta, float(n))
            errs = [abs(bt[b - 2] / eps - betas.get(b, 0.0)) for b in range(2, A + 1)]
            dh_err.append(float("nan"))
        beta_err.append(errs)
        rows.append([eps] + errs + [dh_err[-1]])
    be = np.array(beta_err)
    ratios = (be[:-1] / be[1:]).tolist()
    ok = ok and all(1.7 <= r <= 2.3 for row in ratios for r in row)
    summary["beta_ratios"] = ratios
    if grid is not None:
        dr = (np.array(dh_err[:-1]) / np.array(dh_err[1:])).tolist()
        summary["delta_h_ratios"] = dr
        ok = ok and all(6 <= r <= 10 for r in dr)
    header = ["eps"] + [f"beta_err_{b}" for b in range(2, A + 1)] + ["deltaH_minus_deltaH_A"]
    return ok, {"closure_errors.csv": (header, rows)}, summary


def cmd_bound_check(cfg, threads=1):
    grid = _grid(cfg)
    sc = cfg["scenario"]
    couplings = _couplings(sc)
    rows = []
    ok = True
    for t in range(sc["trials"]):
        rng = np.random.default_rng(cfg["seed"] * 7919 + t)
        f = random_distribution(rng, n=grid.n, rho_amp=0.8, u_amp=0.6, theta_amp=0.4, pert_amp=0.5, Lq=grid.Lq)(grid)
        res = bounds.check_bound(grid, f, couplings)
        ok = ok and res.passed in (True, bounds.NOT_APPLICABLE)
        rows.append(["random", t, res.delta_h, res.bound_rhs, res.margin])
    if sc["trajectory"]:
        rng = np.random.default_rng(cfg["seed"])
        f = random_distribution(rng, n=grid.n, Lq=grid.Lq)(grid)
        method = "free_stream" if couplings.mode == "neutral" else "vlasov_poisson"
        steps = int(round(sc["T_end"] / sc["dt"]))
        cadence = max(1, steps // 40)
        for k in range(steps + 1):
            if k % cadence == 0 or k == steps:
                res = bounds.check_bound(grid, f, couplings)
                ok = ok and res.passed in (True, bounds.NOT_APPLICABLE)
                rows.append(["trajectory", k * sc["dt"], res.delta_h, res.bound_rhs, res.margin])
            if k < steps:
                f = dynamics.free_stream_step(grid, f, sc["dt"]) if method == "free_stream" else dynamics.vlasov_poisson_step(grid, f, sc["dt"], couplings)
    return ok, {"bounds.csv": (["kind", "t", "DeltaH", "bound_rhs", "margin"], rows)}, {"samples": len(rows), "mode": couplings.mode}


def bimodal_table(grid, cs, width=1.0, order=4):
    rows = []
    for c in cs:
        f = bimodal_counterexample(grid, c, width)
        st = poisson_map_JA(grid, f, order)
        _, theta = kinetic_velocity_temperature(grid, f)
        rows.append([float(c)] + [float(np.mean(st.s[a])) for a in range(order + 1)] + [float(np.mean(theta))])
    return rows


def cmd_demo_bimodal(cfg, threads=1):
    sc = cfg["scenario"]
    grid = _grid(cfg)
    rows = bimodal_table(grid, sc["c"], sc["width"], sc["order"])
    arr = np.array(rows)
    s_spread = float(np.max(np.abs(arr[:, 1:-1] - arr[0, 1:-1])))
    theta = arr[:, -1]
    order = np.argsort(arr[:, 0])
    ok = s_spread < 1e-10 * cfg["tolerances"]["scale"] and bool(np.all(np.diff(theta[order]) > 0))
    header = ["c"] + [f"s{a}" for a in range(sc["order"] + 1)] + ["theta"]
    return ok, {"bimodal.csv": (header, rows)}, {"max_s_spread": s_spread, "theta": theta.tolist()}


def cmd_decompose(cfg, threads=1):
    grid = _grid(cfg)
    rows = []
    worst = 0.0
    for t in range(cfg["scenario"]["trials"]):
        rng = np.random.default_rng(cfg["seed"] * 104729 + t)
        f = random_distribution(rng, n=grid.n, Lq=grid.Lq, pert_amp=0.5)(grid)
        d = decompose(grid, f)
        rel = abs(d["residual"]) / d["H_KT"]
        worst = max(worst, rel)
        rows.append([t, d["H_KT"], d["H_fluids_J1"], d["DeltaH"], d["residual"]])
        print(f"trial {t}: H_KT={d['H_KT']:.12g} J1*H_fluids={d['H_fluids_J1']:.12g} DeltaH={d['DeltaH']:.6e} residual={d['residual']:.3e}")
    ok = worst < 1e-9 * cfg["tolerances"]["scale"]
    return ok, {"decompose.csv": (["trial", "H_KT", "H_fluids_J1", "DeltaH", "residual"], rows)}, {"max_rel_residual": worst}


COMMANDS = {
    "verify-brackets": cmd_verify_brackets,
    "simulate": cmd_simulate,
    "closure-check": cmd_closure_check,
    "bound-check": cmd_bound_check,
    "demo-bimodal": cmd_demo_bimodal,
    "decompose": cmd_decompose,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kinred", description="Kinetic-to-fluid Hamiltonian reduction checks.")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("--config", type=Path, help="JSON run configuration")
    p.add_argument("--seed", type=int, help="base seed (overrides config)")
    p.add_argument("--threads", type=int, help="worker threads (default: $KINRED_THREADS or 1)")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--tolerance-scale", type=float, help="multiply pass thresholds by X")
    p.add_argument("--corrupt-rhs", action="store_true", help="test hook: corrupt the s*_A bracket (verify-brackets)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        raw = json.loads(args.config.read_text()) if args.config else {}
        if args.seed is not None and args.seed < 0:
            raise ConfigError("seed must be non-negative")
        cfg = resolve_config(args.subcommand, raw, args.seed, args.out, args.tolerance_scale)
        if args.corrupt_rhs:
            if args.subcommand != "verify-brackets":
                raise ConfigError("--corrupt-rhs applies to verify-brackets only")
            cfg["scenario"]["corrupt"] = True
        threads = _threads(args.threads)
    except (OSError, json.JSONDecodeError, ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = Path(cfg["output"])
    out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    try:
        ok, tables, summary = COMMANDS[args.subcommand](cfg, threads)
    except (GridError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except dynamics.SolverAbort as exc:
        print(f"solver abort: {exc}", file=sys.stderr)
        ok, tables, summary = False, {}, {"abort": str(exc)}
    for name, (header, rows) in tables.items():
        _write_csv(out / name, header, rows)
    # the resolved config is embedded so the run can be replayed as-is
    _write_json(out / "summary.json", {"config": cfg, "passed": bool(ok), "summary": summary})
    log.info("%s finished in %.2fs", args.subcommand, time.perf_counter() - start)
    print(f"{args.subcommand}: {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
