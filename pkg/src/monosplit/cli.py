"""Command-line harness: parameter tables, solve runs, sweeps, trace audits.

Config files are JSON with an explicit ``schema_version``; unknown fields
are rejected so that golden fixtures stay unambiguous.
"""

import argparse
import csv
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import bounds, hpe_core, instances, operators, params as params_mod
from .errors import (CertificationError, ConfigError, MonosplitError,
                     ParameterError, TheoremViolation)

CONFIG_SCHEMA_VERSION = 1

_CURVE_SIGMAS = (0.0, 0.25, 0.5, 0.75, 0.99)


# ---------------------------------------------------------------------------
# Config parsing
# ---------------------------------------------------------------------------

def _expect_keys(d, context, required, optional=()):
    if not isinstance(d, dict):
        raise ConfigError(f"{context} must be an object")
    unknown = set(d) - set(required) - set(optional)
    if unknown:
        raise ConfigError(f"unknown fields in {context}: {sorted(unknown)}")
    missing = set(required) - set(d)
    if missing:
        raise ConfigError(f"missing fields in {context}: {sorted(missing)}")
    return d


def load_config(path, seed_override=None):
    """Parse and validate an experiment config file."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    _expect_keys(raw, "config", ("schema_version", "problem", "instance",
                                 "params"),
                 ("stopping", "sweep"))
    if raw["schema_version"] != CONFIG_SCHEMA_VERSION:
        raise ConfigError(
            f"unsupported schema_version {raw['schema_version']} "
            f"(expected {CONFIG_SCHEMA_VERSION})")

    prob = _expect_keys(raw["problem"], "problem",
                        ("kind", "dimension", "seed"), ("matrix", "offset"))
    seed = seed_override if seed_override is not None else prob["seed"]
    problem = operators.make_problem(
        prob["kind"], prob["dimension"], seed,
        matrix=prob.get("matrix"), offset=prob.get("offset"))

    inst = _expect_keys(raw["instance"], "instance", ("kind",),
                        ("lambda", "lambda_floor"))
    config = instances.InstanceConfig(
        kind=inst["kind"], lam=inst.get("lambda"),
        lambda_floor=inst.get("lambda_floor"))

    par = _expect_keys(raw["params"], "params", (),
                       ("alpha", "sigma", "beta", "tau", "ramp_iters"))
    params = params_mod.HpeParams.from_dict(par)

    stop_raw = _expect_keys(raw.get("stopping", {}), "stopping", (),
                            ("rho", "eps_hat", "max_iters"))
    stop = hpe_core.StoppingRule(
        rho=stop_raw.get("rho", 1e-8),
        eps_hat=stop_raw.get("eps_hat", 1e-10),
        max_iters=stop_raw.get("max_iters", 10 ** 6))

    sweep = raw.get("sweep")
    if sweep is not None:
        _expect_keys(sweep, "sweep", (), ("alpha", "sigma", "beta", "tau"))
        if not any(sweep.get(k) for k in ("alpha", "sigma", "beta", "tau")):
            raise ConfigError("sweep present but every grid is empty")

    return {"problem": problem, "instance": config, "params": params,
            "stop": stop, "sweep": sweep, "raw": raw}


# ---------------------------------------------------------------------------
# params subcommand
# ---------------------------------------------------------------------------

def cmd_params(args):
    if args.curve:
        with open(args.curve, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["sigma", "beta", "tau"])
            grid = np.linspace(0.01, 0.99, 99)
            for sigma in _CURVE_SIGMAS:
                for beta in grid:
                    writer.writerow([repr(float(sigma)), repr(float(beta)),
                                     repr(float(params_mod.tau_of(
                                         sigma, float(beta))))])
        print(f"wrote relaxation curve to {args.curve}")
        return 0
    sigma, beta = args.sigma, args.beta
    bp = params_mod.beta_prime(sigma, beta)
    tau = params_mod.tau_of(sigma, beta)
    eta = params_mod.eta_of(sigma, tau)
    print(f"sigma      = {sigma}")
    print(f"beta       = {beta}")
    print(f"beta_prime = {bp}")
    print(f"tau        = {tau}")
    print(f"eta        = {eta}")
    if args.alpha is not None:
        qa = params_mod.q_value(args.alpha, eta)
        print(f"q(alpha)   = {qa}" + ("  (inadmissible)" if qa <= 0 else ""))
    return 0


# ---------------------------------------------------------------------------
# solve subcommand
# ---------------------------------------------------------------------------

def _run_config(cfg, record_vectors=False):
    return instances.solve(cfg["problem"], cfg["instance"], cfg["params"],
                           stop=cfg["stop"], record_vectors=record_vectors)


def _bound_inputs(cfg, state):
    problem = cfg["problem"]
    if problem.known_solution is None:
        return None
    d0 = problem.d0(state.z0)
    return bounds.BoundInputs(d0=d0, lambda_floor=state.lambda_floor,
                              params=cfg["params"])


def cmd_solve(args):
    cfg = load_config(args.config, seed_override=args.seed)
    out_dir = args.out
    os.makedirs(out_dir, exist_ok=True)
    state = _run_config(cfg)

    header = {"config": cfg["raw"], "params": cfg["params"].to_dict(),
              "lambda_floor": state.lambda_floor, "verdict": state.verdict}
    trace_path = os.path.join(out_dir, "trace.jsonl")
    csv_path = os.path.join(out_dir, "trace.csv")
    state.trace.write_jsonl(trace_path, header=header)
    state.trace.write_csv(csv_path)

    summary = {
        "verdict": state.verdict,
        "iterations": state.k,
        "final_norm_v": state.trace.column("norm_v")[-1],
        "final_eps": state.trace.column("eps")[-1],
    }
    inp = _bound_inputs(cfg, state)
    if inp is not None:
        report = bounds.assert_bounds(
            state.trace, inp, tol=args.tol,
            check_ergodic=cfg["params"].schedule.is_constant)
        summary["bound_utilization"] = report["worst_utilization"]
    with open(os.path.join(out_dir, "summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, default=float)

    print(f"verdict={state.verdict} k={state.k} "
          f"norm_v={summary['final_norm_v']:.3e} "
          f"eps={summary['final_eps']:.3e}")
    return 0 if state.verdict == "solved" else 1


# ---------------------------------------------------------------------------
# bench subcommand
# ---------------------------------------------------------------------------

def _bench_cell(payload):
    config_path, seed, overrides, tol = payload
    label = {k: overrides[k] for k in sorted(overrides)}
    try:
        cfg = load_config(config_path, seed_override=seed)
        pdict = cfg["params"].to_dict()
        pdict.update(overrides)
        if "tau" in overrides:
            pdict.pop("beta", None)
        cfg["params"] = params_mod.HpeParams.from_dict(pdict)
        state = _run_config(cfg)
        worst = math.nan
        inp = _bound_inputs(cfg, state)
        if inp is not None:
            report = bounds.assert_bounds(
                state.trace, inp, tol=tol,
                check_ergodic=cfg["params"].schedule.is_constant)
            worst = float(max(report["worst_utilization"].values()))
        return (label, "ok", state.verdict, state.k,
                float(state.trace.column("norm_v")[-1]),
                float(state.trace.column("eps")[-1]), worst, "")
    except MonosplitError as exc:
        return (label, "error", "", 0, math.nan, math.nan, math.nan, str(exc))


def cmd_bench(args):
    cfg = load_config(args.config, seed_override=args.seed)
    sweep = cfg["sweep"]
    if not sweep:
        raise ConfigError("bench needs a nonempty 'sweep' section")
    axes = [(name, sweep[name]) for name in ("alpha", "sigma", "beta", "tau")
            if sweep.get(name)]
    cells = [{}]
    for name, values in axes:
        cells = [dict(c, **{name: v}) for c in cells for v in values]
    cells.sort(key=lambda c: tuple(sorted(c.items())))
    seed = args.seed if args.seed is not None else cfg["raw"]["problem"]["seed"]
    payloads = [(args.config, seed, cell, args.tol) for cell in cells]

    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_bench_cell, payloads))
    else:
        results = [_bench_cell(p) for p in payloads]

    os.makedirs(os.path.dirname(args.out) or ".", exist_ok=True)
    grid_names = [name for name, _ in axes]
    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(grid_names + ["status", "verdict", "iterations",
                                      "final_norm_v", "final_eps",
                                      "worst_bound_utilization", "error"])
        for label, status, verdict, k, nv, eps, worst, err in results:
            writer.writerow([repr(float(label[g])) for g in grid_names]
                            + [status, verdict, k, repr(nv), repr(eps),
                               repr(worst), err])
    print(f"wrote {len(results)} rows to {args.out}")
    return 0


# ---------------------------------------------------------------------------
# certify subcommand
# ---------------------------------------------------------------------------

def certify_trace(trace, cfg, tol=1e-8):
    """Re-verify every recorded inequality from trace scalars + config data.

    Returns an ordered list of ``(check_name, passed, detail)``.
    """
    p = cfg["params"]
    problem = cfg["problem"]
    results = []
    n = len(trace)
    if n == 0:
        return [("non_empty", True, "empty trace: vacuous pass (warning)")]

    # error criterion, recomputed from the stored squares
    resid_sq = trace.column("resid_sq")
    eps = trace.column("eps")
    lam = trace.column("lam")
    norm_dz = trace.column("norm_dz")
    lhs = resid_sq + 2.0 * lam * eps
    rhs = p.sigma ** 2 * norm_dz ** 2
    slack = 1e-18 * (1.0 + norm_dz ** 2)
    ok = (lhs <= slack) | ((rhs > 0) & (lhs <= rhs * (1.0 + 1e-9)))
    bad = np.nonzero(~ok)[0]
    results.append(("error_criterion", bad.size == 0,
                    f"violated at k={bad[0] + 1}" if bad.size else
                    f"all {n} steps within tolerance"))

    # s_k consistency against its defining max
    s_rec = trace.column("s_k")
    step_sq = (p.tau * lam * trace.column("norm_v")) ** 2
    s_exp = np.maximum(p.eta * step_sq,
                       (1.0 - p.sigma ** 2) * p.tau * norm_dz ** 2)
    ok = np.abs(s_rec - s_exp) <= 1e-9 * (1.0 + np.abs(s_exp))
    bad = np.nonzero(~ok)[0]
    results.append(("energy_term_consistency", bad.size == 0,
                    f"mismatch at k={bad[0] + 1}" if bad.size else "exact"))

    dist = trace.column("dist_to_solution")
    dist_w = trace.column("dist_w")
    have_dist = not np.any(np.isnan(dist))
    if have_dist:
        resid = dist_w ** 2 - dist ** 2 - s_rec
        floor = -np.maximum(1e-9, 1e-12 * dist_w ** 2)
        bad = np.nonzero(resid < floor)[0]
        results.append(("fejer_descent", bad.size == 0,
                        f"violated at k={bad[0] + 1}" if bad.size else
                        f"min residual {resid.min():.3e}"))

    if problem.known_solution is not None:
        z0 = np.zeros(problem.dim)
        d0 = problem.d0(z0)
        lhs_sum = np.cumsum(trace.column("step_norm") ** 2)
        bound = 2.0 * d0 ** 2 / ((1.0 - p.alpha) * p.q_alpha)
        passed = bool(lhs_sum[-1] <= bound * (1.0 + tol))
        results.append(("step_summability", passed,
                        f"sum={lhs_sum[-1]:.6e} bound={bound:.6e}"))

        floor_lam = float(lam.min())
        inp = bounds.BoundInputs(d0=d0, lambda_floor=floor_lam, params=p)
        try:
            bounds.assert_bounds(trace, inp, tol=tol,
                                 check_ergodic=p.schedule.is_constant)
            results.append(("rate_bounds", True, "all prefixes within bounds"))
        except TheoremViolation as exc:
            results.append(("rate_bounds", False, str(exc)))

    eps_a = trace.column("eps_a")
    results.append(("aggregated_error_nonneg", bool(eps_a.min() >= -1e-9),
                    f"min eps_a = {eps_a.min():.3e}"))
    return results


def cmd_certify(args):
    cfg = load_config(args.config)
    trace, _meta = hpe_core.IterationTrace.read_jsonl(args.trace)
    results = certify_trace(trace, cfg, tol=args.tol)
    all_ok = True
    for name, passed, detail in results:
        status = "PASS" if passed else "FAIL"
        all_ok &= passed
        print(f"[{status}] {name}: {detail}")
    return 0 if all_ok else 3


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="monosplit",
        description="Inertial under-relaxed splitting solvers for monotone "
                    "inclusions, with per-iteration certificates.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("params", help="parameter tables and the "
                                      "relaxation curve")
    p.add_argument("--sigma", type=float, default=0.0)
    p.add_argument("--beta", type=float, default=1.0 / 3.0)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--curve", metavar="PATH",
                   help="write the tau(sigma, beta) curve as CSV")
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("solve", help="run one configured experiment")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("bench", help="run a parameter sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output CSV path")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("certify", help="re-verify a recorded trace")
    p.add_argument("--trace", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_certify)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ParameterError, CertificationError, TheoremViolation) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
