"""Batch verification driver.

Subcommands run the randomized discrete suites, the fractional sweeps and
the diffusion-operator checks, then write CSV/JSON reports.  Reruns with
the same configuration and seed produce byte-identical report files; the
process exits 0 only if every check passed (1 on failures, 2 on config
errors).
"""
import argparse
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import fractional, gamma_calculus, markov
from .densities import density_from_json
from .errors import DivergenceSuspected
from .kernels import FiniteKernel, key_inequality_slack
from .quadrature import QuadConfig
from .reports import VerificationReport, emit_report

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _worker_count():
    try:
        return max(1, int(os.environ.get("NLFISHER_WORKERS", "1")))
    except ValueError:
        return 1


def _trial_rng(seed, index):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _map_trials(fn, n_trials, seed):
    """Deterministic map over per-trial RNGs, optionally threaded."""
    workers = _worker_count()
    indices = range(n_trials)
    if workers == 1:
        return [fn(_trial_rng(seed, i)) for i in indices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda i: fn(_trial_rng(seed, i)), indices))


def _record(check, params, value, reference, residual, tol, passed, t0, **extra):
    return VerificationReport(check, params, value, reference, residual, tol,
                              bool(passed), time.monotonic() - t0, extra)


# ---------------------------------------------------------------------------
# markov-verify
# ---------------------------------------------------------------------------

def _hand_value_records(tol_ident=1e-12, tol_lift=1e-10):
    mu = markov.WeightedMeasure([1.0, 1.0])
    chain = markov.ChainModel(FiniteKernel([[0, 1], [1, 0]]), mu, reversible=True)
    f = markov.DiscreteDensity([0.75, 0.25], mu)
    t0 = time.monotonic()
    ik = markov.fisher_nonlocal(chain, f)
    ref = 0.5 * math.log(3.0)
    recs = [_record("hand_value_two_state", {"f": [0.75, 0.25]}, ik, ref,
                    abs(ik - ref), tol_ident, abs(ik - ref) <= tol_ident, t0)]
    t0 = time.monotonic()
    lifted = markov.fisher_nonlocal_lifted(chain, markov.tensor_density(f, mu))
    ref2 = math.log(3.0)
    recs.append(_record("hand_value_two_state_lifted", {"f": [0.75, 0.25]},
                        lifted, ref2, abs(lifted - ref2), tol_lift,
                        abs(lifted - ref2) <= tol_lift, t0))
    return recs


def _markov_suite(chains, seed, trials, tol=1e-10):
    records = _hand_value_records()
    n_id = max(1, trials // 10)

    def identity_trial(rng):
        chain = chains[rng.integers(len(chains))]
        f = markov.sample_density(rng, chain)
        return markov.verify_lifting_identity(chain, f)

    t0 = time.monotonic()
    worst = max(_map_trials(identity_trial, n_id, seed))
    records.append(_record("lifting_identity_randomized",
                           {"trials": n_id, "seed": seed}, worst, 0.0, worst,
                           tol, worst <= tol, t0))

    def inequality_trial(rng):
        chain = chains[rng.integers(len(chains))]
        F = markov.sample_symmetric_lifted(rng, chain)
        f = markov.sample_density(rng, chain)
        slack = markov.verify_lifting_inequality(chain, F)
        eq = markov.verify_lifting_inequality(chain, markov.tensor_density(f, chain.mu))
        h_id, h_slack = markov.verify_entropy_lifting(chain, f, F)
        return slack, abs(eq), h_id, h_slack

    t0 = time.monotonic()
    rows = _map_trials(inequality_trial, trials, seed + 1)
    slacks, eqs, h_ids, h_slacks = map(np.array, zip(*rows))
    records.append(_record("lifting_inequality_randomized",
                           {"trials": trials, "seed": seed + 1},
                           float(slacks.min()), 0.0, float(slacks.min()), -tol,
                           slacks.min() >= -tol, t0))
    records.append(_record("lifting_equality_at_products",
                           {"trials": trials, "seed": seed + 1},
                           float(eqs.max()), 0.0, float(eqs.max()), tol,
                           eqs.max() <= tol, t0))
    records.append(_record("entropy_lifting_identity",
                           {"trials": trials, "seed": seed + 1},
                           float(h_ids.max()), 0.0, float(h_ids.max()), 1e-12,
                           h_ids.max() <= 1e-12, t0))
    records.append(_record("entropy_lifting_inequality",
                           {"trials": trials, "seed": seed + 1},
                           float(h_slacks.min()), 0.0, float(h_slacks.min()), -tol,
                           h_slacks.min() >= -tol, t0))

    def key_trial(rng):
        n, m = int(rng.integers(2, 5)), int(rng.integers(1, 5))
        rates = rng.uniform(0.0, 2.0, (n, n))
        np.fill_diagonal(rates, 0.0)
        k = FiniteKernel(rates)
        H = rng.uniform(0.1, 3.0, (n, m))
        fv = rng.uniform(0.1, 3.0, m)
        nu = rng.uniform(0.1, 2.0, m)
        return min(key_inequality_slack(k, H, fv, markov.WeightedMeasure(nu), x)
                   for x in range(n))

    t0 = time.monotonic()
    worst_key = min(_map_trials(key_trial, trials, seed + 2))
    records.append(_record("averaging_inequality_randomized",
                           {"trials": trials, "seed": seed + 2},
                           worst_key, 0.0, worst_key, -tol, worst_key >= -tol, t0))

    def symmetric_form_trial(rng):
        chain = chains[rng.integers(len(chains))]
        f = markov.sample_density(rng, chain)
        return abs(markov.fisher_nonlocal(chain, f)
                   - markov.fisher_symmetric_form(chain, f))

    t0 = time.monotonic()
    worst_sym = max(_map_trials(symmetric_form_trial, trials, seed + 3))
    records.append(_record("symmetric_double_sum_form",
                           {"trials": trials, "seed": seed + 3},
                           worst_sym, 0.0, worst_sym, 1e-12, worst_sym <= 1e-12, t0))
    return records


def _dissipation_suite(chains, seed, trials, t_grid, dt, tol=1e-6):
    records = []

    def trial(rng):
        chain = chains[rng.integers(len(chains))]
        f = markov.sample_density(rng, chain, min_fisher=1e-2)
        worst = 0.0
        ratios = []
        for t in t_grid:
            r1 = markov.dissipation_residual(chain, f, t, dt)
            r2 = markov.dissipation_residual(chain, f, t, dt / 2.0)
            worst = max(worst, r1)
            if r2 > 1e-14:
                ratios.append(r1 / r2)
        return worst, np.median(ratios)

    t0 = time.monotonic()
    rows = _map_trials(trial, trials, seed)
    worst = max(r[0] for r in rows)
    med_ratio = float(np.median([r[1] for r in rows]))
    records.append(_record("entropy_dissipation_residual",
                           {"trials": trials, "seed": seed, "dt": dt,
                            "t_grid": list(t_grid)},
                           worst, 0.0, worst, tol, worst <= tol, t0))
    records.append(_record("entropy_dissipation_order",
                           {"trials": trials, "seed": seed, "dt": dt},
                           med_ratio, 4.0, abs(med_ratio - 4.0), 0.8,
                           3.2 <= med_ratio <= 4.8, t0))
    return records


# ---------------------------------------------------------------------------
# fractional commands
# ---------------------------------------------------------------------------

def _sweep_rows(f, s_grid, cfg):
    sweep = fractional.limit_sweep(f, s_grid, cfg)
    rows = []
    for r in sweep.rows:
        rows.append({"s": r.s, "i_s": r.i_s, "quad_err": r.quad_err,
                     "i_classical": sweep.i_classical,
                     "deviation": r.deviation, "converged": r.converged})
    return rows, sweep


def _emit_sweep(rows, path, fmt):
    import csv as _csv
    from .reports import _atomic_write

    cols = ["s", "i_s", "quad_err", "i_classical", "deviation", "converged"]
    if fmt == "json":
        def write(fh):
            json.dump(rows, fh, indent=1, sort_keys=True)
            fh.write("\n")
    else:
        def write(fh):
            w = _csv.writer(fh, lineterminator="\n")
            w.writerow(cols)
            for row in rows:
                w.writerow([f"{row[c]:.17g}" if isinstance(row[c], float) else row[c]
                            for c in cols])
    _atomic_write(path, write)


def _constants_records(d_values, s_values, tol=1e-6):
    records = []
    for d in d_values:
        for s in s_values:
            t0 = time.monotonic()
            closed = fractional.normalization_constant(d, s)
            oracle = fractional.normalization_constant_quadrature(d, s)
            rel = abs(closed / oracle.value - 1.0)
            records.append(_record("kernel_constant_vs_integral",
                                   {"d": d, "s": s}, closed, oracle.value, rel,
                                   tol, rel <= tol and oracle.converged, t0))
        t0 = time.monotonic()
        s_edge = 0.999
        ratio = fractional.normalization_constant(d, s_edge) / (1.0 - s_edge)
        lim = fractional.normalization_limit_ratio(d)
        rel = abs(ratio / lim - 1.0)
        records.append(_record("kernel_constant_local_limit",
                               {"d": d, "s": s_edge}, ratio, lim, rel, 0.01,
                               rel <= 0.01, t0))
    return records


# ---------------------------------------------------------------------------
# command implementations
# ---------------------------------------------------------------------------

def _load_chains_arg(args, normalize=False):
    if args.chains:
        return markov.load_chains(args.chains)
    rng = np.random.default_rng(np.random.SeedSequence(args.seed, spawn_key=(999,)))
    return [markov.sample_reversible_chain(rng, int(rng.integers(2, args.max_states + 1)),
                                           normalize_activity=normalize)
            for _ in range(args.random_chains)]


def cmd_markov_verify(args):
    chains = _load_chains_arg(args)
    records = _markov_suite(chains, args.seed, args.trials)
    return records, None


def cmd_dissipation(args):
    chains = _load_chains_arg(args, normalize=True)
    t_grid = [float(t) for t in args.t_grid.split(",")]
    records = _dissipation_suite(chains, args.seed, args.trials, t_grid, args.dt)
    return records, None


def cmd_constants(args):
    d_values = [int(v) for v in args.d.split(",")]
    s_values = [float(v) for v in args.s.split(",")]
    records = _constants_records(d_values, s_values)
    for r in records:
        print(f"{r.check} d={r.params['d']} s={r.params.get('s')}: "
              f"value={r.value:.10g} reference={r.reference:.10g} "
              f"pass={r.passed}")
    return records, None


def _load_density(path):
    with open(path) as fh:
        return density_from_json(json.load(fh))


def cmd_frac_limit(args):
    f = _load_density(args.density)
    cfg = QuadConfig(rel_tol=args.rel_tol, abs_tol=args.abs_tol)
    s_grid = [float(v) for v in args.s_grid.split(",")]
    rows, sweep = _sweep_rows(f, s_grid, cfg)
    if args.out:
        _emit_sweep(rows, args.out, args.format)
    devs = [r["deviation"] for r in rows[-3:]]
    monotone = all(b < a for a, b in zip(devs, devs[1:]))
    final_ok = rows[-1]["deviation"] < 0.15 * abs(sweep.i_classical)
    rec = VerificationReport("fractional_local_limit",
                             {"density": args.density, "s_grid": s_grid,
                              "hypotheses": sweep.hypotheses},
                             rows[-1]["i_s"], sweep.i_classical,
                             rows[-1]["deviation"],
                             0.15 * abs(sweep.i_classical),
                             monotone and final_ok)
    return [rec], None


def cmd_frac_scaling(args):
    f = _load_density(args.density)
    cfg = QuadConfig(rel_tol=args.rel_tol, abs_tol=args.abs_tol)
    cache = {}
    records = []
    for s in (float(v) for v in args.s_grid.split(",")):
        spec = fractional.FracKernelSpec(f.d, s)
        for c in (float(v) for v in args.c_grid.split(",")):
            t0 = time.monotonic()
            try:
                ratio = fractional.scaling_check(f, c, spec, cfg, cache)
            except DivergenceSuspected as exc:
                records.append(_record("fractional_scaling_law",
                                       {"c": c, "s": s, "density": args.density},
                                       None, 1.0, None, args.tol,
                                       False, t0, error=str(exc)))
                continue
            records.append(_record("fractional_scaling_law",
                                   {"c": c, "s": s, "density": args.density},
                                   ratio, 1.0, abs(ratio - 1.0), args.tol,
                                   abs(ratio - 1.0) <= args.tol, t0))
    return records, None


def cmd_frac_bsi(args):
    f = _load_density(args.f)
    g = _load_density(args.g)
    cfg = QuadConfig(rel_tol=args.rel_tol, abs_tol=args.abs_tol)
    cache = {}
    records = []
    for s in (float(v) for v in args.s_grid.split(",")):
        spec = fractional.FracKernelSpec(f.d, s)
        for alpha in (float(v) for v in args.alpha_grid.split(",")):
            t0 = time.monotonic()
            try:
                slack, err = fractional.bsi_slack(f, g, alpha, spec, cfg, cache)
            except DivergenceSuspected as exc:
                records.append(_record("convolution_subadditivity",
                                       {"alpha": alpha, "s": s, "f": args.f,
                                        "g": args.g},
                                       None, 0.0, None, 0.0,
                                       False, t0, error=str(exc)))
                continue
            records.append(_record("convolution_subadditivity",
                                   {"alpha": alpha, "s": s, "f": args.f,
                                    "g": args.g},
                                   slack, 0.0, slack, -err, slack >= -err, t0,
                                   quad_err=err))
    return records, None


def cmd_gamma_verify(args):
    with open(args.operator) as fh:
        op_spec = json.load(fh)
    if op_spec["kind"] == "laguerre":
        alpha = op_spec["alpha"]
        op = gamma_calculus.DiffusionOperator1D.laguerre(alpha)
        f = gamma_calculus.poly_function([0.0, 1.0 / alpha], "x/alpha")
        # x^2 has second moment alpha (alpha + 1) under the weight
        g2 = gamma_calculus.poly_function([0.0, 0.0, 1.0 / (alpha * (alpha + 1.0))])
        points = np.linspace(0.3, 5.0, 9)
    elif op_spec["kind"] == "jacobi":
        alpha, beta = op_spec["alpha"], op_spec["beta"]
        op = gamma_calculus.DiffusionOperator1D.jacobi(alpha, beta)
        mean = (beta - alpha) / (alpha + beta)
        f = gamma_calculus.poly_function([1.0 / (1.0 + mean), 1.0 / (1.0 + mean)])
        g2 = None
        points = np.linspace(-0.8, 0.8, 9)
    else:
        raise ValueError(f"unknown operator kind {op_spec['kind']!r}")
    cfg = QuadConfig(rel_tol=args.rel_tol, abs_tol=args.abs_tol)
    records = []

    t0 = time.monotonic()
    rng = np.random.default_rng(args.seed)
    worst = 0.0
    for _ in range(200):
        p = gamma_calculus.poly_function(rng.uniform(-1.0, 1.0, 4))
        q = gamma_calculus.poly_function(rng.uniform(-1.0, 1.0, 4))
        x = np.array([rng.uniform(*_sample_box(op))])
        gap = np.abs(gamma_calculus.carre_du_champ(op, p, q, x)
                     - gamma_calculus.carre_du_champ_bracket(op, p, q, x))
        worst = max(worst, float(gap[0]))
    records.append(_record("carre_du_champ_bracket_agreement",
                           {"operator": op_spec, "draws": 200, "seed": args.seed},
                           worst, 0.0, worst, 1e-9, worst <= 1e-9, t0))

    t0 = time.monotonic()
    resid = gamma_calculus.verify_tensor_identity(op, f, cfg)
    records.append(_record("product_fisher_identity", {"operator": op_spec},
                           resid, 0.0, resid, 1e-4, resid <= 1e-4, t0))

    if g2 is not None:
        t0 = time.monotonic()
        F = gamma_calculus.mixture_2d([(0.5, f, f), (0.5, g2, g2)])
        slack = gamma_calculus.verify_projection_inequality(op, F, cfg)
        records.append(_record("projection_inequality_mixture",
                               {"operator": op_spec}, slack, 0.0, slack, -1e-4,
                               slack >= -1e-4, t0))

    t0 = time.monotonic()
    resid = gamma_calculus.verify_diffusion_chain_rule(
        op, gamma_calculus.scalar_log, f,
        gamma_calculus.poly_function([0.0, 1.0]), points)
    records.append(_record("diffusion_chain_rule", {"operator": op_spec, "map": "log"},
                           resid, 0.0, resid, 1e-10, resid <= 1e-10, t0))
    return records, None


def _sample_box(op):
    return (0.1, 6.0) if op.kind == "laguerre" else (-0.9, 0.9)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(
        prog="nlfisher",
        description="Verification suites for jump-kernel Fisher information")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seeded=True):
        sp.add_argument("--out", help="report file path")
        sp.add_argument("--format", choices=("csv", "json"), default="json")
        sp.add_argument("--timings", action="store_true",
                        help="include wall times (breaks byte-identical reruns)")
        sp.add_argument("--rel-tol", type=float, default=1e-8)
        sp.add_argument("--abs-tol", type=float, default=1e-12)
        if seeded:
            sp.add_argument("--seed", type=int, default=0)

    sp = sub.add_parser("markov-verify", help="randomized discrete suites")
    sp.add_argument("--chains", help="chain JSON file")
    sp.add_argument("--random-chains", type=int, default=25)
    sp.add_argument("--max-states", type=int, default=5)
    sp.add_argument("--trials", type=int, default=10000)
    common(sp)
    sp.set_defaults(fn=cmd_markov_verify)

    sp = sub.add_parser("dissipation", help="entropy dissipation identity")
    sp.add_argument("--chains")
    sp.add_argument("--random-chains", type=int, default=25)
    sp.add_argument("--max-states", type=int, default=5)
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--t-grid", default="0,0.5,2")
    sp.add_argument("--dt", type=float, default=1e-4)
    common(sp)
    sp.set_defaults(fn=cmd_dissipation)

    sp = sub.add_parser("constants", help="kernel normalization constant checks")
    sp.add_argument("--d", default="1,2")
    sp.add_argument("--s", default="0.25,0.5,0.75")
    common(sp, seeded=False)
    sp.set_defaults(fn=cmd_constants)

    sp = sub.add_parser("frac-limit", help="local limit sweep")
    sp.add_argument("--density", required=True)
    sp.add_argument("--s-grid", default="0.6,0.7,0.8,0.9,0.95,0.99")
    common(sp, seeded=False)
    sp.set_defaults(fn=cmd_frac_limit)

    sp = sub.add_parser("frac-scaling", help="dilation scaling law")
    sp.add_argument("--density", required=True)
    sp.add_argument("--c-grid", default="0.5,2")
    sp.add_argument("--s-grid", default="0.3,0.6,0.9")
    sp.add_argument("--tol", type=float, default=0.02)
    common(sp, seeded=False)
    sp.set_defaults(fn=cmd_frac_scaling)

    sp = sub.add_parser("frac-bsi", help="convolution subadditivity sweep")
    sp.add_argument("--f", required=True)
    sp.add_argument("--g", required=True)
    sp.add_argument("--alpha-grid", default="0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")
    sp.add_argument("--s-grid", default="0.3,0.5,0.7,0.9")
    common(sp, seeded=False)
    sp.set_defaults(fn=cmd_frac_bsi)

    sp = sub.add_parser("gamma-verify", help="diffusion operator checks")
    sp.add_argument("--operator", required=True)
    common(sp)
    sp.set_defaults(fn=cmd_gamma_verify)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code not in (0, None) else 0
    try:
        records, _ = args.fn(args)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DivergenceSuspected as exc:
        print(f"error: divergence suspected: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if records and args.out and args.fn is not cmd_frac_limit:
        emit_report(records, args.out, args.format, timings=args.timings)
    n_fail = sum(0 if r.passed else 1 for r in records)
    for r in records:
        status = "PASS" if r.passed else "FAIL"
        value = "n/a" if r.value is None else f"{r.value:.10g}"
        resid = "n/a" if r.residual_or_slack is None else f"{r.residual_or_slack:.3e}"
        print(f"[{status}] {r.check}: value={value} "
              f"residual_or_slack={resid} tol={r.tolerance:g}")
    return EXIT_OK if n_fail == 0 else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
