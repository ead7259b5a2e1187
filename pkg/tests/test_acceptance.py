"""Acceptance suite: one test per gating criterion, at pinned tolerances.

Each test prints a single PASS/FAIL line (visible with ``pytest -s`` or on
failure) and asserts the criterion.  Run with:

    pytest tests/test_acceptance.py -v -s
"""
import math
import time

import numpy as np
import pytest

from nlfisher.densities import Cauchy, ExpPower, Gaussian
from nlfisher.errors import DivergenceSuspected
from nlfisher.fractional import (FracKernelSpec, bsi_slack, divergence_probe,
                                 fisher_classical, fisher_fractional,
                                 lifted_product_identity_gap, limit_sweep,
                                 normalization_constant,
                                 normalization_constant_quadrature,
                                 normalization_limit_ratio)
from nlfisher.gamma_calculus import (DiffusionOperator1D, mixture_2d,
                                     poly_function, scalar_log, tensor_2d,
                                     fisher_gamma, fisher_gamma_product,
                                     verify_diffusion_chain_rule,
                                     verify_projection_inequality)
from nlfisher.kernels import FiniteKernel, WeightedMeasure, key_inequality_slack
from nlfisher.markov import (ChainModel, DiscreteDensity, dissipation_residual,
                             fisher_nonlocal, fisher_nonlocal_lifted,
                             sample_density, sample_reversible_chain,
                             sample_symmetric_lifted, tensor_density,
                             verify_entropy_lifting, verify_lifting_identity,
                             verify_lifting_inequality)
from nlfisher.quadrature import QuadConfig

CFG = QuadConfig()


def _report(name, passed, detail, t0):
    status = "PASS" if passed else "FAIL"
    print(f"[ACCEPTANCE] {name}: {status} ({detail}; {time.time() - t0:.1f}s)")
    assert passed, f"{name}: {detail}"


# -- criterion 1: product identity on random chains --------------------------

def test_01_lifting_identity_randomized():
    t0 = time.time()
    rng = np.random.default_rng(101)
    worst = 0.0
    for _ in range(1000):
        chain = sample_reversible_chain(rng, int(rng.integers(2, 6)))
        f = sample_density(rng, chain)
        worst = max(worst, verify_lifting_identity(chain, f))
    _report("1 lifting identity (10^3 chains, n<=5)", worst <= 1e-10,
            f"max residual {worst:.2e} <= 1e-10", t0)


# -- criteria 2+3: shared harness over symmetric product densities -----------

@pytest.fixture(scope="module")
def lifted_suite():
    rng = np.random.default_rng(202)
    chains = [sample_reversible_chain(rng, 3) for _ in range(100)]
    min_slack = math.inf
    max_eq_resid = 0.0
    max_h_ident = 0.0
    min_h_slack = math.inf
    t0 = time.time()
    for i in range(10000):
        chain = chains[i % len(chains)]
        F = sample_symmetric_lifted(rng, chain)
        min_slack = min(min_slack, verify_lifting_inequality(chain, F))
        f = sample_density(rng, chain)
        max_eq_resid = max(max_eq_resid, verify_lifting_inequality(
            chain, tensor_density(f, chain.mu)))
        h_ident, h_slack = verify_entropy_lifting(chain, f, F)
        max_h_ident = max(max_h_ident, h_ident)
        min_h_slack = min(min_h_slack, h_slack)
    return {"min_slack": min_slack, "max_eq": max_eq_resid,
            "h_ident": max_h_ident, "h_slack": min_h_slack,
            "elapsed": time.time() - t0}


def test_02_lifting_inequality_randomized(lifted_suite):
    t0 = time.time() - lifted_suite["elapsed"]
    ok = (lifted_suite["min_slack"] >= -1e-10
          and lifted_suite["max_eq"] <= 1e-10)
    _report("2 lifting inequality (10^4 symmetric F, 3 states)", ok,
            f"min slack {lifted_suite['min_slack']:.2e} >= -1e-10, "
            f"product-equality residual {lifted_suite['max_eq']:.2e} <= 1e-10", t0)


def test_03_entropy_lifting(lifted_suite):
    t0 = time.time()
    ok = (lifted_suite["h_ident"] <= 1e-12
          and lifted_suite["h_slack"] >= -1e-10)
    _report("3 entropy lifting (same harness)", ok,
            f"identity residual {lifted_suite['h_ident']:.2e} <= 1e-12, "
            f"min slack {lifted_suite['h_slack']:.2e} >= -1e-10", t0)


# -- criterion 4: averaging inequality ----------------------------------------

def test_04_averaging_inequality_randomized():
    t0 = time.time()
    rng = np.random.default_rng(404)
    worst = math.inf
    for _ in range(10000):
        n, m = int(rng.integers(2, 5)), int(rng.integers(1, 5))
        rates = rng.uniform(0.0, 2.0, (n, n))
        np.fill_diagonal(rates, 0.0)
        k = FiniteKernel(rates)
        H = rng.uniform(0.1, 3.0, (n, m))
        f = rng.uniform(0.1, 3.0, m)
        nu = WeightedMeasure(rng.uniform(0.1, 2.0, m))
        worst = min(worst, min(key_inequality_slack(k, H, f, nu, x)
                               for x in range(n)))
    _report("4 averaging inequality (10^4 instances, all states)",
            worst >= -1e-10, f"min slack {worst:.2e} >= -1e-10", t0)


# -- criterion 5: entropy dissipation -----------------------------------------

def test_05_entropy_dissipation():
    t0 = time.time()
    rng = np.random.default_rng(505)
    dt = 1e-4
    worst = 0.0
    ratios = []
    for _ in range(100):
        chain = sample_reversible_chain(rng, int(rng.integers(2, 6)),
                                        normalize_activity=True)
        f = sample_density(rng, chain, min_fisher=1e-2)
        for t in (0.0, 0.5, 2.0):
            r1 = dissipation_residual(chain, f, t, dt)
            r2 = dissipation_residual(chain, f, t, dt / 2.0)
            worst = max(worst, r1)
            if r2 > 1e-12:
                ratios.append(r1 / r2)
    med = float(np.median(ratios))
    ok = worst <= 1e-6 and 3.2 <= med <= 4.8
    _report("5 entropy dissipation (10^2 chains, t in {0, 0.5, 2})", ok,
            f"max residual {worst:.2e} <= 1e-6 at dt=1e-4, "
            f"median halving ratio {med:.2f} in [3.2, 4.8]", t0)


# -- criterion 6: hand values --------------------------------------------------

def test_06_hand_values():
    t0 = time.time()
    mu = WeightedMeasure([1.0, 1.0])
    chain = ChainModel(FiniteKernel([[0.0, 1.0], [1.0, 0.0]]), mu, reversible=True)
    f = DiscreteDensity([0.75, 0.25], mu)
    ik = fisher_nonlocal(chain, f)
    lifted = fisher_nonlocal_lifted(chain, tensor_density(f, mu))
    r1 = abs(ik - 0.5 * math.log(3.0))
    r2 = abs(lifted - math.log(3.0))
    _report("6 hand value (two-state chain)", r1 <= 1e-12 and r2 <= 1e-10,
            f"|i_k - ln(3)/2| = {r1:.2e} <= 1e-12, "
            f"|lifted - ln 3| = {r2:.2e} <= 1e-10", t0)


# -- criterion 7: kernel constant ----------------------------------------------

def test_07_kernel_constant():
    t0 = time.time()
    worst = 0.0
    for d in (1, 2):
        for s in (0.25, 0.5, 0.75):
            closed = normalization_constant(d, s)
            oracle = normalization_constant_quadrature(d, s)
            assert oracle.converged
            worst = max(worst, abs(closed / oracle.value - 1.0))
    spot = abs(normalization_constant(1, 0.5) - 1.0 / math.pi)
    lim1 = abs(normalization_constant(1, 0.999) / 0.001
               / normalization_limit_ratio(1) - 1.0)
    lim2 = abs(normalization_constant(2, 0.999) / 0.001
               / normalization_limit_ratio(2) - 1.0)
    ok = worst <= 1e-6 and spot <= 1e-6 and lim1 <= 0.01 and lim2 <= 0.01
    _report("7 kernel constant vs defining integral", ok,
            f"6-point max rel {worst:.2e} <= 1e-6, |c(1,1/2) - 1/pi| = "
            f"{spot:.2e}, limit ratios off by {lim1:.3f}/{lim2:.3f} <= 1%", t0)


# -- criterion 8: classical Fisher oracles --------------------------------------

def test_08_classical_fisher_oracles():
    t0 = time.time()
    r_cauchy = abs(fisher_classical(Cauchy(1.0), CFG) - 0.5)
    errs = [abs(fisher_classical(Gaussian(s), CFG) - 1.0 / s ** 2)
            for s in (1.0, 1.5)]
    ok = r_cauchy <= 1e-8 and max(errs) <= 1e-8
    _report("8 classical Fisher oracles", ok,
            f"|i(C1) - 1/2| = {r_cauchy:.2e}, max Gaussian dev {max(errs):.2e} "
            "<= 1e-8", t0)


# -- criterion 9: local limit sweep ---------------------------------------------

S_GRID = [0.6, 0.7, 0.8, 0.9, 0.95, 0.99]


@pytest.mark.parametrize("family,f", [
    ("cauchy", Cauchy(1.0)),
    ("exp_power", ExpPower(1.0, 1.0)),
])
def test_09_local_limit_sweep(family, f):
    t0 = time.time()
    sweep = limit_sweep(f, S_GRID, CFG)
    monotone = sweep.deviations_decrease_at_end(3)
    final_frac = sweep.rows[-1].deviation / abs(sweep.i_classical)
    converged = all(r.converged for r in sweep.rows)
    ok = monotone and final_frac < 0.15 and converged
    _report(f"9 local limit sweep ({family})", ok,
            f"deviations decrease over final three s, final deviation "
            f"{100 * final_frac:.2f}% of i(f) < 15%", t0)


# -- criteria 10+11: share one i_s cache ----------------------------------------

@pytest.fixture(scope="module")
def is_cache():
    return {}


def test_10_scaling_law(is_cache):
    t0 = time.time()
    from nlfisher.fractional import scaling_check
    worst = 0.0
    f = Cauchy(1.0)
    for s in (0.3, 0.6, 0.9):
        spec = FracKernelSpec(1, s)
        for c in (0.5, 2.0):
            ratio = scaling_check(f, c, spec, CFG, is_cache)
            worst = max(worst, abs(ratio - 1.0))
    _report("10 dilation scaling law", worst <= 0.02,
            f"max |ratio - 1| = {worst:.2e} <= 2%", t0)


def test_11_convolution_subadditivity(is_cache):
    t0 = time.time()
    f, g = Cauchy(1.0), Cauchy(2.0, validate=False)
    alphas = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]
    orders = [0.3, 0.5, 0.7, 0.9]
    min_margin = math.inf
    for s in orders:
        spec = FracKernelSpec(1, s)
        for alpha in alphas:
            slack, err = bsi_slack(f, g, alpha, spec, CFG, is_cache)
            min_margin = min(min_margin, slack + err)
    # analytic cross-check at f = g, alpha = 1/2 via Cauchy stability
    s = 0.5
    spec = FracKernelSpec(1, s)
    slack_eq, _ = bsi_slack(f, Cauchy(1.0, validate=False), 0.5, spec, CFG,
                            is_cache)
    i_s = fisher_fractional(f, spec, CFG).value
    analytic = (2.0 ** (1.0 - s) - 2.0 ** (-s)) * i_s
    rel = abs(slack_eq / analytic - 1.0)
    ok = min_margin >= 0.0 and rel <= 0.02
    _report("11 convolution subadditivity (36-point sweep)", ok,
            f"min slack+err = {min_margin:.2e} >= 0, equal-density "
            f"cross-check off by {100 * rel:.3f}% <= 2%", t0)


# -- criterion 12: divergence probe ----------------------------------------------

def test_12_gaussian_divergence_probe():
    t0 = time.time()
    radii = [4.0, 8.0, 16.0, 32.0]
    ok = True
    details = []
    for s in (0.5, 0.9):
        rec = divergence_probe(Gaussian(1.0), s, radii, CFG)
        ok &= rec.strictly_increasing and rec.increments_non_decreasing
        details.append(f"s={s}: values increase "
                       f"{rec.values[0]:.3f}..{rec.values[-1]:.3f}")
    raised = False
    try:
        fisher_fractional(Gaussian(1.0), FracKernelSpec(1, 0.5), CFG)
    except DivergenceSuspected:
        raised = True
    ok &= raised
    _report("12 Gaussian divergence probe", ok,
            "; ".join(details) + f"; DivergenceSuspected raised: {raised}", t0)


# -- criterion 13: carre du champ calculus ----------------------------------------

def test_13_gamma_calculus():
    t0 = time.time()
    op = DiffusionOperator1D.laguerre(1.0)
    ident = poly_function([0.0, 1.0], "x")
    i_single = fisher_gamma(op, ident, CFG)
    i_product = fisher_gamma_product(op, tensor_2d(ident, ident), CFG)
    g = poly_function([0.0, 0.0, 0.5], "x^2/2")
    mixture = mixture_2d([(0.5, ident, ident), (0.5, g, g)])
    slack = verify_projection_inequality(op, mixture, CFG)
    chain_resid = verify_diffusion_chain_rule(op, scalar_log, ident, g,
                                              np.linspace(0.3, 5.0, 9))
    ok = (abs(i_single - 1.0) <= 1e-6 and abs(i_product - 2.0) <= 1e-4
          and slack >= -1e-4 and chain_resid <= 1e-10)
    _report("13 carre du champ calculus", ok,
            f"i = {i_single:.8f} (1 +- 1e-6), product = {i_product:.6f} "
            f"(2 +- 1e-4), mixture slack {slack:.2e} >= -1e-4, chain rule "
            f"{chain_resid:.1e} <= 1e-10", t0)


# -- criterion 14 (optional, not gating in spirit; passes comfortably) -----------

def test_14_optional_continuous_product_identity():
    t0 = time.time()
    gap = lifted_product_identity_gap(Cauchy(1.0), FracKernelSpec(1, 0.7), CFG)
    _report("14 (optional) continuous product identity, d=1", gap <= 0.02,
            f"order-swap relative gap {gap:.2e} <= 2%", t0)
