import json
import math

import numpy as np
import pytest

from nlfisher.errors import (NegativeTime, NonPositiveDensity, NotReversible,
                             NotSymmetric)
from nlfisher.kernels import FiniteKernel, WeightedMeasure
from nlfisher.markov import (ChainModel, DiscreteDensity, LiftedDensity,
                             chain_from_json, chain_to_json,
                             covariance_functional, density_from_values,
                             detailed_balance_gap, dissipation_residual,
                             entropy, entropy_lifted, fisher_nonlocal,
                             fisher_nonlocal_lifted, fisher_symmetric_form,
                             heat_flow, lift_chain, load_chains, project,
                             sample_density, sample_reversible_chain,
                             sample_symmetric_lifted, tensor_density,
                             verify_entropy_lifting, verify_lifting_identity,
                             verify_lifting_inequality)

MU = WeightedMeasure([1.0, 1.0])
CHAIN = ChainModel(FiniteKernel([[0.0, 1.0], [1.0, 0.0]]), MU, reversible=True)
F_HAND = DiscreteDensity([0.75, 0.25], MU)


def test_density_validation():
    with pytest.raises(NonPositiveDensity):
        DiscreteDensity([1.0, 0.0], MU)
    with pytest.raises(NonPositiveDensity):
        DiscreteDensity([0.9, 0.2], MU)  # mass 1.1
    f = density_from_values([3.0, 1.0], MU)
    assert float(f.values @ MU.weights) == pytest.approx(1.0, abs=1e-15)


def test_reversibility_validated_not_assumed():
    with pytest.raises(NotReversible):
        ChainModel(FiniteKernel([[0.0, 2.0], [1.0, 0.0]]), MU, reversible=True)
    # same kernel is fine when not declared reversible
    ChainModel(FiniteKernel([[0.0, 2.0], [1.0, 0.0]]), MU, reversible=False)


def test_fisher_hand_value():
    assert fisher_nonlocal(CHAIN, F_HAND) == pytest.approx(0.5 * math.log(3.0),
                                                           abs=1e-14)


def test_fisher_zero_on_constant():
    assert fisher_nonlocal(CHAIN, DiscreteDensity([0.5, 0.5], MU)) == 0.0


def test_fisher_zero_iff_flat_on_edges():
    # disconnected pair: density may differ across components at zero cost
    mu = WeightedMeasure([1.0, 1.0, 1.0, 1.0])
    rates = np.zeros((4, 4))
    rates[0, 1] = rates[1, 0] = 1.0
    rates[2, 3] = rates[3, 2] = 1.0
    chain = ChainModel(FiniteKernel(rates), mu, reversible=True)
    f = density_from_values([1.0, 1.0, 3.0, 3.0], mu)
    assert fisher_nonlocal(chain, f) == pytest.approx(0.0, abs=1e-15)
    g = density_from_values([1.0, 2.0, 1.0, 1.0], mu)
    assert fisher_nonlocal(chain, g) > 1e-3


def test_symmetric_form_matches():
    assert fisher_symmetric_form(CHAIN, F_HAND) == pytest.approx(
        fisher_nonlocal(CHAIN, F_HAND), abs=1e-14)
    rng = np.random.default_rng(1)
    for _ in range(100):
        chain = sample_reversible_chain(rng, int(rng.integers(2, 6)))
        f = sample_density(rng, chain)
        assert fisher_symmetric_form(chain, f) == pytest.approx(
            fisher_nonlocal(chain, f), abs=1e-12, rel=1e-12)


def test_symmetric_form_requires_reversible():
    chain = ChainModel(FiniteKernel([[0.0, 2.0], [1.0, 0.0]]), MU)
    with pytest.raises(NotReversible):
        fisher_symmetric_form(chain, F_HAND)


def test_entropy_values():
    assert entropy(CHAIN, DiscreteDensity([0.5, 0.5], MU)) == pytest.approx(
        -math.log(2.0), abs=1e-15)
    assert entropy(CHAIN, F_HAND) == pytest.approx(
        0.75 * math.log(0.75) + 0.25 * math.log(0.25), abs=1e-15)
    # concentrating density: entropy approaches 0 from below
    eps = 1e-6
    f = density_from_values([1.0 - eps, eps], MU)
    assert -1e-4 < entropy(CHAIN, f) < 0.0


def test_heat_flow():
    assert heat_flow(CHAIN, F_HAND, 0.0).values == pytest.approx([0.75, 0.25])
    ft = heat_flow(CHAIN, F_HAND, 0.5 * math.log(2.0))
    assert ft.values == pytest.approx([0.625, 0.375], abs=1e-12)
    # spectral closed form: eigenvalues {0, -2}
    for t in (0.3, 1.0, 4.0):
        ft = heat_flow(CHAIN, F_HAND, t)
        expected = np.array([0.5 + 0.25 * math.exp(-2 * t),
                             0.5 - 0.25 * math.exp(-2 * t)])
        assert ft.values == pytest.approx(expected, abs=1e-12)
    with pytest.raises(NegativeTime):
        heat_flow(CHAIN, F_HAND, -0.1)


def test_heat_flow_uniformization_oracle():
    # P_t = e^{-lam t} sum_k (lam t)^k / k! (I + L/lam)^k
    rng = np.random.default_rng(3)
    chain = sample_reversible_chain(rng, 4)
    f = sample_density(rng, chain)
    t = 0.7
    L = chain.generator_matrix()
    lam = float(chain.kernel.row_sums().max()) * 1.5
    P = np.eye(4)
    term = np.eye(4)
    for k in range(1, 80):
        term = term @ (np.eye(4) + L / lam) * (lam * t / k)
        P = P + term
    ref = math.exp(-lam * t) * (P @ f.values)
    assert heat_flow(chain, f, t).values == pytest.approx(ref, abs=1e-12)


def test_mass_conservation_and_entropy_monotone():
    rng = np.random.default_rng(5)
    chain = sample_reversible_chain(rng, 5)
    f = sample_density(rng, chain)
    previous = np.inf
    for t in np.linspace(0.0, 10.0, 21):
        ft = heat_flow(chain, f, float(t))
        assert abs(float(ft.values @ chain.mu.weights) - 1.0) <= 1e-10
        h = entropy(chain, ft)
        assert h <= previous + 1e-12
        previous = h


def test_dissipation_residual_hand_chain():
    res = dissipation_residual(CHAIN, F_HAND, 0.0, 1e-4)
    assert res <= 1e-6
    # the derivative itself equals the Fisher information
    dt = 1e-5
    h_p = entropy(CHAIN, heat_flow(CHAIN, F_HAND, dt))
    h_0 = entropy(CHAIN, F_HAND)
    assert (h_p - h_0) / dt == pytest.approx(-0.5 * math.log(3.0), abs=1e-4)


def test_dissipation_second_order():
    rng = np.random.default_rng(8)
    ratios = []
    for _ in range(20):
        chain = sample_reversible_chain(rng, 4, normalize_activity=True)
        f = sample_density(rng, chain, min_fisher=1e-2)
        r1 = dissipation_residual(chain, f, 0.5, 1e-3)
        r2 = dissipation_residual(chain, f, 0.5, 5e-4)
        if r2 > 1e-13:
            ratios.append(r1 / r2)
    assert 3.2 <= float(np.median(ratios)) <= 4.8


def test_dissipation_requires_reversible():
    chain = ChainModel(FiniteKernel([[0.0, 2.0], [1.0, 0.0]]), MU)
    with pytest.raises(NotReversible):
        dissipation_residual(chain, F_HAND, 0.0, 1e-4)


def test_lift_chain_structure():
    lifted = lift_chain(CHAIN)
    assert lifted.n == 4 and lifted.reversible
    assert np.array_equal(lifted.mu.weights, np.ones(4))
    mu12 = WeightedMeasure([1.0, 2.0])
    chain12 = ChainModel(FiniteKernel([[0.0, 1.0], [0.5, 0.0]]), mu12,
                         reversible=True)
    assert lift_chain(chain12).mu.weights == pytest.approx([1.0, 2.0, 2.0, 4.0])
    assert detailed_balance_gap(lift_chain(chain12).kernel,
                                lift_chain(chain12).mu) <= 1e-14
    assert lift_chain(chain12) is lift_chain(chain12)  # cached


def test_projection():
    rng = np.random.default_rng(2)
    chain = sample_reversible_chain(rng, 4)
    f = sample_density(rng, chain)
    proj = project(tensor_density(f, chain.mu), chain.mu)
    assert proj.values == pytest.approx(f.values, abs=1e-13)
    uniform = density_from_values(np.ones(4), chain.mu)
    proj_u = project(tensor_density(uniform, chain.mu), chain.mu)
    assert proj_u.values == pytest.approx(uniform.values, abs=1e-13)
    F = sample_symmetric_lifted(rng, chain)
    brute = F.values @ chain.mu.weights
    assert project(F, chain.mu).values == pytest.approx(brute, abs=1e-14)
    with pytest.raises(NotSymmetric):
        asym = F.values.copy()
        asym[0, 1] *= 2.0
        asym /= float(chain.mu.weights @ asym @ chain.mu.weights)
        project(LiftedDensity(asym, chain.mu, symmetric=False), chain.mu)


def test_lifting_identity_hand_value():
    assert fisher_nonlocal_lifted(CHAIN, tensor_density(F_HAND, MU)) \
        == pytest.approx(math.log(3.0), abs=1e-13)
    assert verify_lifting_identity(CHAIN, F_HAND) <= 1e-13


def test_lifting_inequality_cases():
    rng = np.random.default_rng(4)
    chain = sample_reversible_chain(rng, 3)
    f = sample_density(rng, chain)
    assert verify_lifting_inequality(chain, tensor_density(f, chain.mu)) \
        == pytest.approx(0.0, abs=1e-12)
    g = sample_density(rng, chain)
    mix = 0.5 * (np.outer(f.values, f.values) + np.outer(g.values, g.values))
    w = chain.mu.weights
    mix /= float(w @ mix @ w)
    slack = verify_lifting_inequality(chain, LiftedDensity(mix, chain.mu))
    assert slack > 1e-8  # strict for genuinely mixed F


def test_entropy_lifting():
    ident, slack = verify_entropy_lifting(
        CHAIN, DiscreteDensity([0.5, 0.5], MU),
        tensor_density(DiscreteDensity([0.5, 0.5], MU), MU))
    assert ident <= 1e-15 and abs(slack) <= 1e-15
    assert entropy_lifted(CHAIN, tensor_density(DiscreteDensity([0.5, 0.5], MU), MU)) \
        == pytest.approx(-2.0 * math.log(2.0), abs=1e-14)
    rng = np.random.default_rng(6)
    for _ in range(200):
        chain = sample_reversible_chain(rng, 3)
        f = sample_density(rng, chain)
        F = sample_symmetric_lifted(rng, chain)
        ident, slack = verify_entropy_lifting(chain, f, F)
        assert ident <= 1e-12
        assert slack >= -1e-10


def test_covariance_functional():
    rng = np.random.default_rng(7)
    chain = sample_reversible_chain(rng, 3)
    f = sample_density(rng, chain)
    assert covariance_functional(tensor_density(f, chain.mu), chain) \
        == pytest.approx(0.0, abs=1e-20)
    # diagonal-concentrated coupling has positive squared covariance
    w = chain.mu.weights
    diag = np.diag(1.0 / w ** 2) + 1e-9
    diag /= float(w @ diag @ w)
    F = LiftedDensity(diag, chain.mu)
    assert covariance_functional(F, chain) > 1e-4
    Ft = LiftedDensity(F.values.T, chain.mu)
    assert covariance_functional(F, chain) == covariance_functional(Ft, chain)
    assert covariance_functional(F, chain, coords=[0.0, 1.0, 2.0]) \
        == covariance_functional(F, chain)


def test_chain_json_roundtrip(tmp_path):
    rng = np.random.default_rng(12)
    chain = sample_reversible_chain(rng, 4)
    payload = [chain_to_json(chain), chain_to_json(sample_reversible_chain(rng, 3))]
    path = tmp_path / "chains.json"
    path.write_text(json.dumps(payload))
    loaded = load_chains(path)
    assert len(loaded) == 2
    assert loaded[0].reversible
    assert np.allclose(loaded[0].kernel.dense(), chain.kernel.dense())
    assert np.allclose(loaded[0].mu.weights, chain.mu.weights)
    single = chain_from_json(payload[0])
    assert single.n == 4


def test_randomized_lifting_suites_short():
    rng = np.random.default_rng(2024)
    worst_ident = 0.0
    worst_slack = np.inf
    for _ in range(300):
        chain = sample_reversible_chain(rng, int(rng.integers(2, 6)))
        f = sample_density(rng, chain)
        worst_ident = max(worst_ident, verify_lifting_identity(chain, f))
        F = sample_symmetric_lifted(rng, chain)
        worst_slack = min(worst_slack, verify_lifting_inequality(chain, F))
    assert worst_ident <= 1e-10
    assert worst_slack >= -1e-10
