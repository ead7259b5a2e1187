"""Finite Markov triples: Fisher information, entropy, heat flow, liftings.

A chain is a finite jump kernel together with a strictly positive reference
measure.  All functionals here are finite sums, so identities are checked at
near machine precision; the randomized samplers at the bottom drive the
property suites and the CLI.
"""
import json
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (DimensionMismatch, NegativeTime, NonPositiveDensity,
                     NotReversible, NotSymmetric, SizeOverflow)
from .kernels import (DENSE_LIMIT, FiniteKernel, WeightedMeasure,
                      generator_apply, psi_upsilon, tensorize)

DETAILED_BALANCE_TOL = 1e-10


class ChainModel:
    """Finite kernel plus weighted measure; reversibility declared then checked."""

    def __init__(self, kernel, mu, reversible=False):
        if isinstance(mu, (list, tuple, np.ndarray)):
            mu = WeightedMeasure(mu)
        if mu.n != kernel.n:
            raise DimensionMismatch("measure and kernel sizes differ")
        self.kernel = kernel
        self.mu = mu
        self.reversible = bool(reversible)
        if self.reversible:
            gap = detailed_balance_gap(kernel, mu)
            if gap > DETAILED_BALANCE_TOL:
                raise NotReversible(
                    f"detailed balance violated by {gap:.3e} (> {DETAILED_BALANCE_TOL})")

    @property
    def n(self):
        return self.kernel.n

    def generator_matrix(self):
        """Dense generator L with L[x, y] = rates[x, y], L[x, x] = -row sum."""
        L = self.kernel.dense().copy()
        np.fill_diagonal(L, -self.kernel.row_sums())
        return L

    def __repr__(self):
        return f"ChainModel(n={self.n}, reversible={self.reversible})"


def detailed_balance_gap(kernel, mu):
    """max_(x,y) |mu(x) k(x,y) - mu(y) k(y,x)|, relative to the largest flux."""
    w = mu.weights
    if kernel.n <= DENSE_LIMIT:
        flux = w[:, None] * kernel.dense()
        scale = float(flux.max())
        return float(np.abs(flux - flux.T).max()) / max(scale, 1.0)
    rows, cols, vals = kernel.coo()
    flux = {}
    for r, c, v in zip(rows, cols, vals):
        flux[(int(r), int(c))] = w[r] * v
    gap = 0.0
    scale = max(flux.values(), default=1.0)
    for (r, c), v in flux.items():
        gap = max(gap, abs(v - flux.get((c, r), 0.0)))
    return gap / max(scale, 1.0)


@dataclass(frozen=True)
class DiscreteDensity:
    """Strictly positive probability density w.r.t. the chain measure."""

    values: np.ndarray

    def __init__(self, values, mu, tol=1e-12):
        v = np.asarray(values, dtype=float)
        w = mu.weights if isinstance(mu, WeightedMeasure) else np.asarray(mu, float)
        if v.shape != w.shape:
            raise DimensionMismatch("density and measure sizes differ")
        if np.any(v <= 0.0):
            raise NonPositiveDensity("density values must be strictly positive")
        mass = float(v @ w)
        if abs(mass - 1.0) > tol:
            raise NonPositiveDensity(
                f"density mass {mass!r} deviates from 1 beyond {tol}")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class LiftedDensity:
    """Strictly positive density on the product space w.r.t. mu (x) mu.

    ``mu`` is the base (single-factor) measure; mass is checked against
    the product weights outer(mu, mu).
    """

    values: np.ndarray
    symmetric: bool

    def __init__(self, values, mu, symmetric=True, tol=1e-12):
        v = np.asarray(values, dtype=float)
        w = mu.weights if isinstance(mu, WeightedMeasure) else np.asarray(mu, float)
        n = w.size
        if v.shape != (n, n):
            raise DimensionMismatch("lifted density must be an n x n matrix")
        if np.any(v <= 0.0):
            raise NonPositiveDensity("density values must be strictly positive")
        mass = float(w @ v @ w)
        if abs(mass - 1.0) > tol:
            raise NonPositiveDensity(
                f"density mass {mass!r} deviates from 1 beyond {tol}")
        if symmetric and not np.allclose(v, v.T, rtol=0.0, atol=1e-13 * v.max()):
            raise NotSymmetric("matrix marked symmetric is not")
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "symmetric", bool(symmetric))


def density_from_values(values, mu):
    """Normalize positive values into a DiscreteDensity against mu."""
    v = np.asarray(values, dtype=float)
    w = mu.weights if isinstance(mu, WeightedMeasure) else np.asarray(mu, float)
    return DiscreteDensity(v / (v @ w), w)


def tensor_density(f, mu):
    """f (x) f as a symmetric LiftedDensity."""
    v = np.outer(f.values, f.values)
    return LiftedDensity(v, mu, symmetric=True)


def product_measure(mu):
    w = mu.weights if isinstance(mu, WeightedMeasure) else np.asarray(mu, float)
    return WeightedMeasure(np.outer(w, w).ravel())


# ---------------------------------------------------------------------------
# Functionals
# ---------------------------------------------------------------------------

def fisher_nonlocal(chain, f):
    """Nonlocal Fisher information sum_x f(x) Psi(log f)(x) mu(x) >= 0."""
    v = f.values if isinstance(f, DiscreteDensity) else np.asarray(f, float)
    if np.any(v <= 0.0):
        raise NonPositiveDensity("density must be strictly positive")
    psi = psi_upsilon(chain.kernel, np.log(v))
    return float((v * psi) @ chain.mu.weights)


def fisher_nonlocal_lifted(chain, F):
    """Fisher information of the lifted chain evaluated at a product density."""
    lifted = lift_chain(chain)
    v = F.values.ravel() if isinstance(F, LiftedDensity) else np.asarray(F, float).ravel()
    psi = psi_upsilon(lifted.kernel, np.log(v))
    return float((v * psi) @ lifted.mu.weights)


def fisher_symmetric_form(chain, f):
    """Equivalent double-sum form, valid for reversible chains.

    (1/2) sum_(x,y) (f(y) - f(x)) (log f(y) - log f(x)) rates[x, y] mu(x).
    """
    if not chain.reversible:
        raise NotReversible("symmetric form requires a reversible chain")
    v = f.values if isinstance(f, DiscreteDensity) else np.asarray(f, float)
    rows, cols, vals = chain.kernel.coo()
    lf = np.log(v)
    terms = (v[cols] - v[rows]) * (lf[cols] - lf[rows]) * vals * chain.mu.weights[rows]
    return 0.5 * float(terms.sum())


def entropy(chain, f):
    """h(f) = sum_x f(x) log f(x) mu(x); may be negative."""
    v = f.values if isinstance(f, DiscreteDensity) else np.asarray(f, float)
    return float((v * np.log(v)) @ chain.mu.weights)


def entropy_lifted(chain, F):
    v = F.values if isinstance(F, LiftedDensity) else np.asarray(F, float)
    w = chain.mu.weights
    return float(w @ (v * np.log(v)) @ w)


def heat_flow(chain, f, t):
    """P_t f = exp(t L) f; a valid density again (mass conserved, positive)."""
    if t < 0:
        raise NegativeTime("heat flow time must be nonnegative")
    v = f.values if isinstance(f, DiscreteDensity) else np.asarray(f, float)
    if t == 0:
        return DiscreteDensity(v, chain.mu)
    ft = scipy.linalg.expm(t * chain.generator_matrix()) @ v
    return DiscreteDensity(ft, chain.mu, tol=1e-9)


def dissipation_residual(chain, f, t, dt):
    """|d/dt h(P_t f) + i_k(P_t f)| via a central difference; O(dt^2).

    Requires a reversible chain (the dissipation identity assumes the
    measure is invariant and reversible).
    """
    if not chain.reversible:
        raise NotReversible("dissipation identity requires a reversible chain")
    if dt <= 0:
        raise ValueError("dt must be positive")
    L = chain.generator_matrix()
    v = f.values if isinstance(f, DiscreteDensity) else np.asarray(f, float)
    vt = scipy.linalg.expm(t * L) @ v if t > 0 else v.copy()
    step = scipy.linalg.expm(dt * L)
    back = scipy.linalg.expm(-dt * L)
    v_plus = step @ vt
    v_minus = back @ vt
    if np.any(v_plus <= 0) or np.any(v_minus <= 0):
        raise NonPositiveDensity("flow left the positive cone; reduce dt")
    w = chain.mu.weights
    h_plus = float((v_plus * np.log(v_plus)) @ w)
    h_minus = float((v_minus * np.log(v_minus)) @ w)
    dh = (h_plus - h_minus) / (2.0 * dt)
    return abs(dh + fisher_nonlocal(chain, DiscreteDensity(vt, w, tol=1e-8)))


def lift_chain(chain):
    """Product chain: kernel k (+) k with measure mu (x) mu.

    Cached on the chain, since the randomized suites lift the same chain
    for thousands of product densities.
    """
    cached = getattr(chain, "_lifted", None)
    if cached is None:
        kk = tensorize(chain.kernel, chain.kernel)
        if kk.n > DENSE_LIMIT ** 2:
            raise SizeOverflow("lifted chain too large")
        cached = ChainModel(kk, product_measure(chain.mu),
                            reversible=chain.reversible)
        chain._lifted = cached
    return cached


def project(F, mu):
    """One-sided marginal of a symmetric lifted density against mu."""
    if not F.symmetric:
        raise NotSymmetric("projection is only well defined for symmetric F")
    w = mu.weights if isinstance(mu, WeightedMeasure) else np.asarray(mu, float)
    return DiscreteDensity(F.values @ w, w, tol=1e-9)


def verify_lifting_identity(chain, f):
    """|i(lifted chain, f (x) f) - 2 i(chain, f)|; zero for any chain and f."""
    lifted_val = fisher_nonlocal_lifted(chain, tensor_density(f, chain.mu))
    return abs(lifted_val - 2.0 * fisher_nonlocal(chain, f))


def verify_lifting_inequality(chain, F):
    """Slack i(lifted chain, F) - 2 i(chain, proj F) >= 0 for symmetric F."""
    if not F.symmetric:
        raise NotSymmetric("lifting inequality needs symmetric F")
    lifted_val = fisher_nonlocal_lifted(chain, F)
    proj_val = fisher_nonlocal(chain, project(F, chain.mu))
    return lifted_val - 2.0 * proj_val


def verify_entropy_lifting(chain, f, F):
    """(identity residual, inequality slack) for the product-space entropy.

    The identity is H(f (x) f) = 2 h(f); the slack H(F) - 2 h(proj F) equals
    the mutual information of the coupling F, hence is nonnegative.
    """
    ident = abs(entropy_lifted(chain, tensor_density(f, chain.mu))
                - 2.0 * entropy(chain, f))
    slack = entropy_lifted(chain, F) - 2.0 * entropy(chain, project(F, chain.mu))
    return ident, slack


def covariance_functional(F, chain, coords=None):
    """Squared covariance of the coupling F under a state embedding.

    Vanishes on product densities, is nonnegative, and is invariant under
    transposition of F; adding it to any lifting yields another lifting.
    """
    v = F.values if isinstance(F, LiftedDensity) else np.asarray(F, float)
    w = chain.mu.weights
    c = np.arange(chain.n, dtype=float) if coords is None else np.asarray(coords, float)
    cw = c * w
    cross = float(cw @ v @ cw)
    m1 = float(cw @ (v @ w))
    m2 = float((w @ v) @ cw)
    return (cross - m1 * m2) ** 2


# ---------------------------------------------------------------------------
# Randomized instances (drive the property suites and the CLI)
# ---------------------------------------------------------------------------

def sample_reversible_chain(rng, n, sparsity=0.0, normalize_activity=False):
    """Random reversible chain: symmetric positive flux S, rates k = S / mu.

    ``normalize_activity`` rescales rates so the largest total jump rate is
    one; finite-difference checks of the dissipation identity use this to
    keep higher entropy derivatives desk-scale.
    """
    S = rng.uniform(0.2, 2.0, size=(n, n))
    S = 0.5 * (S + S.T)
    if sparsity > 0.0:
        mask = rng.uniform(size=(n, n)) < sparsity
        mask = np.triu(mask, 1)
        mask = mask | mask.T
        S[mask] = 0.0
    np.fill_diagonal(S, 0.0)
    mu = rng.uniform(0.3, 3.0, size=n)
    rates = S / mu[:, None]
    if normalize_activity:
        rates = rates / rates.sum(axis=1).max()
    return ChainModel(FiniteKernel(rates), WeightedMeasure(mu), reversible=True)


def sample_density(rng, chain, min_fisher=0.0):
    """Random strictly positive density; optionally reject near-flat draws."""
    for _ in range(100):
        f = density_from_values(rng.uniform(0.1, 2.0, size=chain.n), chain.mu)
        if min_fisher <= 0.0 or fisher_nonlocal(chain, f) >= min_fisher:
            return f
    return f


def sample_symmetric_lifted(rng, chain):
    """I.i.d. positive entries, symmetrized by averaging, then normalized."""
    v = rng.uniform(0.1, 2.0, size=(chain.n, chain.n))
    v = 0.5 * (v + v.T)
    w = chain.mu.weights
    v /= float(w @ v @ w)
    return LiftedDensity(v, chain.mu, symmetric=True)


# ---------------------------------------------------------------------------
# Chain JSON interface: {"n": int, "rates": [[...]], "mu": [...]}
# ---------------------------------------------------------------------------

def chain_to_json(chain):
    return {"n": chain.n,
            "rates": chain.kernel.dense().tolist(),
            "mu": chain.mu.weights.tolist()}


def chain_from_json(obj, reversible=None):
    rates = np.asarray(obj["rates"], dtype=float)
    if int(obj.get("n", rates.shape[0])) != rates.shape[0]:
        raise DimensionMismatch("declared n disagrees with the rates matrix")
    kernel = FiniteKernel(rates)
    mu = WeightedMeasure(obj["mu"])
    if reversible is None:
        reversible = detailed_balance_gap(kernel, mu) <= DETAILED_BALANCE_TOL
    return ChainModel(kernel, mu, reversible=reversible)


def load_chains(path):
    with open(path) as fh:
        data = json.load(fh)
    if isinstance(data, dict):
        data = data.get("chains", [data])
    return [chain_from_json(obj) for obj in data]
