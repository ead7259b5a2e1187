"""Discrete jump-kernel algebra: generator, Upsilon operator, tensorization.

Everything here is exact in floating point; no quadrature is involved.
Kernels are stored dense up to ``DENSE_LIMIT`` states and as a coordinate
list above, which matches the structural sparsity of tensorized kernels.
"""
from dataclasses import dataclass

import numpy as np

from .core import upsilon
from .errors import DimensionMismatch, NonPositiveInput, Overflow, SizeOverflow

DENSE_LIMIT = 64
MAX_PRODUCT_STATES = 16384
EXP_ARG_LIMIT = 700.0  # exp overflows double just above this


class FiniteKernel:
    """Nonnegative jump rates over a finite state set, zero diagonal.

    ``rates[i, j]`` is the rate of jumping from state i to state j != i.
    """

    def __init__(self, rates=None, *, n=None, coo=None):
        if rates is not None:
            rates = np.asarray(rates, dtype=float)
            if rates.ndim != 2 or rates.shape[0] != rates.shape[1]:
                raise DimensionMismatch("rates must be a square matrix")
            if np.any(np.diagonal(rates) != 0.0):
                raise ValueError("diagonal rates must be zero")
            if np.any(rates < 0.0):
                raise ValueError("rates must be nonnegative")
            self.n = rates.shape[0]
            rows, cols = np.nonzero(rates)
            self._rows = rows.astype(np.int64)
            self._cols = cols.astype(np.int64)
            self._vals = rates[rows, cols]
            self._dense = rates if self.n <= DENSE_LIMIT else None
        else:
            rows, cols, vals = coo
            self.n = int(n)
            rows = np.asarray(rows, dtype=np.int64)
            cols = np.asarray(cols, dtype=np.int64)
            vals = np.asarray(vals, dtype=float)
            if rows.shape != cols.shape or rows.shape != vals.shape:
                raise DimensionMismatch("coo arrays must have equal length")
            if np.any(rows == cols):
                raise ValueError("diagonal rates must be zero")
            if np.any(vals < 0.0):
                raise ValueError("rates must be nonnegative")
            order = np.lexsort((cols, rows))
            self._rows, self._cols, self._vals = rows[order], cols[order], vals[order]
            self._dense = None
            if self.n <= DENSE_LIMIT:
                dense = np.zeros((self.n, self.n))
                dense[self._rows, self._cols] = self._vals
                self._dense = dense
        self._row_sums = np.bincount(self._rows, weights=self._vals,
                                     minlength=self.n)

    @property
    def nnz(self):
        return self._vals.size

    def dense(self):
        if self._dense is None:
            raise SizeOverflow(
                f"dense representation only kept up to {DENSE_LIMIT} states")
        return self._dense

    def coo(self):
        return self._rows, self._cols, self._vals

    def row_sums(self):
        return self._row_sums

    def __repr__(self):
        return f"FiniteKernel(n={self.n}, nnz={self.nnz})"


@dataclass(frozen=True)
class WeightedMeasure:
    """Strictly positive weights mu({x}) over a finite state set."""

    weights: np.ndarray

    def __init__(self, weights):
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1:
            raise DimensionMismatch("weights must be a vector")
        if np.any(w <= 0.0):
            raise NonPositiveInput("measure weights must be strictly positive")
        object.__setattr__(self, "weights", w)

    @property
    def n(self):
        return self.weights.size


@dataclass(frozen=True)
class ProductIndex:
    """Flat indexing of the product state set: (i, j) <-> i*m + j."""

    n: int
    m: int

    def encode(self, i, j):
        return i * self.m + j

    def decode(self, flat):
        return divmod(flat, self.m)


def _check_vector(k, f, name="f"):
    f = np.asarray(f, dtype=float)
    if f.shape != (k.n,):
        raise DimensionMismatch(f"{name} must have length {k.n}")
    return f


def generator_apply(k, f):
    """Apply the jump generator: (Lf)(x) = sum_y (f(y) - f(x)) rates[x, y]."""
    f = _check_vector(k, f)
    rows, cols, vals = k.coo()
    flux = np.bincount(rows, weights=vals * (f[cols] - f[rows]), minlength=k.n)
    return flux


def psi_upsilon(k, g):
    """Upsilon operator: sum_y Upsilon(g(y) - g(x)) rates[x, y], entrywise >= 0.

    Raises ``Overflow`` when a difference exceeds the exp overflow bound,
    which signals an ill-scaled input rather than silently returning inf.
    """
    g = _check_vector(k, g, "g")
    rows, cols, vals = k.coo()
    diffs = g[cols] - g[rows]
    if diffs.size and float(diffs.max()) > EXP_ARG_LIMIT:
        raise Overflow(
            f"log-ratio difference exceeds {EXP_ARG_LIMIT}; input is ill-scaled")
    return np.bincount(rows, weights=vals * upsilon(diffs), minlength=k.n)


def tensorize(k1, k2):
    """Product kernel jumping one coordinate at a time.

    The rate from (i, j) to (i', j') is k1[i, i'] when j = j', k2[j, j']
    when i = i', and zero otherwise (simultaneous double jumps never occur).
    """
    n, m = k1.n, k2.n
    if n * m > MAX_PRODUCT_STATES:
        raise SizeOverflow(
            f"product state space {n * m} exceeds limit {MAX_PRODUCT_STATES}")
    r1, c1, v1 = k1.coo()
    r2, c2, v2 = k2.coo()
    j = np.arange(m)
    # first-coordinate jumps: (i, j) -> (i', j) for every j
    rows_a = (r1[:, None] * m + j[None, :]).ravel()
    cols_a = (c1[:, None] * m + j[None, :]).ravel()
    vals_a = np.repeat(v1, m)
    i = np.arange(n)
    # second-coordinate jumps: (i, j) -> (i, j') for every i
    rows_b = (i[:, None] * m + r2[None, :]).ravel()
    cols_b = (i[:, None] * m + c2[None, :]).ravel()
    vals_b = np.tile(v2, n)
    return FiniteKernel(n=n * m,
                        coo=(np.concatenate([rows_a, rows_b]),
                             np.concatenate([cols_a, cols_b]),
                             np.concatenate([vals_a, vals_b])))


def verify_sum_formula(k1, k2, f, point):
    """Residuals of the product-kernel sum formulas at one product state.

    Checks that the tensorized kernel reproduces (i) the generator acting
    coordinate-wise on sections and (ii) the same additivity for the Upsilon
    operator.  Returns ``(generator_residual, upsilon_residual)``.
    """
    n, m = k1.n, k2.n
    idx = ProductIndex(n, m)
    i, j = point
    f = np.asarray(f, dtype=float)
    if f.shape == (n, m):
        f = f.ravel()
    if f.shape != (n * m,):
        raise DimensionMismatch("f must be an (n*m)-vector or n x m matrix")
    kk = tensorize(k1, k2)
    flat = idx.encode(i, j)
    grid = f.reshape(n, m)
    section_y = grid[:, j]  # f^y: vary first coordinate
    section_x = grid[i, :]  # f_x: vary second coordinate
    lhs_gen = generator_apply(kk, f)[flat]
    rhs_gen = generator_apply(k1, section_y)[i] + generator_apply(k2, section_x)[j]
    lhs_psi = psi_upsilon(kk, f)[flat]
    rhs_psi = psi_upsilon(k1, section_y)[i] + psi_upsilon(k2, section_x)[j]
    return abs(lhs_gen - rhs_gen), abs(lhs_psi - rhs_psi)


def key_inequality_slack(k, H, f, nu, x):
    """Slack of the averaging inequality for the Upsilon operator at state x.

    With Pf(x) = sum_y H(x, y) f(y) nu(y), returns

        sum_y Psi(log H(., y))(x) H(x, y) f(y) nu(y) - Psi(log Pf)(x) Pf(x),

    which is nonnegative (a convexity property of a |-> a * Upsilon(log b/a)).
    """
    H = np.asarray(H, dtype=float)
    f = np.asarray(f, dtype=float)
    nu = nu.weights if isinstance(nu, WeightedMeasure) else np.asarray(nu, dtype=float)
    if H.ndim != 2 or H.shape[0] != k.n:
        raise DimensionMismatch("H must be an n x m matrix")
    m = H.shape[1]
    if f.shape != (m,) or nu.shape != (m,):
        raise DimensionMismatch("f and nu must have length m")
    if np.any(H <= 0.0) or np.any(f <= 0.0) or np.any(nu <= 0.0):
        raise NonPositiveInput("H, f and nu must be strictly positive")
    G = np.log(H)
    rows, cols, vals = k.coo()
    # Psi(log H(., y))(x) for every column y at the single state x
    at_x = rows == x
    jj, vv = cols[at_x], vals[at_x]
    psi_cols = (vv[:, None] * upsilon(G[jj, :] - G[x, :][None, :])).sum(axis=0)
    Pf = H @ (f * nu)
    log_Pf = np.log(Pf)
    psi_P = float((vv * upsilon(log_Pf[jj] - log_Pf[x])).sum())
    lhs = float((psi_cols * H[x, :] * f * nu).sum())
    return lhs - psi_P * Pf[x]
