"""Carre du champ calculus for two 1-d diffusion operators.

Covers the Laguerre operator on (0, inf) and the Jacobi operator on (-1, 1),
their weighted Fisher information, the product-space counterpart, the tensor
identity at product densities, the projection inequality and the diffusion
chain rule.  Test functions carry hand-coded derivatives so identity
residuals measure arithmetic only, never finite differencing.
"""
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np
from scipy.special import gammaln

from .errors import BoundaryBlowup, NonConverged, OutOfDomain
from .quadrature import (QuadConfig, StretchedExpTail, integrate_1d,
                         integrate_tail)

__all__ = [
    "DiffusionOperator1D", "SmoothTestFunction", "ScalarMap",
    "Smooth2DFunction", "carre_du_champ", "carre_du_champ_bracket",
    "measure_mass", "fisher_gamma", "fisher_gamma_product", "verify_tensor_identity",
    "verify_projection_inequality", "projection_pointwise_gap",
    "verify_diffusion_chain_rule", "poly_function", "exp_poly_function",
    "compose", "product_function", "tensor_2d", "mixture_2d",
    "scalar_identity", "scalar_log", "scalar_square",
]


@dataclass(frozen=True)
class DiffusionOperator1D:
    """A second-order operator a(x) f'' + b(x) f' with carre du champ a f' g'.

    ``weight`` is the density of the invariant probability measure; the
    drift is determined by reversibility, b = a' + a (log w)'.
    """

    kind: str
    alpha: float
    beta: Optional[float]
    domain: tuple

    @classmethod
    def laguerre(cls, alpha):
        if alpha <= 0:
            raise ValueError("alpha must be positive")
        return cls("laguerre", float(alpha), None, (0.0, math.inf))

    @classmethod
    def jacobi(cls, alpha, beta):
        if alpha <= 0 or beta <= 0:
            raise ValueError("alpha and beta must be positive")
        return cls("jacobi", float(alpha), float(beta), (-1.0, 1.0))

    def gamma_coeff(self, x):
        x = np.asarray(x, dtype=float)
        return x if self.kind == "laguerre" else 1.0 - x * x

    def drift(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "laguerre":
            return self.alpha - x
        return self.beta - self.alpha - (self.alpha + self.beta) * x

    def weight(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "laguerre":
            return np.exp((self.alpha - 1.0) * np.log(x) - x - gammaln(self.alpha))
        log_norm = ((self.alpha + self.beta - 1.0) * math.log(2.0)
                    + gammaln(self.alpha) + gammaln(self.beta)
                    - gammaln(self.alpha + self.beta))
        # skip vanishing exponents so 0 * log(0) cannot produce NaN
        t_left = (np.zeros_like(x) if self.alpha == 1.0
                  else (self.alpha - 1.0) * np.log1p(-x))
        t_right = (np.zeros_like(x) if self.beta == 1.0
                   else (self.beta - 1.0) * np.log1p(x))
        return np.exp(t_left + t_right - log_norm)

    def apply(self, f, x):
        """L f = a f'' + b f' pointwise, using the function's derivatives."""
        x = np.asarray(x, dtype=float)
        return self.gamma_coeff(x) * f.d2(x) + self.drift(x) * f.d1(x)

    def check_in_domain(self, x):
        lo, hi = self.domain
        x = np.asarray(x, dtype=float)
        if np.any(x <= lo) or np.any(x >= hi):
            raise OutOfDomain(f"point outside the open domain ({lo}, {hi})")


@dataclass(frozen=True)
class SmoothTestFunction:
    """Value and first two derivatives as closures; d2 may be None for
    quadrature-backed functions that are only ever differentiated once."""

    value: Callable
    d1: Callable
    d2: Optional[Callable] = None
    name: str = ""


@dataclass(frozen=True)
class ScalarMap:
    """Smooth scalar reparameterization Phi with its derivatives."""

    value: Callable
    d1: Callable
    d2: Callable
    name: str = ""


scalar_identity = ScalarMap(lambda r: r, lambda r: np.ones_like(np.asarray(r, float)),
                            lambda r: np.zeros_like(np.asarray(r, float)), "id")
scalar_log = ScalarMap(np.log, lambda r: 1.0 / np.asarray(r, float),
                       lambda r: -1.0 / np.asarray(r, float) ** 2, "log")
scalar_square = ScalarMap(lambda r: np.asarray(r, float) ** 2,
                          lambda r: 2.0 * np.asarray(r, float),
                          lambda r: np.full_like(np.asarray(r, float), 2.0), "square")


def poly_function(coeffs, name=""):
    """Polynomial sum c_k x^k with exact derivatives."""
    c = np.asarray(coeffs, dtype=float)
    dc = c[1:] * np.arange(1, c.size)
    ddc = dc[1:] * np.arange(1, dc.size)

    def horner(cs, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        for a in cs[::-1]:
            out = out * x + a
        return out

    return SmoothTestFunction(lambda x: horner(c, x), lambda x: horner(dc, x),
                              lambda x: horner(ddc, x), name or f"poly{list(c)}")


def exp_poly_function(coeffs, name=""):
    """exp(p(x)) for a polynomial p; derivatives via the chain rule."""
    p = poly_function(coeffs)

    def val(x):
        return np.exp(p.value(x))

    return SmoothTestFunction(
        val,
        lambda x: val(x) * p.d1(x),
        lambda x: val(x) * (p.d1(x) ** 2 + p.d2(x)),
        name or "exp_poly")


def compose(phi, f, name=""):
    """Phi(f) with chain-rule derivatives."""
    return SmoothTestFunction(
        lambda x: phi.value(f.value(x)),
        lambda x: phi.d1(f.value(x)) * f.d1(x),
        lambda x: phi.d2(f.value(x)) * f.d1(x) ** 2 + phi.d1(f.value(x)) * f.d2(x),
        name or f"{phi.name}({f.name})")


def product_function(f, g):
    return SmoothTestFunction(
        lambda x: f.value(x) * g.value(x),
        lambda x: f.d1(x) * g.value(x) + f.value(x) * g.d1(x),
        lambda x: f.d2(x) * g.value(x) + 2.0 * f.d1(x) * g.d1(x) + f.value(x) * g.d2(x),
        f"{f.name}*{g.name}")


@dataclass(frozen=True)
class Smooth2DFunction:
    """Positive function on domain^2 with both first partials."""

    value: Callable
    dx: Callable
    dy: Callable
    name: str = ""


def tensor_2d(f, g):
    return Smooth2DFunction(
        lambda x, y: f.value(x) * g.value(y),
        lambda x, y: f.d1(x) * g.value(y),
        lambda x, y: f.value(x) * g.d1(y),
        f"{f.name}(x){g.name}")


def mixture_2d(weighted_pairs):
    """sum_k w_k f_k(x) g_k(y); symmetric when each pair appears both ways."""

    def value(x, y):
        return sum(w * f.value(x) * g.value(y) for w, f, g in weighted_pairs)

    def dx(x, y):
        return sum(w * f.d1(x) * g.value(y) for w, f, g in weighted_pairs)

    def dy(x, y):
        return sum(w * f.value(x) * g.d1(y) for w, f, g in weighted_pairs)

    return Smooth2DFunction(value, dx, dy, "mixture")


# ---------------------------------------------------------------------------
# Carre du champ
# ---------------------------------------------------------------------------

def carre_du_champ(op, f, g, x):
    """Gamma(f, g)(x) = a(x) f'(x) g'(x), the closed form for diffusions."""
    op.check_in_domain(x)
    return op.gamma_coeff(x) * f.d1(x) * g.d1(x)


def carre_du_champ_bracket(op, f, g, x):
    """Defining bracket (L(fg) - g Lf - f Lg)/2 with the closed-form L."""
    op.check_in_domain(x)
    fg = product_function(f, g)
    return 0.5 * (op.apply(fg, x) - g.value(x) * op.apply(f, x)
                  - f.value(x) * op.apply(g, x))


# ---------------------------------------------------------------------------
# Weighted Fisher information
# ---------------------------------------------------------------------------

def _endpoint_blowup_probe(op, integrand):
    """Raise when the integrand grows non-integrably toward an endpoint."""
    lo, hi = op.domain
    checks = [(lo, 1.0)] if op.kind == "laguerre" else [(-1.0, 1.0), (1.0, -1.0)]
    for anchor, direction in checks:
        eps = np.array([1e-4, 1e-6, 1e-8])
        xs = anchor + direction * eps
        vals = np.abs(np.asarray(integrand(xs), dtype=float))
        if np.all(vals > 0.0):
            slope = np.polyfit(np.log(eps), np.log(vals), 1)[0]
            if slope <= -1.0 + 1e-3:
                raise BoundaryBlowup(
                    f"integrand grows like distance^{slope:.2f} near {anchor}; "
                    "not integrable under tolerance probing")


def _measure_integral(op, integrand, cfg, probe_blowup=False):
    """Integral of integrand(x) (already including the weight) over the domain."""
    if probe_blowup:
        _endpoint_blowup_probe(op, integrand)
    if op.kind == "laguerre":
        split = 8.0 + 4.0 * op.alpha
        head = integrate_1d(integrand, 0.0, split, cfg, singular=("left",))
        tail = integrate_tail(integrand, split,
                              replace(cfg, tail_model=StretchedExpTail(1.0, 1.0)))
        return head + tail
    return integrate_1d(integrand, -1.0, 1.0, cfg, singular=("left", "right"))


def measure_mass(op, f, cfg=None):
    """int f dmu, used to validate density normalization."""
    cfg = cfg or QuadConfig()
    res = _measure_integral(op, lambda x: f.value(x) * op.weight(x), cfg)
    return res.value


def fisher_gamma(op, f, cfg=None, form="quotient", check_normalization=True):
    """Weighted Fisher information int Gamma(f)/f dmu (= int f Gamma(log f) dmu).

    ``form`` picks the arithmetic: "quotient" computes a f'^2 / f, "log"
    computes f a (f'/f)^2; both are pointwise equal by the diffusion
    property, so their agreement is a useful consistency check.
    """
    cfg = cfg or QuadConfig()
    if check_normalization:
        mass = measure_mass(op, f, cfg)
        if abs(mass - 1.0) > 1e-6:
            raise ValueError(f"test density has mass {mass!r}, expected 1")

    # where the density underflows to zero the true integrand does too
    # (it is bounded by f times a polynomial factor); mask those nodes
    if form == "quotient":
        def integrand(x):
            v = f.value(x)
            out = np.zeros_like(v)
            ok = v > 0.0
            out[ok] = (op.gamma_coeff(x)[ok] * f.d1(x)[ok] ** 2 / v[ok]
                       * op.weight(x)[ok])
            return out
    elif form == "log":
        def integrand(x):
            v = f.value(x)
            out = np.zeros_like(v)
            ok = v > 0.0
            ratio = f.d1(x)[ok] / v[ok]
            out[ok] = v[ok] * op.gamma_coeff(x)[ok] * ratio * ratio * op.weight(x)[ok]
            return out
    else:
        raise ValueError("form must be 'quotient' or 'log'")
    res = _measure_integral(op, integrand, cfg, probe_blowup=True)
    if not res.converged:
        raise NonConverged("weighted Fisher quadrature did not converge")
    return res.value


def fisher_gamma_product(op, F, cfg=None):
    """Product-space Fisher information of a density F on domain^2.

    int int [a(x) (dF/dx)^2 + a(y) (dF/dy)^2] / F dmu(x) dmu(y); the sum
    form follows from the coordinatewise carre du champ of the product
    generator.
    """
    cfg = cfg or QuadConfig()
    inner_cfg = replace(cfg, rel_tol=max(cfg.rel_tol, 1e-7),
                        abs_tol=max(cfg.abs_tol, 1e-10))

    def inner_value(x_scalar):
        def g(y):
            x = np.full_like(y, x_scalar)
            num = (op.gamma_coeff(x) * F.dx(x, y) ** 2
                   + op.gamma_coeff(y) * F.dy(x, y) ** 2)
            return num / F.value(x, y) * op.weight(y)
        return _measure_integral(op, g, inner_cfg)

    stats = {"err": 0.0, "converged": True, "nsub": 0}

    def outer(xs):
        xs = np.asarray(xs, dtype=float)
        out = np.empty(xs.shape)
        for i, xv in enumerate(xs.ravel()):
            res = inner_value(float(xv))
            stats["err"] = max(stats["err"], res.error_estimate
                               / max(abs(res.value), inner_cfg.abs_tol))
            stats["converged"] &= res.converged
            stats["nsub"] += res.subdivisions_used
            out.ravel()[i] = res.value
        return out * op.weight(xs)

    res = _measure_integral(op, outer, cfg)
    if not (res.converged and stats["converged"]):
        raise NonConverged("product Fisher quadrature did not converge")
    return res.value


def verify_tensor_identity(op, f, cfg=None):
    """|i(f (x) f on the product space) - 2 i(f)|; equality is structural."""
    cfg = cfg or QuadConfig()
    single = fisher_gamma(op, f, cfg)
    product = fisher_gamma_product(op, tensor_2d(f, f), cfg)
    return abs(product - 2.0 * single)


def _marginal(op, F, cfg):
    """Pi F(x) = int F(x, y) dmu(y) with its x-derivative, by quadrature."""
    inner_cfg = replace(cfg, rel_tol=max(cfg.rel_tol, 1e-8),
                        abs_tol=max(cfg.abs_tol, 1e-11))

    def _scalarized(fn):
        def call(xs):
            xs = np.asarray(xs, dtype=float)
            out = np.empty(xs.shape)
            for i, xv in enumerate(xs.ravel()):
                g = lambda y, xv=xv: fn(np.full_like(y, xv), y) * op.weight(y)
                out.ravel()[i] = _measure_integral(op, g, inner_cfg).value
            return out
        return call

    return SmoothTestFunction(_scalarized(F.value), _scalarized(F.dx),
                              None, name="marginal")


def verify_projection_inequality(op, F, cfg=None):
    """Slack i_product(F) - 2 i(Pi F) >= 0 for symmetric product densities."""
    cfg = cfg or QuadConfig()
    product = fisher_gamma_product(op, F, cfg)
    proj = _marginal(op, F, cfg)
    proj_fisher = fisher_gamma(op, proj, cfg, check_normalization=False)
    return product - 2.0 * proj_fisher


def projection_pointwise_gap(op, F, points, cfg=None):
    """min over points of int (dF/dx)^2/F dmu(y) - (d Pi F/dx)^2 / Pi F.

    The pointwise inequality behind the projection bound; the returned
    minimum gap must be >= -tol.
    """
    cfg = cfg or QuadConfig()
    proj = _marginal(op, F, cfg)
    gaps = []
    for x0 in points:
        op.check_in_domain(x0)

        def g(y, x0=x0):
            x = np.full_like(y, x0)
            return F.dx(x, y) ** 2 / F.value(x, y) * op.weight(y)

        lhs = _measure_integral(op, g, cfg).value
        xv = np.array([x0])
        rhs = float((proj.d1(xv) ** 2 / proj.value(xv))[0])
        gaps.append(lhs - rhs)
    return min(gaps)


def verify_diffusion_chain_rule(op, phi, f, g, points, cfg=None):
    """max residual of Gamma(Phi(f), g) = Phi'(f) Gamma(f, g) over points.

    Checked both through the closed form and through the defining bracket
    (which exercises second derivatives of the composition).
    """
    composed = compose(phi, f)
    worst = 0.0
    for x0 in points:
        x = np.array([float(x0)])
        op.check_in_domain(x)
        factor = phi.d1(f.value(x))
        closed = carre_du_champ(op, composed, g, x) - factor * carre_du_champ(op, f, g, x)
        bracket = (carre_du_champ_bracket(op, composed, g, x)
                   - factor * carre_du_champ_bracket(op, f, g, x))
        worst = max(worst, float(np.abs(closed)[0]), float(np.abs(bracket)[0]))
    return worst
