"""Closed-form probability density families on R^d, d in {1, 2}.

Each family exposes the pdf, log-pdf and log-gradient plus the tail
declarations the quadrature layer needs.  Families whose profile decays at
least as fast as a Gaussian (tail exponent >= 2) have divergent fractional
Fisher information; ``upsilon_growth`` quantifies this (see fractional
module).
"""
import math
from dataclasses import replace

import numpy as np

from .errors import UnsupportedPair
from .quadrature import (PolynomialTail, QuadConfig, StretchedExpTail,
                         integrate_halfline, integrate_real_line)

_VALIDATION_CFG = QuadConfig(rel_tol=1e-9, abs_tol=1e-12)


class DensityModel:
    """Base class: a strictly positive, C^2 probability density on R^d."""

    d = 1
    family = "generic"
    supports_closed_convolution = False

    # -- evaluation ---------------------------------------------------------
    def pdf(self, x):
        return np.exp(self.logpdf(x))

    def logpdf(self, x):
        raise NotImplementedError

    def dlogpdf(self, x):
        """Derivative of log f; for d=2 radial families see dlogpdf_radius."""
        raise NotImplementedError

    # d=2 radial families implement the *_radius variants
    def logpdf_radius(self, rho):
        raise NotImplementedError

    def dlogpdf_radius(self, rho):
        raise NotImplementedError

    # -- declarations -------------------------------------------------------
    def scale(self):
        """Characteristic length for grid construction."""
        return 1.0

    def tail_model(self):
        """Decay model of f itself."""
        raise NotImplementedError

    def fisher_tail_model(self):
        """Decay model of f * |grad log f|^2."""
        return self.tail_model()

    def upsilon_growth(self):
        """Exponent b with Upsilon(log f(x+h) - log f(x)) = O(|h|^b polylog)."""
        raise NotImplementedError

    def fast_kernel(self):
        """(name, params) for the compiled inner-loop kernel, or None."""
        return None

    # -- wrappers ------------------------------------------------------------
    def shifted(self, m):
        return ShiftedDensity(self, m)

    def validate_normalization(self, cfg=_VALIDATION_CFG):
        mass = total_mass(self, cfg)
        if abs(mass - 1.0) > 100.0 * cfg.rel_tol + 10.0 * cfg.abs_tol:
            raise ValueError(f"density mass {mass!r} is not 1 within tolerance")
        return mass


def total_mass(f, cfg=_VALIDATION_CFG):
    if f.d == 1:
        sub = replace(cfg, tail_model=f.tail_model())
        return integrate_real_line(f.pdf, sub, split=max(1.0, f.scale())).value
    sub = replace(cfg, tail_model=f.tail_model())
    radial = lambda rho: 2.0 * math.pi * rho * np.exp(f.logpdf_radius(rho))
    return integrate_halfline(radial, 0.0, sub).value


class Cauchy(DensityModel):
    """Isotropic Cauchy with scale gamma; heavy polynomial tails.

    d=1: f(x) = gamma / (pi (gamma^2 + x^2))
    d=2: f(x) = gamma / (2 pi (gamma^2 + |x|^2)^(3/2))
    """

    family = "cauchy"
    supports_closed_convolution = True

    def __init__(self, gamma, d=1, validate=True):
        if gamma <= 0:
            raise ValueError("gamma must be positive")
        if d not in (1, 2):
            raise ValueError("d must be 1 or 2")
        self.gamma = float(gamma)
        self.d = d
        if d == 1:
            self._log_c = math.log(self.gamma / math.pi)
        else:
            self._log_c = math.log(self.gamma / (2.0 * math.pi))
        if validate:
            self.validate_normalization()

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.d == 1:
            return self._log_c - np.log(self.gamma ** 2 + x * x)
        r2 = (x * x).sum(axis=-1)
        return self._log_c - 1.5 * np.log(self.gamma ** 2 + r2)

    def dlogpdf(self, x):
        x = np.asarray(x, dtype=float)
        if self.d == 1:
            return -2.0 * x / (self.gamma ** 2 + x * x)
        r2 = (x * x).sum(axis=-1)
        return -3.0 * x / (self.gamma ** 2 + r2)[..., None]

    def logpdf_radius(self, rho):
        rho = np.asarray(rho, dtype=float)
        return self._log_c - 1.5 * np.log(self.gamma ** 2 + rho * rho)

    def dlogpdf_radius(self, rho):
        rho = np.asarray(rho, dtype=float)
        return -3.0 * rho / (self.gamma ** 2 + rho * rho)

    def scale(self):
        return self.gamma

    def tail_model(self):
        return PolynomialTail(self.d + 1.0)

    def fisher_tail_model(self):
        return PolynomialTail(self.d + 3.0)

    def upsilon_growth(self):
        return 0.0  # log-ratio grows only logarithmically

    def fast_kernel(self):
        if self.d == 1:
            return ("cauchy", (self.gamma, self._log_c))
        return None

    def __repr__(self):
        return f"Cauchy(gamma={self.gamma}, d={self.d})"


class Gaussian(DensityModel):
    """Isotropic normal with standard deviation sigma per coordinate."""

    family = "gaussian"
    supports_closed_convolution = True

    def __init__(self, sigma, d=1, validate=True):
        if sigma <= 0:
            raise ValueError("sigma must be positive")
        if d not in (1, 2):
            raise ValueError("d must be 1 or 2")
        self.sigma = float(sigma)
        self.d = d
        self._log_c = -0.5 * d * math.log(2.0 * math.pi * self.sigma ** 2)
        self._inv2s2 = 0.5 / self.sigma ** 2
        if validate:
            self.validate_normalization()

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        r2 = x * x if self.d == 1 else (x * x).sum(axis=-1)
        return self._log_c - self._inv2s2 * r2

    def dlogpdf(self, x):
        x = np.asarray(x, dtype=float)
        return -x / self.sigma ** 2

    def logpdf_radius(self, rho):
        rho = np.asarray(rho, dtype=float)
        return self._log_c - self._inv2s2 * rho * rho

    def dlogpdf_radius(self, rho):
        rho = np.asarray(rho, dtype=float)
        return -rho / self.sigma ** 2

    def scale(self):
        return self.sigma

    def tail_model(self):
        return StretchedExpTail(2.0, self._inv2s2)

    def upsilon_growth(self):
        return 2.0  # quadratic log-ratio growth: i_s diverges for every s

    def fast_kernel(self):
        if self.d == 1:
            return ("gaussian", (self._inv2s2, self._log_c))
        return None

    def __repr__(self):
        return f"Gaussian(sigma={self.sigma}, d={self.d})"


class ExpPower(DensityModel):
    """Smooth exponential-power profile Z^-1 exp(-delta (1+|x|^2)^(beta/2)).

    C^2 everywhere; tail exponent beta in (0, 2), so the fractional Fisher
    information is finite for s > beta/2.
    """

    family = "exp_power"

    def __init__(self, beta, delta, d=1, validate=True):
        if not 0.0 < beta < 2.0:
            raise ValueError("beta must lie in (0, 2)")
        if delta <= 0:
            raise ValueError("delta must be positive")
        if d not in (1, 2):
            raise ValueError("d must be 1 or 2")
        self.beta = float(beta)
        self.delta = float(delta)
        self.d = d
        self.log_z = self._compute_log_z()
        if validate:
            self.validate_normalization()

    def _profile(self, r2):
        return -self.delta * np.power(1.0 + r2, 0.5 * self.beta)

    def _compute_log_z(self):
        cfg = replace(_VALIDATION_CFG,
                      tail_model=StretchedExpTail(self.beta, self.delta))
        if self.d == 1:
            raw = integrate_real_line(
                lambda x: np.exp(self._profile(x * x)), cfg,
                split=max(1.0, self.scale())).value
        else:
            raw = integrate_halfline(
                lambda rho: 2.0 * math.pi * rho * np.exp(self._profile(rho * rho)),
                0.0, cfg).value
        return math.log(raw)

    def logpdf(self, x):
        x = np.asarray(x, dtype=float)
        r2 = x * x if self.d == 1 else (x * x).sum(axis=-1)
        return self._profile(r2) - self.log_z

    def dlogpdf(self, x):
        x = np.asarray(x, dtype=float)
        r2 = x * x if self.d == 1 else (x * x).sum(axis=-1)
        fac = -self.delta * self.beta * np.power(1.0 + r2, 0.5 * self.beta - 1.0)
        return fac * x if self.d == 1 else fac[..., None] * x

    def logpdf_radius(self, rho):
        rho = np.asarray(rho, dtype=float)
        return self._profile(rho * rho) - self.log_z

    def dlogpdf_radius(self, rho):
        rho = np.asarray(rho, dtype=float)
        return -self.delta * self.beta * rho * np.power(
            1.0 + rho * rho, 0.5 * self.beta - 1.0)

    def scale(self):
        return max(1.0, self.delta ** (-1.0 / self.beta))

    def tail_model(self):
        return StretchedExpTail(self.beta, self.delta)

    def upsilon_growth(self):
        return self.beta

    def fast_kernel(self):
        if self.d == 1:
            return ("exp_power", (self.beta, self.delta, self.log_z))
        return None

    def __repr__(self):
        return f"ExpPower(beta={self.beta}, delta={self.delta}, d={self.d})"


class ShiftedDensity(DensityModel):
    """f(. - m); mass and all invariants preserved exactly."""

    family = "location_shift"

    def __init__(self, base, m):
        self.base = base
        self.d = base.d
        self.m = float(m) if base.d == 1 else np.asarray(m, dtype=float)

    def logpdf(self, x):
        return self.base.logpdf(np.asarray(x, dtype=float) - self.m)

    def dlogpdf(self, x):
        return self.base.dlogpdf(np.asarray(x, dtype=float) - self.m)

    def scale(self):
        shift = abs(self.m) if self.d == 1 else float(np.linalg.norm(self.m))
        return self.base.scale() + shift

    def tail_model(self):
        return self.base.tail_model()

    def fisher_tail_model(self):
        return self.base.fisher_tail_model()

    def upsilon_growth(self):
        return self.base.upsilon_growth()

    def __repr__(self):
        return f"ShiftedDensity({self.base!r}, m={self.m})"


class ScaledDensity(DensityModel):
    """Mass-preserving dilation c^-d f(./c) for families with no closed form."""

    family = "rescaled"

    def __init__(self, base, c):
        if c <= 0:
            raise ValueError("scale must be positive")
        self.base = base
        self.c = float(c)
        self.d = base.d
        self._log_jac = -self.d * math.log(self.c)

    def logpdf(self, x):
        return self.base.logpdf(np.asarray(x, dtype=float) / self.c) + self._log_jac

    def dlogpdf(self, x):
        return self.base.dlogpdf(np.asarray(x, dtype=float) / self.c) / self.c

    def logpdf_radius(self, rho):
        return self.base.logpdf_radius(np.asarray(rho, dtype=float) / self.c) + self._log_jac

    def dlogpdf_radius(self, rho):
        return self.base.dlogpdf_radius(np.asarray(rho, dtype=float) / self.c) / self.c

    def scale(self):
        return self.c * self.base.scale()

    def tail_model(self):
        tm = self.base.tail_model()
        if isinstance(tm, StretchedExpTail):
            return StretchedExpTail(tm.beta, tm.delta / self.c ** tm.beta)
        return tm

    def fisher_tail_model(self):
        tm = self.base.fisher_tail_model()
        if isinstance(tm, StretchedExpTail):
            return StretchedExpTail(tm.beta, tm.delta / self.c ** tm.beta)
        return tm

    def upsilon_growth(self):
        return self.base.upsilon_growth()

    def __repr__(self):
        return f"ScaledDensity({self.base!r}, c={self.c})"


def rescale(f, c):
    """Mass-preserving dilation f_c = c^-d f(./c); closed within stable families."""
    if c <= 0:
        raise ValueError("scale must be positive")
    if c == 1.0:
        return f
    if isinstance(f, Cauchy):
        return Cauchy(c * f.gamma, d=f.d, validate=False)
    if isinstance(f, Gaussian):
        return Gaussian(c * f.sigma, d=f.d, validate=False)
    if isinstance(f, ShiftedDensity):
        shift = c * f.m if f.d == 1 else c * np.asarray(f.m)
        return ShiftedDensity(rescale(f.base, c), shift)
    return ScaledDensity(f, c)


def convolve(f, g, numeric_fallback=False, cfg=None):
    """Convolution f * g, closed-form within the stable families.

    Cauchy(g1) * Cauchy(g2) = Cauchy(g1 + g2) and
    Gaussian(s1) * Gaussian(s2) = Gaussian(sqrt(s1^2 + s2^2)); shifts add.
    Other pairs raise ``UnsupportedPair`` unless the d=1 grid fallback is
    enabled (test oracle only).
    """
    shift = 0.0
    if isinstance(f, ShiftedDensity):
        shift = shift + f.m
        f = f.base
    if isinstance(g, ShiftedDensity):
        shift = shift + g.m
        g = g.base
    out = None
    if isinstance(f, Cauchy) and isinstance(g, Cauchy) and f.d == g.d:
        out = Cauchy(f.gamma + g.gamma, d=f.d, validate=False)
    elif isinstance(f, Gaussian) and isinstance(g, Gaussian) and f.d == g.d:
        out = Gaussian(math.hypot(f.sigma, g.sigma), d=f.d, validate=False)
    if out is not None:
        return out.shifted(shift) if np.any(shift != 0.0) else out
    if numeric_fallback and f.d == 1 and g.d == 1:
        return GridDensity.convolution(f, g, cfg or _VALIDATION_CFG)
    raise UnsupportedPair(
        f"no closed-form convolution for {f.family} * {g.family}")


class GridDensity(DensityModel):
    """Tabulated d=1 density from trapezoid-grid convolution (test oracle)."""

    family = "grid"

    def __init__(self, xs, values):
        self.xs = xs
        self.values = np.maximum(values, 1e-300)
        self.d = 1

    @classmethod
    def convolution(cls, f, g, cfg, half_width=None, n=8192):
        L = half_width or 40.0 * max(f.scale(), g.scale())
        xs = np.linspace(-L, L, n)
        dx = xs[1] - xs[0]
        fv = f.pdf(xs)
        gv = g.pdf(xs)
        conv = np.convolve(fv, gv, mode="same") * dx
        return cls(xs, conv)

    def pdf(self, x):
        return np.interp(np.asarray(x, dtype=float), self.xs, self.values)

    def logpdf(self, x):
        return np.log(self.pdf(x))


# --- density JSON interface: {"family": ..., "d": ..., "params": {...}} ----

def density_from_json(obj):
    fam = obj["family"]
    d = int(obj.get("d", 1))
    p = obj.get("params", {})
    if fam == "cauchy":
        out = Cauchy(p["gamma"], d=d)
    elif fam == "gaussian":
        out = Gaussian(p["sigma"], d=d)
    elif fam == "exp_power":
        out = ExpPower(p["beta"], p["delta"], d=d)
    else:
        raise ValueError(f"unknown density family {fam!r}")
    if "shift" in p and np.any(np.asarray(p["shift"]) != 0.0):
        out = out.shifted(p["shift"])
    return out


def density_to_json(f):
    shift = None
    if isinstance(f, ShiftedDensity):
        shift, f = f.m, f.base
    if isinstance(f, Cauchy):
        params = {"gamma": f.gamma}
    elif isinstance(f, Gaussian):
        params = {"sigma": f.sigma}
    elif isinstance(f, ExpPower):
        params = {"beta": f.beta, "delta": f.delta}
    else:
        raise ValueError(f"{f.family} has no JSON form")
    if shift is not None:
        params["shift"] = shift if np.isscalar(shift) else list(shift)
    return {"family": f.family, "d": f.d, "params": params}
