"""Exception types shared across the library."""


class NonConverged(RuntimeError):
    """An operation requiring a converged quadrature got an unconverged one."""


class NonFinite(ArithmeticError):
    """An integrand returned NaN or infinity at an evaluation node."""


class DivergenceSuspected(ArithmeticError):
    """Tail integral increases without bound under the declared tail model."""


class SingularityNotCancelled(ValueError):
    """Radially singular integrand violates its O(|h|^2) small-h contract."""


class Overflow(OverflowError):
    """exp argument beyond the double range; input is ill-scaled."""


class SizeOverflow(ValueError):
    """Product state space larger than the configured limit."""


class DimensionMismatch(ValueError):
    """Vector or matrix shape incompatible with the kernel."""


class NotReversible(ValueError):
    """Operation requires a reversible chain (detailed balance)."""


class NotSymmetric(ValueError):
    """Operation requires a symmetric product-space density."""


class NonPositiveDensity(ValueError):
    """Densities must be strictly positive."""


class NonPositiveInput(ValueError):
    """Inputs to this operation must be strictly positive."""


class NegativeTime(ValueError):
    """Heat flow time must be nonnegative."""


class OutOfDomain(ValueError):
    """Evaluation point outside the operator's open domain."""


class BoundaryBlowup(ArithmeticError):
    """Integrand appears non-integrable near a domain endpoint."""


class UnsupportedPair(ValueError):
    """No closed-form convolution for this pair and the numeric fallback is off."""
