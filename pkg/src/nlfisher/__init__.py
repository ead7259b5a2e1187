"""Fisher information functionals for jump kernels.

Three settings share one numerical substrate:

* finite Markov chains (exact linear algebra): nonlocal Fisher information,
  entropy, heat flow, product-space liftings;
* the fractional kernel on R^d, d in {1, 2}: singular quadrature of the
  order-s Fisher information, its local limit, scaling and convolution
  subadditivity;
* 1-d diffusion operators (Laguerre, Jacobi): carre du champ calculus and
  weighted Fisher information.

The hot inner loops run on a compiled core when built (see ``core.BACKEND``)
and on a numpy fallback otherwise.
"""
from .core import BACKEND, upsilon
from .densities import (Cauchy, DensityModel, ExpPower, Gaussian,
                        convolve, density_from_json, density_to_json, rescale)
from .fractional import (FracKernelSpec, ProbeRecord, SweepResult, bsi_slack,
                         divergence_probe, fisher_classical, fisher_fractional,
                         limit_sweep, normalization_constant,
                         normalization_constant_quadrature,
                         normalization_limit_ratio, scaling_check)
from .gamma_calculus import (DiffusionOperator1D, ScalarMap, Smooth2DFunction,
                             SmoothTestFunction, carre_du_champ,
                             carre_du_champ_bracket, fisher_gamma,
                             fisher_gamma_product, verify_diffusion_chain_rule,
                             verify_projection_inequality, verify_tensor_identity)
from .kernels import (FiniteKernel, ProductIndex, WeightedMeasure,
                      generator_apply, key_inequality_slack, psi_upsilon,
                      tensorize, verify_sum_formula)
from .markov import (ChainModel, DiscreteDensity, LiftedDensity,
                     covariance_functional, density_from_values,
                     dissipation_residual, entropy, fisher_nonlocal,
                     fisher_symmetric_form, heat_flow, lift_chain, project,
                     tensor_density, verify_entropy_lifting,
                     verify_lifting_identity, verify_lifting_inequality)
from .quadrature import (PolynomialTail, QuadConfig, QuadResult,
                         StretchedExpTail, integrate_1d, integrate_2d,
                         integrate_radial_singular, integrate_tail)

__version__ = "0.1.0"
