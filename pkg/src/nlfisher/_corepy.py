"""Pure-numpy implementations of the hot kernels.

Mirror of the compiled module ``_fastcore``; the active backend is chosen in
``core``.  Forms for the batched reductions:

* form 0: out[j] = sum_i fw[i] * Upsilon(shifted_log[j, i] - base_log[i])
* form 1: out[j] = sum_i fw[i] * shifted_log[j, i]

where Upsilon(r) = exp(r) - 1 - r.
"""
import numpy as np

_SERIES_CUT = 1e-4


def upsilon(r):
    r = np.asarray(r, dtype=float)
    small = np.abs(r) < _SERIES_CUT
    rs = np.where(small, r, 0.0)
    # expm1 keeps absolute accuracy; the series keeps relative accuracy as r -> 0
    series = rs * rs * (0.5 + rs * (1.0 / 6.0 + rs * (1.0 / 24.0 + rs / 120.0)))
    return np.where(small, series, np.expm1(r) - r)


def inner_batch_generic(shifted_log, base_log, fw, form):
    if form == 0:
        return upsilon(shifted_log - base_log[None, :]) @ fw
    return shifted_log @ fw


def inner_batch_cauchy(gamma, log_c, x, base_log, fw, h, form):
    g2 = gamma * gamma
    xh = x[None, :] + h[:, None]
    shifted = log_c - np.log(g2 + xh * xh)
    return inner_batch_generic(shifted, base_log, fw, form)


def inner_batch_gaussian(inv_two_sigma2, log_c, x, base_log, fw, h, form):
    xh = x[None, :] + h[:, None]
    shifted = log_c - inv_two_sigma2 * xh * xh
    return inner_batch_generic(shifted, base_log, fw, form)


def inner_batch_exp_power(beta, delta, log_z, x, base_log, fw, h, form):
    xh = x[None, :] + h[:, None]
    shifted = -delta * np.power(1.0 + xh * xh, 0.5 * beta) - log_z
    return inner_batch_generic(shifted, base_log, fw, form)
