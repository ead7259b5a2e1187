"""Backend selection for the hot kernels.

The compiled extension ``nlfisher._fastcore`` is preferred when built; the
numpy fallback ``nlfisher._corepy`` is otherwise used.  Override with the
environment variable ``NLFISHER_BACKEND=python|cython`` (``auto`` default).
Both backends are semantically identical; ``benchmarks/bench_core.py``
compares their throughput.
"""
import os

import numpy as np

from . import _corepy

_requested = os.environ.get("NLFISHER_BACKEND", "auto")

if _requested == "python":
    _impl = _corepy
    BACKEND = "python"
elif _requested in ("auto", "cython"):
    try:
        from . import _fastcore as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            raise
        _impl = _corepy
        BACKEND = "python"
else:
    raise ValueError(f"unknown NLFISHER_BACKEND={_requested!r}")

UPSILON_FORM = 0
CROSS_ENTROPY_FORM = 1


def _c1(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def upsilon(r):
    """Upsilon(r) = exp(r) - 1 - r, elementwise; nonnegative and convex."""
    arr = np.asarray(r, dtype=np.float64)
    out = _impl.upsilon(_c1(arr.ravel()))
    return np.asarray(out).reshape(arr.shape)


def inner_batch_generic(shifted_log, base_log, fw, form):
    return _impl.inner_batch_generic(
        np.ascontiguousarray(shifted_log, dtype=np.float64),
        _c1(base_log), _c1(fw), int(form))


def inner_batch_cauchy(gamma, log_c, x, base_log, fw, h, form):
    return _impl.inner_batch_cauchy(float(gamma), float(log_c), _c1(x),
                                    _c1(base_log), _c1(fw), _c1(h), int(form))


def inner_batch_gaussian(inv_two_sigma2, log_c, x, base_log, fw, h, form):
    return _impl.inner_batch_gaussian(float(inv_two_sigma2), float(log_c), _c1(x),
                                      _c1(base_log), _c1(fw), _c1(h), int(form))


def inner_batch_exp_power(beta, delta, log_z, x, base_log, fw, h, form):
    return _impl.inner_batch_exp_power(float(beta), float(delta), float(log_z),
                                       _c1(x), _c1(base_log), _c1(fw), _c1(h),
                                       int(form))
