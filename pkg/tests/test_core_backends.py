import math

import numpy as np
import pytest

from nlfisher import _corepy, core

try:
    from nlfisher import _fastcore
except ImportError:
    _fastcore = None

BACKENDS = [_corepy] + ([_fastcore] if _fastcore is not None else [])


def test_upsilon_reference_values():
    vals = core.upsilon(np.array([0.0, 1.0, -1.0]))
    assert vals[0] == 0.0
    assert vals[1] == pytest.approx(math.e - 2.0, rel=1e-15)
    assert vals[2] == pytest.approx(1.0 / math.e, rel=1e-15)


def test_upsilon_nonnegative_and_small_argument():
    rng = np.random.default_rng(0)
    r = np.concatenate([rng.uniform(-30, 30, 1000),
                        rng.uniform(-1e-6, 1e-6, 1000)])
    vals = core.upsilon(r)
    assert np.all(vals >= 0.0)
    tiny = np.array([1e-9, -1e-9, 1e-12])
    # quadratic leading term with full relative accuracy
    assert core.upsilon(tiny) == pytest.approx(tiny * tiny / 2.0, rel=1e-8)


def test_upsilon_preserves_shape():
    r = np.zeros((3, 4))
    assert core.upsilon(r).shape == (3, 4)


@pytest.mark.skipif(_fastcore is None, reason="compiled core not built")
def test_backend_parity():
    rng = np.random.default_rng(42)
    n, hn = 800, 40
    x = np.sort(rng.uniform(-60.0, 60.0, n))
    base = np.log(1.0 / np.pi) - np.log(1.0 + x * x)
    fw = np.exp(base) * rng.uniform(0.01, 0.2, n)
    h = rng.uniform(-4.0, 4.0, hn)
    shifted = np.ascontiguousarray(
        np.log(1.0 / np.pi) - np.log(1.0 + (x[None, :] + h[:, None]) ** 2))
    log_c = math.log(1.0 / math.pi)
    r = rng.uniform(-8.0, 8.0, 5000)
    assert _fastcore.upsilon(r) == pytest.approx(_corepy.upsilon(r), rel=1e-13)
    for form in (0, 1):
        pairs = [
            (_fastcore.inner_batch_generic(shifted, base, fw, form),
             _corepy.inner_batch_generic(shifted, base, fw, form)),
            (_fastcore.inner_batch_cauchy(1.0, log_c, x, base, fw, h, form),
             _corepy.inner_batch_cauchy(1.0, log_c, x, base, fw, h, form)),
            (_fastcore.inner_batch_gaussian(0.5, log_c, x, base, fw, h, form),
             _corepy.inner_batch_gaussian(0.5, log_c, x, base, fw, h, form)),
            (_fastcore.inner_batch_exp_power(1.0, 1.0, 0.3, x, base, fw, h, form),
             _corepy.inner_batch_exp_power(1.0, 1.0, 0.3, x, base, fw, h, form)),
        ]
        for got, ref in pairs:
            assert got == pytest.approx(ref, rel=1e-12)


@pytest.mark.parametrize("impl", BACKENDS)
def test_fused_kernels_match_generic(impl):
    rng = np.random.default_rng(7)
    n, hn = 500, 16
    x = np.sort(rng.uniform(-30.0, 30.0, n))
    gamma = 1.5
    log_c = math.log(gamma / math.pi)
    base = log_c - np.log(gamma ** 2 + x * x)
    fw = np.exp(base) * rng.uniform(0.01, 0.1, n)
    h = rng.uniform(-5.0, 5.0, hn)
    shifted = np.ascontiguousarray(
        log_c - np.log(gamma ** 2 + (x[None, :] + h[:, None]) ** 2))
    for form in (0, 1):
        fused = impl.inner_batch_cauchy(gamma, log_c, x, base, fw, h, form)
        generic = impl.inner_batch_generic(shifted, base, fw, form)
        assert fused == pytest.approx(generic, rel=1e-12)
