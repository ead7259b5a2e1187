#!/usr/bin/env python3
"""Benchmark the compiled core against the numpy fallback.

Microbenchmarks call both implementations in-process; the end-to-end rows
re-run a representative fractional-information evaluation in a subprocess
with NLFISHER_BACKEND forced, because the backend is bound at import time.

Usage: python benchmarks/bench_core.py [--quick]
"""
import argparse
import os
import pathlib
import subprocess
import sys
import time

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from nlfisher import _corepy  # noqa: E402

try:
    from nlfisher import _fastcore
except ImportError:
    _fastcore = None


def timeit(fn, repeats):
    fn()  # warm up
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats


def micro(repeats):
    rng = np.random.default_rng(0)
    n, h_count = 4000, 128
    r = rng.uniform(-5.0, 5.0, n * h_count)
    x = np.sort(rng.uniform(-50.0, 50.0, n))
    base = np.log(1.0 / np.pi) - np.log(1.0 + x * x)
    fw = np.exp(base) * rng.uniform(0.01, 0.1, n)
    h = rng.uniform(-3.0, 3.0, h_count)
    shifted = np.ascontiguousarray(
        np.log(1.0 / np.pi) - np.log(1.0 + (x[None, :] + h[:, None]) ** 2))
    log_c = float(np.log(1.0 / np.pi))
    cases = [
        ("upsilon (512k)", lambda m: m.upsilon(r)),
        ("generic reduction", lambda m: m.inner_batch_generic(shifted, base, fw, 0)),
        ("fused cauchy", lambda m: m.inner_batch_cauchy(1.0, log_c, x, base, fw, h, 0)),
        ("fused gaussian", lambda m: m.inner_batch_gaussian(0.5, log_c, x, base, fw, h, 0)),
        ("fused exp_power", lambda m: m.inner_batch_exp_power(1.0, 1.0, 0.2, x, base, fw, h, 0)),
    ]
    print(f"{'kernel':<20} {'python':>12} {'cython':>12} {'speedup':>9}")
    for name, call in cases:
        t_py = timeit(lambda: call(_corepy), repeats)
        if _fastcore is None:
            print(f"{name:<20} {t_py * 1e3:>10.3f}ms {'n/a':>12} {'-':>9}")
            continue
        t_cy = timeit(lambda: call(_fastcore), repeats)
        print(f"{name:<20} {t_py * 1e3:>10.3f}ms {t_cy * 1e3:>10.3f}ms "
              f"{t_py / t_cy:>8.1f}x")


_END_TO_END = r"""
import time
import nlfisher
from nlfisher import Cauchy, FracKernelSpec, QuadConfig, fisher_fractional
f = Cauchy(1.0)
t0 = time.perf_counter()
for s in (0.3, 0.6, 0.9):
    fisher_fractional(f, FracKernelSpec(1, s), QuadConfig())
print(f"{nlfisher.BACKEND}: {time.perf_counter() - t0:.3f} s for three orders")
"""


def end_to_end():
    sys.stdout.flush()
    for backend in ("python", "cython"):
        if backend == "cython" and _fastcore is None:
            print("cython: extension not built (python setup.py build_ext --inplace)")
            continue
        env = dict(os.environ, NLFISHER_BACKEND=backend,
                   PYTHONPATH=str(pathlib.Path(__file__).resolve().parents[1] / "src"))
        subprocess.run([sys.executable, "-c", _END_TO_END], env=env, check=True)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true", help="fewer repeats")
    args = ap.parse_args()
    micro(repeats=3 if args.quick else 20)
    print()
    end_to_end()


if __name__ == "__main__":
    main()
