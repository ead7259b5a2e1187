"""Builds the optional compiled core.

The package works without it (a numpy fallback is selected at import);
building the extension speeds up the singular-quadrature inner loops.
Build in place with:

    python setup.py build_ext --inplace
"""
from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "nlfisher._fastcore",
                ["src/nlfisher/_fastcore.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError:
    # No Cython available: pure-Python install, fallback core is used.
    pass

setup(ext_modules=ext_modules)
