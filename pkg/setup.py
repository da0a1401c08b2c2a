"""Builds the compiled simplex kernel when Cython is available.

Without Cython (or a C compiler) the package installs pure-Python and
falls back to the numpy kernel at import time.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    ext_modules = cythonize(
        [
            Extension(
                "p2piot.milp._simplex_kernel",
                ["src/p2piot/milp/_simplex_kernel.pyx"],
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
