"""Build script: compiles the Monte Carlo chunk kernel when possible.

The package is fully functional without the extension (a numpy fallback
is selected at import), so a missing compiler or Cython only costs
speed, not features.
"""
import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools.extension import Extension

    ext_modules = cythonize(
        [
            Extension(
                "qsdcsim.mc._kernel",
                ["src/qsdcsim/mc/_kernel.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except ImportError as exc:  # pragma: no cover - build-environment dependent
    print(f"qsdcsim: building without the compiled kernel ({exc})", file=sys.stderr)

setup(ext_modules=ext_modules)
