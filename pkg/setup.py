"""Build script for the optional compiled kernels.

The package is fully functional without the extension: refprior.kernels falls
back to the pure-Python implementations in refprior._pyloops when the compiled
module is absent or when REFPRIOR_PURE_PYTHON=1 is set.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "refprior._fastloops",
                ["src/refprior/_fastloops.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
