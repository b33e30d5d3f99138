"""Builds the optional compiled kernel extension.

The package works without it (a pure-Python fallback is selected at import
time), so a failed compile only costs speed. Set HEATSHIFT_PURE=1 to skip
the extension entirely.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if os.environ.get("HEATSHIFT_PURE") != "1":
    try:
        import numpy
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "heatshift._kernels._fast",
                    ["src/heatshift/_kernels/_fast.pyx"],
                    include_dirs=[numpy.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
