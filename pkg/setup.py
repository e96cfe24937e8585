"""Build script: compiles the optional gradient-flow integrator extension.

The package works without the extension (a numpy fallback is selected at
import time), so any build failure here is non-fatal by design: delete the
ext_modules list or install with RFFLOW_NO_EXT=1 to skip compilation.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("RFFLOW_NO_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "rfflow._euler",
                    ["src/rfflow/_euler.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            language_level=3,
        )
    except ImportError:
        pass

setup(ext_modules=ext_modules)
