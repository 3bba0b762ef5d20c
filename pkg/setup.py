"""Build script for the optional Cython kernels.

The extension is optional: if Cython or a C compiler is unavailable the
package installs without it and falls back to the numpy kernels.
"""
import os

from setuptools import setup

ext_modules = []
if not os.environ.get("ATTRGAME_NO_EXT"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "attrgame._kernels",
                    ["src/attrgame/_kernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
