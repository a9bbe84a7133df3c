"""Build the optional Cython kernels; the package falls back to pure Python without them."""
import os

import numpy
from setuptools import Extension, setup

ext_modules = []
if os.environ.get("GROUPSEL_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "groupsel._kernels",
                    ["src/groupsel/_kernels.pyx"],
                    include_dirs=[numpy.get_include()],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
