"""Build script for the compiled chain-loop core.

The extension links against numpy's static random-number library so the
compiled loop can pull doubles from the very same BitGenerator stream a
``numpy.random.Generator`` would consume.  ``-ffp-contract=off`` keeps the
compiler from fusing multiply-adds: the compiled loop must reproduce the
pure-Python fallback bit for bit.
"""

import os

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

npyrandom_dir = os.path.join(os.path.dirname(np.random.__file__), "lib")

ext = Extension(
    "adaptmh._loop",
    sources=["src/adaptmh/_loop.pyx"],
    include_dirs=[np.get_include()],
    library_dirs=[npyrandom_dir],
    libraries=["npyrandom"],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    extra_compile_args=["-O2", "-ffp-contract=off"],
)

setup(
    # mirrors pyproject metadata so setuptools too old to read [project]
    # tables (< 61) still builds the src layout correctly
    name="adaptmh",
    version="0.1.0",
    package_dir={"": "src"},
    packages=["adaptmh"],
    entry_points={"console_scripts": ["adaptmh = adaptmh.cli:main"]},
    ext_modules=cythonize(
        [ext],
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            # C float division is the same IEEE operation as Python's;
            # divisors here are provably nonzero (Cholesky pivots checked)
            "cdivision": True,
        },
    )
)
