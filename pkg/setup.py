"""Build the optional Cython kernel for rankme.

The package works without it: ``rankme._backend`` falls back to the numpy
implementation in ``rankme._fallback`` when the extension is missing.
"""

import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

extensions = [
    Extension(
        "rankme._kernels",
        ["src/rankme/_kernels.pyx"],
        language="c++",
        include_dirs=[np.get_include()],
        extra_compile_args=["-O3"],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        optional=True,
    ),
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    ),
)
