import os

import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

# Build from the checked-in C file when Cython is unavailable.
pyx = "src/pushsum_rate/_kernels/_core.pyx"
source = pyx if cythonize and os.path.exists(pyx) else pyx[:-4] + ".c"

extensions = [
    Extension(
        "pushsum_rate._kernels._core",
        [source],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
    )
]

if source is pyx:
    extensions = cythonize(
        extensions,
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=extensions)
