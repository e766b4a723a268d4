import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; coldwall.backend falls back at import
    cythonize = None

# no FMA contraction and no sin/cos -> sincos fusion: keeps the compiled kernel
# bit-identical to the Python fallback
extra = ["-O2", "-ffp-contract=off", "-fno-fast-math", "-fno-builtin"]

ext_modules = []
if cythonize is not None and not os.environ.get("COLDWALL_NO_EXT"):
    ext_modules = cythonize(
        [
            Extension(
                "coldwall._kernels",
                ["src/coldwall/_kernels.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=extra,
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
            "initializedcheck": False,
        },
    )

setup(ext_modules=ext_modules)
