import numpy as np
from Cython.Build import cythonize
from setuptools import Extension, setup

# The compiled kernels are an optional speedup: if the extension cannot be
# built the package falls back to the numpy implementation at import time.
extensions = [
    Extension(
        "attrex.backends._core",
        ["src/attrex/backends/_core.pyx"],
        include_dirs=[np.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
        extra_compile_args=["-O3"],
        optional=True,
    )
]

setup(
    ext_modules=cythonize(
        extensions,
        compiler_directives={"language_level": "3"},
    )
)
