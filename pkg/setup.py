"""Build script: compiles the optional clipping kernel extension.

The package works without the extension (a pure-Python kernel is selected
at import time), so the build is marked optional and a failed compile only
emits a warning.
"""

from setuptools import Extension, setup

try:
    import numpy as np
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "fieldxfer._kernels._core",
                ["src/fieldxfer/_kernels/_core.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
