"""Build script for the compiled simulation kernel.

The extension is optional: set EHCAP_NO_EXT=1 to skip compilation and fall
back to the pure-Python kernel at import time.
"""

import os

from setuptools import Extension, setup

ext_modules = []
if not os.environ.get("EHCAP_NO_EXT"):
    import numpy
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "ehcap._kernel",
                sources=["src/ehcap/_kernel.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
