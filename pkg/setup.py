"""Build hook for the optional compiled kernels."""

import os

from setuptools import setup

ext_modules = []
if os.environ.get("NOVLAB_NO_EXT", "") in ("", "0"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "novlab._ckernels",
                    ["src/novlab/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
