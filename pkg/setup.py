import os

import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; kernels fall back at import time
    cythonize = None


def ext_modules():
    if cythonize is None or os.environ.get("DEGENCONTROL_NO_EXT"):
        return []
    extensions = [
        Extension(
            "degencontrol._kernels._core",
            [os.path.join("src", "degencontrol", "_kernels", "_core.pyx")],
            include_dirs=[np.get_include()],
            define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            extra_compile_args=["-O3"] + os.environ.get("DEGENCONTROL_CFLAGS", "").split(),
        )
    ]
    return cythonize(extensions, compiler_directives={"language_level": "3"})


setup(ext_modules=ext_modules())
