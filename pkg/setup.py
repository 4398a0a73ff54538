"""Build script for the optional compiled search kernel.

The package is fully functional without the extension (a pure-Python
kernel is selected at import time); the extension is only a fast path.
Any failure to cythonize or compile therefore degrades to a warning.
"""

import sys

from setuptools import Extension, setup


def _extensions():
    try:
        import numpy
        from Cython.Build import cythonize
    except ImportError as exc:
        print(f"causalcf: skipping compiled kernel ({exc})", file=sys.stderr)
        return []
    ext = Extension(
        "causalcf._kernel_c",
        ["src/causalcf/_kernel_c.pyx"],
        include_dirs=[numpy.get_include()],
        define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    )
    return cythonize([ext], language_level=3)


setup(ext_modules=_extensions())
