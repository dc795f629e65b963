"""Build script for the compiled similarity kernel.

The package works without the extension (a NumPy fallback is selected at
import time), so a failed compile should not block installation.
"""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("parc._kernels", ["src/parc/_kernels.pyx"])],
        language_level="3",
    )

setup(ext_modules=ext_modules)
