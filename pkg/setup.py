"""Build script.  The constraint kernel compiles to a C extension when
Cython and a C compiler are available; the package falls back to the
pure-numpy kernel at import time when the extension is absent, so a failed
extension build is not fatal."""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension
    import numpy

    ext_modules = cythonize(
        [
            Extension(
                "mechsketch.kinematics._ckernel",
                ["src/mechsketch/kinematics/_ckernel.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        language_level=3,
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
