"""Build the optional Cython kernels.

Set QFRELAY_NO_EXT=1 to skip compilation; the package then runs on the
numpy fallback in ``qfrelay._kernels_py``.
"""
import os

from setuptools import Extension, setup


def _extensions():
    if os.environ.get("QFRELAY_NO_EXT"):
        return []
    try:
        from Cython.Build import cythonize
    except ImportError:
        return []
    ext = Extension(
        "qfrelay._kernels",
        ["src/qfrelay/_kernels.pyx"],
        # no fused multiply-add: the fallback must reproduce results bit for bit
        extra_compile_args=["-O3", "-ffp-contract=off"],
    )
    return cythonize(
        [ext],
        compiler_directives={
            "language_level": "3",
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )


setup(ext_modules=_extensions())
