"""Build the optional compiled iteration kernel.

The package works without it; ``adasplit.backend`` falls back to the numpy
implementation when the extension is absent.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("ADASPLIT_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize
        from setuptools.extension import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [
                Extension(
                    "adasplit._kernels",
                    ["src/adasplit/_kernels.pyx"],
                    extra_compile_args=["-O2", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
