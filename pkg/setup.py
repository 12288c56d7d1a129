"""Build script: compiles the optional simplex pivot kernel.

The package is fully functional without the extension (a NumPy fallback is
selected at import time); the compiled kernel is a large speedup for the
branch-and-bound and constraint-generation workloads.  The build therefore
never fails hard: if Cython or a C compiler is missing, the extension is
simply skipped.

Set ROBREC_NO_EXT=1 to force a pure-Python build.
"""

import os
import warnings

from setuptools import Extension, setup
from setuptools.command.build_ext import build_ext


class optional_build_ext(build_ext):
    """build_ext that degrades to a pure-Python install on compile failure."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler missing, etc.
            warnings.warn(f"skipping compiled kernel ({exc}); using NumPy fallback")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            warnings.warn(f"skipping {ext.name} ({exc}); using NumPy fallback")


ext_modules = []
if not os.environ.get("ROBREC_NO_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "robrec._simplex_cy",
                    ["src/robrec/_simplex_cy.pyx"],
                    extra_compile_args=["-O3"],
                )
            ],
            compiler_directives={
                "language_level": 3,
                "boundscheck": False,
                "wraparound": False,
                "cdivision": True,
                "initializedcheck": False,
            },
        )
    except ImportError:
        warnings.warn("Cython not available; building without the compiled kernel")

setup(ext_modules=ext_modules, cmdclass={"build_ext": optional_build_ext})
