"""Build script for the optional compiled kernel extension.

The package is fully functional without the extension (pure-Python
fallbacks are selected at import time), so a failed compile only costs
speed. Build with ``pip install -e . --no-build-isolation``.
"""

from setuptools import setup
from setuptools.command.build_ext import build_ext


class OptionalBuildExt(build_ext):
    """Let the install proceed if the extension cannot be compiled."""

    def run(self):
        try:
            super().run()
        except Exception as exc:  # compiler or Cython missing
            print(f"warning: skipping compiled kernels ({exc}); pure-Python fallback will be used")

    def build_extension(self, ext):
        try:
            super().build_extension(ext)
        except Exception as exc:
            print(f"warning: could not build {ext.name} ({exc}); pure-Python fallback will be used")


try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        ["src/promptmap/_kernels/_core.pyx"],
        language_level=3,
    )
except ImportError:
    ext_modules = []

setup(
    ext_modules=ext_modules,
    cmdclass={"build_ext": OptionalBuildExt},
)
