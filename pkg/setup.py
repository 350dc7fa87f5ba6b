"""Build script for the optional compiled kernel.

The package works without the extension (a pure-Python fallback is selected
at import time), so a failed extension build must not fail the install.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "impulsekit._kernels._speedups",
                ["src/impulsekit/_kernels/_speedups.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - depends on build environment
    print("impulsekit: skipping compiled kernel build (%s)" % exc)

setup(ext_modules=ext_modules)
