"""Build script: compiles the optional fast kernel when Cython is available.

The package is fully functional without the extension; industrialbench.backend
falls back to the pure-Python rollout at import time.
"""

from pathlib import Path

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

if cythonize is None or not Path("src/industrialbench/_kernel.pyx").exists():
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "industrialbench._kernel",
                ["src/industrialbench/_kernel.pyx"],
                # -ffp-contract=off keeps the C arithmetic bit-identical to the
                # pure-Python reference (no fused multiply-add contraction).
                extra_compile_args=["-O2", "-ffp-contract=off"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
