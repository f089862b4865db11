"""Build script: compiles the walker hot-loop extension when Cython and a C
toolchain are available.  The package imports fine without it (a pure-Python
kernel is selected at import time), so failures here are non-fatal.
"""

import sys

from setuptools import setup

ext_modules = []
try:
    import numpy
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "phasewalk._walk_fast",
                ["src/phasewalk/_walk_fast.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
except Exception as exc:  # pragma: no cover - toolchain-dependent
    sys.stderr.write(
        f"phasewalk: building without the compiled walker kernel ({exc!r}); "
        "the pure-Python fallback will be used\n"
    )

setup(ext_modules=ext_modules)
