"""Builds the optional compiled convolution kernel.

The package works without it (a numpy fallback is selected at import time),
so a failed extension build is logged but does not abort the install.
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "skelscene.backend._convkernel",
                ["src/skelscene/backend/_convkernel.pyx"],
                include_dirs=[np.get_include()],
                # -ffast-math lets the compiler vectorize the window dot
                # products (reassociation); finite-math stays off so inf/nan
                # inputs keep IEEE comparison semantics.
                extra_compile_args=[
                    "-O3",
                    "-march=native",
                    "-ffast-math",
                    "-fno-finite-math-only",
                ],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
