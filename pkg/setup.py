"""Build script for the optional compiled kernel extension.

The package is fully functional without the extension: pihsim.kernels
falls back to the pure-Python reference implementation when the compiled
module is absent (or when PIHSIM_PURE_PYTHON=1).
"""

from setuptools import Extension, setup

ext_modules = []
try:
    import numpy as np
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "pihsim.kernels._fastkern",
                ["src/pihsim/kernels/_fastkern.pyx"],
                include_dirs=[np.get_include()],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except ImportError:
    pass

setup(ext_modules=ext_modules)
