import numpy as np
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # pure-Python install; kernels fall back to numpy
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "sdmm._ckernels",
                ["src/sdmm/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                # no FMA contraction: the fallback must match bit-for-bit
                extra_compile_args=["-O2", "-ffp-contract=off"],
                optional=True,
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
