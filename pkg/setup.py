import os

from setuptools import setup

ext_modules = []
if os.environ.get("KSFLUID_NO_EXT") != "1":
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension

        ext_modules = cythonize(
            [
                Extension(
                    "ksfluid.kernels._ckernels",
                    ["src/ksfluid/kernels/_ckernels.pyx"],
                    include_dirs=[np.get_include()],
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        # no Cython available: install the pure-Python fallback only
        ext_modules = []

setup(ext_modules=ext_modules)
