import os

from setuptools import Extension, setup

# The compiled kernels are an optional speedup; the package falls back to
# the pure-Python kernels at import time when the extension is missing.
ext_modules = []
if not os.environ.get("SYMNMF_SKIP_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [
                Extension(
                    "symnmf._ckernels",
                    ["src/symnmf/_ckernels.pyx"],
                    # -ffp-contract=off forbids FMA so the compiled kernels
                    # are bit-identical to the pure-Python reference.
                    extra_compile_args=["-O3", "-ffp-contract=off"],
                )
            ],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
