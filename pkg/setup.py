import os

import numpy
from setuptools import Extension, setup

# no FMA contraction: the compiled and pure-Python paths must round identically
COMPILE_ARGS = ["-O3", "-ffp-contract=off"]

ext_modules = []
if os.environ.get("BRDAD_NO_EXT", "") in ("", "0"):
    from Cython.Build import cythonize

    ext_modules = cythonize(
        [
            Extension(
                "brdad._kdtree_ext",
                ["src/brdad/_kdtree_ext.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=COMPILE_ARGS,
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
