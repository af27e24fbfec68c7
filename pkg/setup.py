"""Build the optional compiled kernels.

Package metadata lives in pyproject.toml; only the extension module is
declared here.  If Cython or a C compiler is unavailable the package still
installs and falls back to the pure-Python kernels at import.
"""
import os

from setuptools import setup

ext_modules = []
if os.environ.get("ETLPV_NO_EXT", "") in ("", "0"):
    try:
        import numpy as np
        from Cython.Build import cythonize
        from setuptools import Extension
    except ImportError:
        pass
    else:
        ext_modules = cythonize(
            [Extension(
                "etlpv._kernels._ckernels",
                ["src/etlpv/_kernels/_ckernels.pyx"],
                include_dirs=[np.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )],
            compiler_directives={"language_level": "3"},
        )

setup(ext_modules=ext_modules)
