"""Build script: compiles the Cython filter kernels when Cython is available.

The package works without the extension (a pure-Python fallback is selected
at import time), but backtests over thousands of rolling windows are much
faster with it.  Build in place with::

    python setup.py build_ext --inplace
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    extensions = [
        Extension(
            "regime_ogarch._kernels._core",
            ["src/regime_ogarch/_kernels/_core.pyx"],
            include_dirs=[numpy.get_include()],
            extra_compile_args=["-O3"],
        )
    ]
    ext_modules = cythonize(
        extensions,
        compiler_directives={
            "language_level": 3,
            "boundscheck": False,
            "wraparound": False,
            "cdivision": True,
        },
    )

setup(ext_modules=ext_modules)
