"""Build glue for the optional Cython kernel extension.

The package works without the extension (pure-numpy fallback); the build is
marked optional so installation succeeds on machines without a C toolchain.
Build in place for development with:

    python setup.py build_ext --inplace
"""

from setuptools import Extension, setup

try:
    import numpy
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "vidfactor.kernels._opt",
                ["src/vidfactor/kernels/_opt.pyx"],
                include_dirs=[numpy.get_include()],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )
    for ext in extensions:
        ext.optional = True
except ImportError:
    extensions = []

setup(ext_modules=extensions)
