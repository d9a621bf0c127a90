import numpy
from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:
    cythonize = None

ext_modules = []
if cythonize is not None:
    # -ffp-contract=off keeps the compiled kernels bitwise-identical to the
    # numpy fallback (no fused multiply-adds).
    ext_modules = cythonize(
        [
            Extension(
                "porocell._kernels._core",
                sources=["src/porocell/_kernels/_core.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3", "-ffp-contract=off"],
                define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
                optional=True,
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
