import numpy
from setuptools import Extension, setup

# The compiled kernels are an optional speedup; the package falls back to
# the numpy implementations in fastgates._kernels_py when the extension is
# absent, so a missing Cython toolchain must not block installation.
try:
    from Cython.Build import cythonize
except ImportError:
    ext_modules = []
else:
    ext_modules = cythonize(
        [
            Extension(
                "fastgates._speedups",
                ["src/fastgates/_speedups.pyx"],
                include_dirs=[numpy.get_include()],
                extra_compile_args=["-O3"],
            )
        ],
        language_level=3,
    )

setup(ext_modules=ext_modules)
