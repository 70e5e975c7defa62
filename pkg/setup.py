"""Build the optional compiled recursion; the package works without it."""

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # fall back to the pure numpy recursion
    ext_modules = []
else:
    ext_modules = cythonize(
        [Extension("spikedkpz.polymer._core", ["src/spikedkpz/polymer/_core.pyx"],
                   extra_compile_args=["-O3"])],
        language_level=3,
    )

setup(ext_modules=ext_modules)
