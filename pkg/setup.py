import os

from setuptools import Extension, setup

# The compiled bitset kernel is optional: the package falls back to the pure
# Python implementation when the extension is absent (see attlat/kernels.py).
ext_modules = []
if os.environ.get("ATTLAT_NO_EXT") != "1":
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [Extension("attlat._core", ["src/attlat/_core.pyx"])],
            language_level=3,
        )
    except Exception as exc:  # pragma: no cover
        print(f"attlat: skipping compiled kernel ({exc})")
        ext_modules = []

setup(ext_modules=ext_modules)
