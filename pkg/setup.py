import numpy
from setuptools import Extension, setup

ext = Extension(
    "sphereimm._ckernels",
    ["src/sphereimm/_ckernels.pyx"],
    include_dirs=[numpy.get_include()],
    extra_compile_args=["-O3", "-fopenmp"],
    extra_link_args=["-fopenmp"],
    define_macros=[("NPY_NO_DEPRECATED_API", "NPY_1_7_API_VERSION")],
    optional=True,
)

try:
    from Cython.Build import cythonize

    ext_modules = cythonize([ext], language_level=3)
except Exception as exc:  # no Cython or a translation error: ship the NumPy fallback
    print(f"warning: compiled kernels disabled ({exc})")
    ext_modules = []

setup(ext_modules=ext_modules)
