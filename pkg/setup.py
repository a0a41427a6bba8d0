from setuptools import setup
from setuptools.extension import Extension

try:
    from Cython.Build import cythonize

    extensions = cythonize(
        [
            Extension(
                "hpctopics._fastkernels",
                ["src/hpctopics/_fastkernels.pyx"],
                extra_compile_args=["-O3"],
                optional=True,
            )
        ],
        language_level="3",
    )
except ImportError:
    # No Cython available: install with the pure-python kernel backend only.
    extensions = []

setup(ext_modules=extensions)
