import os

from setuptools import Extension, setup

# The compiled skeleton lexer is an optional speedup; the package falls back
# to the pure-Python lexer when the extension is absent.
ext_modules = []
if not os.environ.get("CROSSTIER_NO_EXT"):
    try:
        from Cython.Build import cythonize

        ext_modules = cythonize(
            [Extension("crosstier._sqlnorm", ["src/crosstier/_sqlnorm.pyx"])],
            compiler_directives={"language_level": "3"},
        )
    except ImportError:
        ext_modules = []

setup(ext_modules=ext_modules)
