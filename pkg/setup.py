"""Build script for the optional compiled edit-distance/TER kernel.

The package works without the extension: pedal.metrics falls back to the
pure-Python kernel in pedal._edit_py when pedal._edit_cy is unavailable.
A failed extension build therefore degrades to a slower install instead
of breaking it.
"""

from setuptools import setup

ext_modules = []
try:
    from Cython.Build import cythonize
    from setuptools import Extension

    ext_modules = cythonize(
        [
            Extension(
                "pedal._edit_cy",
                ["src/pedal/_edit_cy.pyx"],
                extra_compile_args=["-O3"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )
except Exception as exc:  # pragma: no cover - build-environment dependent
    import sys

    print(f"pedal: skipping compiled kernel ({exc}); "
          "pure-Python fallback will be used", file=sys.stderr)

setup(ext_modules=ext_modules)
