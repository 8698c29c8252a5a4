"""Builds the lagkit._core extension straight from the C++ sources.

The CMake build remains the primary path (library, CLI, test suites);
this setup exists so `pip install .` works without CMake orchestration.
"""

import os
from glob import glob

from pybind11.setup_helpers import Pybind11Extension, build_ext
from setuptools import setup


def first_existing(paths, kind):
    for path in paths:
        if os.path.exists(path):
            return path
    raise RuntimeError(f"cannot locate {kind}; looked in {paths}")


here = os.path.abspath(os.path.dirname(__file__))

eigen_dir = first_existing(
    [
        os.environ.get("EIGEN3_INCLUDE_DIR", ""),
        "/usr/include/eigen3",
        "/usr/local/include/eigen3",
    ],
    "the Eigen headers",
)

vendor_dir = first_existing(
    [os.path.join(here, "vendor"), "/opt/vendor"],
    "the vendored single-header libraries",
)

# Source paths must stay relative for editable installs.
extension = Pybind11Extension(
    "lagkit._core",
    sorted(glob("src/*.cpp")) + ["bindings/module.cpp"],
    include_dirs=["include", vendor_dir, eigen_dir],
    cxx_std=20,
    define_macros=[("LAGKIT_HAS_PNG", "1")],
    libraries=["png", "z"],
)

setup(ext_modules=[extension], cmdclass={"build_ext": build_ext})
