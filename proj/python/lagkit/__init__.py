"""Gaussian-mixture supervector toolkit (LAG / RLAG / KLVEC vectorizations).

The heavy lifting lives in the compiled extension ``lagkit._core``. In an
installed wheel the extension sits inside this package; in a CMake build
tree it is found through the ``LAGKIT_EXTENSION_DIR`` environment variable.
"""

import os as _os
import sys as _sys

try:
    from lagkit._core import *  # noqa: F401,F403
    from lagkit import _core as _core  # noqa: F401
except ImportError:
    _ext_dir = _os.environ.get("LAGKIT_EXTENSION_DIR")
    if not _ext_dir:
        raise
    if _ext_dir not in _sys.path:
        _sys.path.insert(0, _ext_dir)
    import _core  # noqa: F401

    _sys.modules[__name__ + "._core"] = _core
    from _core import *  # noqa: F401,F403

__version__ = "1.0.0"
