"""Pick the coordinate-descent backend at import time.

The compiled extension is used when it was built; set
``BMTSELECT_PURE_PYTHON=1`` to force the pure-Python kernel.
"""

import os

from . import _cd_py

BACKEND = "python"
cd_gram = _cd_py.cd_gram

if os.environ.get("BMTSELECT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _cd
    except ImportError:  # extension not built
        pass
    else:
        cd_gram = _cd.cd_gram
        BACKEND = "cython"

__all__ = ["BACKEND", "cd_gram"]
