"""Hot kernels: the compiled extension when built, the numpy fallback otherwise.

Set ``GEOSEP_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if not os.environ.get("GEOSEP_PURE_PYTHON"):
    try:
        from . import _kernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py

dual_step = _impl.dual_step
soft_shrink = _impl.soft_shrink
gather_sums = _impl.gather_sums
