"""Backend selection for the hot loops.

The compiled extension is used when importable. Setting ``WHSID_PURE=1`` in the
environment forces the NumPy/SciPy fallback.
"""

import os

from . import _fallback

BACKEND = "python"
if os.environ.get("WHSID_PURE") != "1":
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _fallback
else:
    _impl = _fallback

df2t_filter = _impl.df2t_filter
period_variance = _impl.period_variance

__all__ = ["BACKEND", "df2t_filter", "period_variance"]
