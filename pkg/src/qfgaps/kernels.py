"""Hot loops, dispatched to the compiled extension when it is importable.

Set ``QFGAPS_PURE_PYTHON=1`` to force the numpy fallback.
"""

import os

from . import _fallback

BACKEND = "python"
if os.environ.get("QFGAPS_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _fallback
else:
    _impl = _fallback

mark_form_segment = _impl.mark_form_segment
partial_sum_maxima = _impl.partial_sum_maxima

__all__ = ["BACKEND", "mark_form_segment", "partial_sum_maxima"]
