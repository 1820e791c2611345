"""Hot kernels with a compiled backend and a numpy fallback.

The compiled extension is used when it was built and importable; set
``CURVEMAG_PURE_PYTHON=1`` to force the fallback.  ``BACKEND`` names the
active implementation.
"""
import os

from . import _fallback

try:
    if os.environ.get("CURVEMAG_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("fallback forced by CURVEMAG_PURE_PYTHON")
    from . import _ext
except ImportError:
    _ext = None

if _ext is not None:
    boundary_log_sum = _ext.boundary_log_sum
    chain_dmi = _ext.chain_dmi
    BACKEND = "compiled"
else:
    boundary_log_sum = _fallback.boundary_log_sum
    chain_dmi = _fallback.chain_dmi
    BACKEND = "python"

BACKENDS = {"python": _fallback}
if _ext is not None:
    BACKENDS["compiled"] = _ext

__all__ = ["BACKEND", "BACKENDS", "boundary_log_sum", "chain_dmi"]
