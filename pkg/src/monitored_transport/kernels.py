"""Backend selection for the per-frequency kernels.

The compiled extension is used when it was built; set ``MT_PURE_PYTHON=1``
to force the NumPy fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("MT_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py

resolvent = _impl.resolvent
sandwich = _impl.sandwich
trace_sandwich = _impl.trace_sandwich
superop = _impl.superop

__all__ = ["BACKEND", "resolvent", "sandwich", "trace_sandwich", "superop"]
