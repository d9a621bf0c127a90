"""Backend selection for the hot grid kernels.

The compiled Cython extension is preferred when importable; the numpy
reference implementation is the fallback.  Both produce bitwise-identical
results.  Override with the environment variable POROCELL_KERNELS set to
"cython", "python", or "auto" (default).
"""

import os
import warnings

from . import _ref

_requested = os.environ.get("POROCELL_KERNELS", "auto").lower()

BACKEND = "python"
_impl = _ref

if _requested in ("auto", "cython"):
    try:
        from . import _core as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        if _requested == "cython":
            warnings.warn(
                "POROCELL_KERNELS=cython requested but the compiled "
                "extension is unavailable; falling back to numpy kernels",
                RuntimeWarning,
                stacklevel=2,
            )
elif _requested != "python":
    warnings.warn(
        f"unknown POROCELL_KERNELS value {_requested!r}; using numpy kernels",
        RuntimeWarning,
        stacklevel=2,
    )

hj_step = _impl.hj_step

__all__ = ["BACKEND", "hj_step", "_ref"]
