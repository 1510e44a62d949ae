"""Backend selector for the step loops.

The compiled extension is used when present; setting HYPOKIN_PURE=1
forces the numpy reference implementation.  Both expose the same
in-place functions, and the test suite pins their agreement, so the
choice affects speed only.
"""

from __future__ import annotations

import os

if os.environ.get("HYPOKIN_PURE", "") == "1":
    from . import _kernels_py as _impl

    _BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]

        _BACKEND = "compiled"
    except ImportError:
        from . import _kernels_py as _impl

        _BACKEND = "python"

advance_rank_one = _impl.advance_rank_one
advance_dense = _impl.advance_dense


def backend_name() -> str:
    return _BACKEND


__all__ = ["advance_rank_one", "advance_dense", "backend_name"]
