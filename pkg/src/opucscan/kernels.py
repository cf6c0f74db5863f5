"""Backend selection for the hot loops.

The compiled extension is used when it is importable; setting the environment
variable ``OPUCSCAN_PURE_PYTHON=1`` forces the numpy fallback.
"""
import os

from . import _pykernels

if os.environ.get("OPUCSCAN_PURE_PYTHON", "").strip() not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

prufer_trajectory = _impl.prufer_trajectory
prufer_final = _impl.prufer_final
scan_block = _impl.scan_block


def compiled_available() -> bool:
    try:
        from . import _ckernels  # noqa: F401
    except ImportError:
        return False
    return True
