"""Backend selection for the hot kernels.

The compiled extension is used when it imports; ``RICHRIS_PURE_PYTHON=1``
forces the numpy fallback.
"""
import os

from richris import _kernels_py

BACKEND = "python"
_impl = _kernels_py

if os.environ.get("RICHRIS_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from richris import _kernels as _impl  # noqa: F811

        BACKEND = "compiled"
    except ImportError:
        _impl = _kernels_py

bessel_j0_y0 = _impl.bessel_j0_y0
hankel0_2 = _impl.hankel0_2
flip_scan = _impl.flip_scan

__all__ = ["BACKEND", "bessel_j0_y0", "hankel0_2", "flip_scan"]
