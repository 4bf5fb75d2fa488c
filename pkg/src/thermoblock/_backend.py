"""Select the compiled kernels when importable, else the pure-Python fallback.

Set ``THERMOBLOCK_BACKEND=python`` to force the fallback.
"""
import os

if os.environ.get("THERMOBLOCK_BACKEND", "").lower() == "python":
    from . import _fallback as kernels
    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels
        BACKEND = "cython"
    except ImportError:  # extension not built
        from . import _fallback as kernels
        BACKEND = "python"

__all__ = ["kernels", "BACKEND"]
