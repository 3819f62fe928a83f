"""Kernel backend selection.

The compiled extension is preferred; the pure-Python fallback keeps the
package importable without a C toolchain.  Set REGIME_OGARCH_FORCE_FALLBACK=1
to force the fallback (used by the benchmark and the parity tests).
"""

import os

if os.environ.get("REGIME_OGARCH_FORCE_FALLBACK") == "1":
    from . import fallback as _impl

    BACKEND = "python"
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        from . import fallback as _impl

        BACKEND = "python"

garch_recursion = _impl.garch_recursion
mrs_recursion = _impl.mrs_recursion

__all__ = ["garch_recursion", "mrs_recursion", "BACKEND"]
