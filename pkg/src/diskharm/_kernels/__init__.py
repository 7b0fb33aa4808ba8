"""Design-matrix assembly kernels with automatic backend selection.

The compiled Cython backend is used when importable; otherwise (or when the
environment variable DISKHARM_FORCE_FALLBACK is set to a non-empty value) the
pure scipy reference implementation is used. Both export the same functions:

- fill_design(rho, phi, morder, lvals, amp, kind, out)
- bessel_jn_array(m, x, out)
"""

import os

if os.environ.get("DISKHARM_FORCE_FALLBACK"):
    from . import _ref as _backend

    BACKEND = "fallback"
else:
    try:
        from . import _fast as _backend

        BACKEND = "compiled"
    except ImportError:  # extension not built
        from . import _ref as _backend

        BACKEND = "fallback"

fill_design = _backend.fill_design
bessel_jn_array = _backend.bessel_jn_array

__all__ = ["fill_design", "bessel_jn_array", "BACKEND"]
