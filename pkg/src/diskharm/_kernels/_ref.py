"""Pure numpy/scipy reference implementation of the design-matrix kernels.

Slower than the compiled backend (scipy.special.jv is called per column) but
dependency-light; used when the extension is unavailable or when
DISKHARM_FORCE_FALLBACK is set. Semantics match _fast exactly.
"""

import numpy as np
from scipy import special


def bessel_jn_array(m, x, out):
    out[:] = special.jv(m, x)


def fill_design(rho, phi, morder, lvals, amp, kind, out):
    """out[j, i] = amp[j] * J_{m_j}(l_j rho_i) * T_j(phi_i).

    T_j is 1 (kind 0), cos(m_j phi) (kind 1) or sin(m_j phi) (kind 2).
    The trig factor is cached between consecutive columns sharing m.
    """
    cached_m = -1
    cosm = sinm = None
    for j in range(len(morder)):
        m = int(morder[j])
        kd = int(kind[j])
        rad = special.jv(m, lvals[j] * rho)
        if kd == 0:
            out[j, :] = amp[j] * rad
            continue
        if m != cached_m:
            mphi = m * phi
            cosm = np.cos(mphi)
            sinm = np.sin(mphi)
            cached_m = m
        if kd == 1:
            out[j, :] = amp[j] * rad * cosm
        else:
            out[j, :] = amp[j] * rad * sinm
