"""Fourier-Bessel basis on the unit disk.

The basis functions are D_m^k(rho, phi) = N_m^k J_m(l(m)_k rho) e^{i m phi},
orthonormal over the unit disk with the area measure rho drho dphi. The
wavenumbers l(m)_k make J'_m (Neumann, default) or J_m (Dirichlet) vanish at
rho = 1. For order m, l(m)_k is the (k - m + 1)-th admissible root, so the
table is populated for k >= m only; the trivial root x = 0 is admissible only
for (m = 0, Neumann), giving the constant mode l(0)_0 = 0. Negative orders
follow the Condon-Shortley relation D_{-m}^k = (-1)^m conj(D_m^k).
"""

import csv
import enum
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import special

from .errors import GeometryError, UsageError

SQRT_PI = np.sqrt(np.pi)


class BoundaryCondition(enum.Enum):
    NEUMANN = "neumann"
    DIRICHLET = "dirichlet"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise UsageError(f"unknown boundary condition {value!r}") from None


def bessel_j(m, x):
    """Bessel function of the first kind J_m(x), integer order m >= 0."""
    m = np.asarray(m)
    if np.any(m < 0) or np.any(m != np.floor(m)):
        raise UsageError("bessel_j: order must be a nonnegative integer")
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0):
        raise UsageError("bessel_j: argument must be nonnegative")
    out = special.jv(m, x)
    return float(out) if np.isscalar(out) or out.ndim == 0 else out


def bessel_j_prime(m, x):
    """Derivative J'_m(x) via J'_m = (J_{m-1} - J_{m+1})/2, with J'_0 = -J_1."""
    m_arr = np.asarray(m)
    if np.any(m_arr < 0) or np.any(m_arr != np.floor(m_arr)):
        raise UsageError("bessel_j_prime: order must be a nonnegative integer")
    x = np.asarray(x, dtype=np.float64)
    if np.any(x < 0):
        raise UsageError("bessel_j_prime: argument must be nonnegative")
    out = np.where(m_arr == 0,
                   -special.jv(1, x),
                   0.5 * (special.jv(m_arr - 1, x) - special.jv(m_arr + 1, x)))
    return float(out) if out.ndim == 0 else out


def _target(m, bc):
    if bc is BoundaryCondition.NEUMANN:
        return lambda x: bessel_j_prime(m, x)
    return lambda x: bessel_j(m, x)


def _mueller_refine(f, lo, hi, m, residual=1e-13, max_iter=100):
    """Refine a sign-change bracket [lo, hi] with Mueller's method.

    The quadratic-interpolation step is safeguarded by the bracket: any
    iterate falling outside it is replaced by a bisection step, and the
    bracket shrinks every iteration.
    """
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    x0, x1, x2 = lo, 0.5 * (lo + hi), hi
    f0, f1, f2 = flo, f(x1), fhi
    best_x, best_f = x2, abs(f2)
    for _ in range(max_iter):
        for xx, ff in ((x0, f0), (x1, f1), (x2, f2)):
            if abs(ff) < best_f:
                best_x, best_f = xx, abs(ff)
        if best_f < residual:
            return best_x
        h1 = x1 - x0
        h2 = x2 - x1
        x3 = None
        if h1 != 0.0 and h2 != 0.0 and (h1 + h2) != 0.0:
            d1 = (f1 - f0) / h1
            d2 = (f2 - f1) / h2
            dd = (d2 - d1) / (h1 + h2)
            w = d2 + h2 * dd
            disc = w * w - 4.0 * f2 * dd
            if disc >= 0.0:
                rt = np.sqrt(disc)
                den = w + rt if abs(w + rt) > abs(w - rt) else w - rt
                if den != 0.0:
                    x3 = x2 - 2.0 * f2 / den
        if x3 is None or not (lo < x3 < hi):
            x3 = 0.5 * (lo + hi)
        f3 = f(x3)
        if f3 == 0.0:
            return x3
        # maintain the sign-change bracket
        if (f3 > 0) == (flo > 0):
            lo, flo = x3, f3
        else:
            hi, fhi = x3, f3
        x0, f0, x1, f1 = x1, f1, x2, f2
        x2, f2 = x3, f3
        if hi - lo < 1e-15 * max(1.0, hi):
            for xx, ff in ((lo, flo), (hi, fhi), (x3, f3)):
                if abs(ff) < best_f:
                    best_x, best_f = xx, abs(ff)
            return best_x
    if best_f < 1e-10:
        return best_x
    raise GeometryError(
        f"eigenvalue refinement did not converge for m={m}, bracket=({lo}, {hi})")


def find_eigenvalues(m, count, bc=BoundaryCondition.NEUMANN):
    """First `count` admissible roots of J'_m (Neumann) or J_m (Dirichlet).

    A grid scan with step pi/8 brackets sign changes (the minimum spacing of
    consecutive roots exceeds pi, so none can be skipped); each bracket is
    refined with a safeguarded Mueller iteration to |f| < 1e-13. The found
    count is validated against the asymptotic root density (one per pi).
    """
    if count < 1:
        raise UsageError("find_eigenvalues: count must be >= 1")
    bc = BoundaryCondition.parse(bc)
    f = _target(m, bc)
    roots = []
    if m == 0 and bc is BoundaryCondition.NEUMANN:
        roots.append(0.0)
    # no positive roots lie below ~max(1, 0.8 m); scanning from there also
    # avoids the far-underflow region of J_m for large orders
    start = max(1e-6, 0.8 * m)
    step = np.pi / 8.0
    hi = start + (count + 2) * np.pi + 0.55 * m + 10.0
    while len(roots) < count:
        xs = np.arange(start, hi, step)
        vals = np.asarray(f(xs))
        sign_change = np.nonzero((vals[:-1] * vals[1:] < 0))[0]
        exact = np.nonzero(vals == 0.0)[0]
        brackets = sorted(
            [(xs[i], xs[i + 1]) for i in sign_change]
            + [(xs[i], xs[i]) for i in exact if xs[i] > 0])
        for blo, bhi in brackets:
            if len(roots) >= count:
                break
            if blo == bhi:
                val = float(blo)
            else:
                val = float(_mueller_refine(f, blo, bhi, m))
            if roots and abs(val - roots[-1]) < 1e-6:
                continue  # seam duplicate from an overlapping re-scan window
            roots.append(val)
        if len(roots) >= count:
            break
        start, hi = hi - step, hi + (count - len(roots) + 2) * np.pi
    roots = roots[:count]
    # density sanity check: expected index of the largest root from the
    # asymptote x ~ (s + m/2 - 3/4) pi
    top = roots[-1]
    if top > m + 5:
        expected = top / np.pi - m / 2.0 + 0.75
        actual = count - (1 if (m == 0 and bc is BoundaryCondition.NEUMANN) else 0)
        if abs(expected - actual) > 2.5 + 0.5 * m:
            raise GeometryError(
                f"root count {actual} for m={m} disagrees with asymptotic density "
                f"({expected:.1f} expected near x={top:.2f})")
    return np.asarray(roots)


def normalization(m, l_mk, bc=BoundaryCondition.NEUMANN):
    """Normalization factor N_m^k making the basis orthonormal on the disk.

    Neumann: N = J_m(l)^{-1} / sqrt(pi (1 - m^2/l^2)), with the degenerate
    constant mode (m = 0, l = 0) hard-coded to 1/sqrt(pi). Dirichlet: the
    boundary term vanishes instead, giving N = J'_m(l)^{-1} / sqrt(pi).
    """
    bc = BoundaryCondition.parse(bc)
    if l_mk == 0.0:
        if m == 0 and bc is BoundaryCondition.NEUMANN:
            return 1.0 / SQRT_PI
        raise UsageError("normalization: l = 0 is degenerate for m >= 1")
    if bc is BoundaryCondition.NEUMANN:
        return 1.0 / (bessel_j(m, l_mk) * np.sqrt(np.pi * (1.0 - m * m / (l_mk * l_mk))))
    return 1.0 / (bessel_j_prime(m, l_mk) * SQRT_PI)


@dataclass(frozen=True)
class EigenTable:
    """Eigenvalues l(m)_k and normalizations N_m^k for 0 <= m <= k <= K_max.

    Arrays are indexed [m, k]; entries with m > k are NaN and never read.
    """

    k_max: int
    bc: BoundaryCondition
    l: np.ndarray
    N: np.ndarray

    @classmethod
    def build(cls, k_max, bc=BoundaryCondition.NEUMANN):
        bc = BoundaryCondition.parse(bc)
        if k_max < 0:
            raise UsageError("EigenTable: k_max must be >= 0")
        size = k_max + 1
        l = np.full((size, size), np.nan)
        N = np.full((size, size), np.nan)
        for m in range(size):
            roots = find_eigenvalues(m, size - m, bc)
            l[m, m:] = roots
            N[m, m:] = [normalization(m, r, bc) for r in roots]
        table = cls(k_max=k_max, bc=bc, l=l, N=N)
        table._validate()
        return table

    def _validate(self):
        for m in range(self.k_max + 1):
            row = self.l[m, m:]
            if np.any(np.diff(row) <= 0):
                raise GeometryError(f"eigenvalues not increasing for m={m}")
            pos = row[row > 0]
            f = _target(m, self.bc)
            res = np.abs(np.asarray(f(pos)))
            if res.size and res.max() > 1e-10:
                raise GeometryError(f"eigenvalue residual {res.max():g} too large for m={m}")
        # asymptotic pi spacing on the low-order ladders (higher orders stay
        # in the Airy transition zone within this table's k range)
        for m in (0, 1):
            if self.k_max - m >= 21:
                row = self.l[m, max(m, 20):]
                gaps = np.diff(row)
                if np.any(np.abs(gaps - np.pi) > 0.05):
                    raise GeometryError(f"root spacing off pi asymptote for m={m}")

    def eigenvalue(self, k, m):
        m = abs(m)
        self._check_indices(k, m)
        return float(self.l[m, k])

    def norm_factor(self, k, m):
        m = abs(m)
        self._check_indices(k, m)
        return float(self.N[m, k])

    def _check_indices(self, k, m):
        if not (0 <= m <= k <= self.k_max):
            raise UsageError(f"basis index out of range: k={k}, m={m}, K_max={self.k_max}")

    def pairs(self):
        """All (k, m >= 0) pairs in analysis column order, with l and N."""
        out = []
        for k in range(self.k_max + 1):
            for m in range(k + 1):
                out.append((k, m, float(self.l[m, k]), float(self.N[m, k])))
        return out

    def to_csv(self, path):
        """Write `m,k,l,N` rows (15 significant digits) for all m <= k."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["m", "k", "l", "N"])
            for k in range(self.k_max + 1):
                for m in range(k + 1):
                    writer.writerow([m, k, f"{self.l[m, k]:.15g}", f"{self.N[m, k]:.15g}"])


@lru_cache(maxsize=8)
def get_table(k_max, bc=BoundaryCondition.NEUMANN):
    """Cached EigenTable for (k_max, bc)."""
    return EigenTable.build(k_max, BoundaryCondition.parse(bc))


def eval_basis(table, k, m, rho, phi):
    """Evaluate D_m^k at (rho, phi); m may be negative (Condon-Shortley)."""
    rho = np.asarray(rho, dtype=np.float64)
    phi = np.asarray(phi, dtype=np.float64)
    if np.any(rho < -1e-12) or np.any(rho > 1.0 + 1e-9):
        raise UsageError("eval_basis: rho must lie in [0, 1]")
    ma = abs(m)
    lmk = table.eigenvalue(k, ma)
    nmk = table.norm_factor(k, ma)
    radial = nmk * special.jv(ma, lmk * rho)
    out = radial * np.exp(1j * ma * phi)
    if m < 0:
        out = (-1.0) ** ma * np.conj(out)
    return complex(out) if out.ndim == 0 else out


def wavelengths(k, fdec):
    """Radial and angular wavelengths of degree k for FDEC axes (a, b, c).

    omega_rho = 2 sqrt(a^2+b^2+c^2) / (k - 1/4);
    omega_phi = (2 pi / k) sqrt((a^2+b^2)/2).
    """
    if k < 1:
        raise UsageError("wavelengths: k must be >= 1")
    a, b, c = fdec
    if a < 0 or b < 0 or c < 0:
        raise UsageError("wavelengths: axes must be nonnegative")
    omega_rho = 2.0 * np.sqrt(a * a + b * b + c * c) / (k - 0.25)
    omega_phi = (2.0 * np.pi / k) * np.sqrt((a * a + b * b) / 2.0)
    return float(omega_rho), float(omega_phi)
