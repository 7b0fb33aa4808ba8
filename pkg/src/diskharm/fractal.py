"""Self-affine surface generation and Hurst-exponent estimation.

Surfaces are generated with the Fourier filter method: spectral amplitudes
follow an isotropic power law C(q), phases are drawn uniformly from a seeded
generator, Hermitian symmetry makes the inverse transform real, and the
result is rescaled to a target rms height. The analysis side computes the
m = 0 radial power spectrum of a harmonic decomposition and fits its log-log
decay, whose slope s relates to the Hurst exponent by H = -s/2 - 3/4.
"""

import json
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .analysis import coeff_index, descriptors
from .basis import BoundaryCondition, get_table
from .errors import GeometryError, UsageError
from .mesh import TriMesh
from .param import DiskParam

__all__ = [
    "PowerLawSpec",
    "HeightGrid",
    "iso_power_law",
    "generate_surface",
    "sample_circular_patch",
    "sample_square_patch",
    "Spectrum",
    "HurstFit",
    "psd_m0",
    "fit_hurst",
]


@dataclass(frozen=True)
class PowerLawSpec:
    """Isotropic self-affine spectrum parameters.

    Wavevectors are in cycles per grid extent (integer FFT bins when the
    extent equals n): q_r is the roll-off, q_l the lower power-law bound,
    q_s the short-wavelength cutoff.
    """

    hurst: float
    q_r: float = 0.0
    q_l: float = 4.0
    q_s: float = 256.0
    rms: float = 1.0
    seed: int = 0
    n: int = 512

    def __post_init__(self):
        if not (0.0 < self.hurst < 1.0):
            raise UsageError("hurst must be in (0, 1)")
        if not (0.0 <= self.q_r <= self.q_l < self.q_s):
            raise UsageError("wavevectors must satisfy q_r <= q_l < q_s")
        if self.rms <= 0:
            raise UsageError("rms must be positive")
        n = int(self.n)
        if n < 64 or (n & (n - 1)) != 0:
            raise UsageError("n must be a power of two, n >= 64")


def iso_power_law(q, spec):
    """Isotropic spectrum C(q): zero below q_r and at/above q_s, flat plateau
    on [q_r, q_l], power-law q^(-2(1+H)) on [q_l, q_s)."""
    q = np.asarray(q, dtype=np.float64)
    if np.any(q < 0):
        raise UsageError("wavevector magnitude must be nonnegative")
    expo = -2.0 * (1.0 + spec.hurst)
    out = np.zeros_like(q)
    plateau = (q >= spec.q_r) & (q <= spec.q_l)
    out[plateau] = spec.q_l**expo
    power = (q > spec.q_l) & (q < spec.q_s)
    out[power] = q[power] ** expo
    if out.ndim == 0:
        return float(out)
    return out


@dataclass(frozen=True)
class HeightGrid:
    """n x n real height field with physical extent and its generation spec."""

    heights: np.ndarray
    extent: float
    periodic: bool = True
    spec: PowerLawSpec = None

    def __post_init__(self):
        h = np.ascontiguousarray(np.asarray(self.heights, dtype=np.float64))
        if h.ndim != 2 or h.shape[0] != h.shape[1] or h.shape[0] < 2:
            raise UsageError("heights must be a square grid")
        if not np.all(np.isfinite(h)):
            raise GeometryError("non-finite heights")
        object.__setattr__(self, "heights", h)

    @property
    def n(self):
        return self.heights.shape[0]

    @property
    def spacing(self):
        return self.extent / self.n

    @property
    def rms(self):
        return float(np.sqrt(np.mean(self.heights**2)))

    def to_mesh(self):
        """Triangulated full grid (x = column, y = row, z = height)."""
        n = self.n
        d = self.spacing
        jj, ii = np.meshgrid(np.arange(n), np.arange(n))
        verts = np.column_stack(
            [jj.ravel() * d, ii.ravel() * d, self.heights.ravel()]
        )
        faces = _grid_faces(n, n)
        return TriMesh(vertices=verts, faces=faces)

    def save(self, path):
        """Write float32 binary (row-major) plus a JSON sidecar."""
        self.heights.astype(np.float32).tofile(path)
        side = {
            "n": self.n,
            "extent": self.extent,
            "rms": self.rms,
            "periodic": self.periodic,
        }
        if self.spec is not None:
            side.update(
                {
                    "seed": self.spec.seed,
                    "H": self.spec.hurst,
                    "q_r": self.spec.q_r,
                    "q_l": self.spec.q_l,
                    "q_s": self.spec.q_s,
                }
            )
        with open(str(path) + ".json", "w", encoding="utf-8") as fh:
            json.dump(side, fh, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(str(path) + ".json", encoding="utf-8") as fh:
            side = json.load(fh)
        n = int(side["n"])
        h = np.fromfile(path, dtype=np.float32)
        if h.size != n * n:
            raise UsageError(f"{path}: size does not match sidecar n={n}")
        spec = None
        if "H" in side:
            spec = PowerLawSpec(
                hurst=float(side["H"]),
                q_r=float(side.get("q_r", 0.0)),
                q_l=float(side.get("q_l", 4.0)),
                q_s=float(side.get("q_s", n / 2)),
                rms=max(float(side.get("rms", 1.0)), 1e-300),
                seed=int(side.get("seed", 0)),
                n=n,
            )
        return cls(
            heights=h.reshape(n, n).astype(np.float64),
            extent=float(side["extent"]),
            periodic=bool(side.get("periodic", True)),
            spec=spec,
        )


def _grid_faces(nrows, ncols):
    ii, jj = np.meshgrid(
        np.arange(nrows - 1), np.arange(ncols - 1), indexing="ij"
    )
    v00 = (ii * ncols + jj).ravel()
    v01 = v00 + 1
    v10 = v00 + ncols
    v11 = v10 + 1
    tri1 = np.column_stack([v00, v01, v11])
    tri2 = np.column_stack([v00, v11, v10])
    return np.concatenate([tri1, tri2], axis=0).astype(np.int64)


def generate_surface(spec, amplitude_noise=False):
    """Fourier-filter surface: |FFT| = sqrt(C(q)), seeded uniform phases.

    Hermitian symmetry is enforced (self-conjugate bins keep a random sign,
    the DC bin is zero) so the inverse transform is real; the heights are
    rescaled to spec.rms exactly. Setting amplitude_noise multiplies each
    amplitude by a Rayleigh factor of unit mean square.
    """
    n = spec.n
    rng = np.random.default_rng(spec.seed)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=(n, n))

    freq = np.fft.fftfreq(n, d=1.0 / n)  # signed integer bins
    qx, qy = np.meshgrid(freq, freq, indexing="ij")
    qmag = np.hypot(qx, qy)
    amp = np.sqrt(iso_power_law(qmag, spec))
    if amplitude_noise:
        amp = amp * rng.rayleigh(scale=np.sqrt(0.5), size=(n, n))

    F = amp * np.exp(1j * theta)
    idx = np.arange(n)
    Ii, Jj = np.meshgrid(idx, idx, indexing="ij")
    Im = (-Ii) % n
    Jm = (-Jj) % n
    self_conj = (Im == Ii) & (Jm == Jj)
    F[self_conj] = amp[self_conj] * np.where(
        np.cos(theta[self_conj]) >= 0.0, 1.0, -1.0
    )
    mirror_side = (Ii > Im) | ((Ii == Im) & (Jj > Jm))
    F[mirror_side] = np.conj(F[Im[mirror_side], Jm[mirror_side]])
    F[0, 0] = 0.0

    h = np.fft.ifft2(F).real
    h -= h.mean()
    scale = np.sqrt(np.mean(h**2))
    if scale <= 0:
        raise GeometryError("generated surface is identically zero")
    h *= spec.rms / scale
    return HeightGrid(heights=h, extent=float(n), periodic=True, spec=spec)


def sample_circular_patch(grid, center=None, radius=None):
    """Triangulated circular patch of a height grid with disk coordinates.

    The vertex set is every grid node inside the circle; faces are the grid
    cells whose four corners are all inside, split into two triangles. The
    disk parameterization comes directly from the planar positions: rho is
    the centered distance over the patch radius, phi the polar angle.
    Defaults give the largest inscribed circle.
    """
    h = grid.heights
    n = grid.n
    if center is None:
        center = ((n - 1) / 2.0, (n - 1) / 2.0)
    cy, cx = float(center[0]), float(center[1])
    if radius is None:
        radius = min(cy, cx, n - 1 - cy, n - 1 - cx)
    radius = float(radius)
    if radius <= 1:
        raise UsageError("patch radius too small")
    if (
        cy - radius < -1e-9
        or cx - radius < -1e-9
        or cy + radius > n - 1 + 1e-9
        or cx + radius > n - 1 + 1e-9
    ):
        raise UsageError("patch circle does not fit inside the grid")

    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    inside = (ii - cy) ** 2 + (jj - cx) ** 2 <= radius * radius + 1e-9
    vid = np.full((n, n), -1, dtype=np.int64)
    sel = np.flatnonzero(inside.ravel())
    vid.ravel()[sel] = np.arange(len(sel))

    cell = inside[:-1, :-1] & inside[:-1, 1:] & inside[1:, :-1] & inside[1:, 1:]
    ci, cj = np.nonzero(cell)
    v00 = vid[ci, cj]
    v01 = vid[ci, cj + 1]
    v10 = vid[ci + 1, cj]
    v11 = vid[ci + 1, cj + 1]
    faces = np.concatenate(
        [
            np.column_stack([v00, v01, v11]),
            np.column_stack([v00, v11, v10]),
        ],
        axis=0,
    )

    used = np.zeros(len(sel), dtype=bool)
    used[faces.ravel()] = True
    if not np.all(used):
        # nodes inside the circle but in no fully-inside cell cannot stay
        n_drop = int(np.count_nonzero(~used))
        warnings.warn(f"dropping {n_drop} isolated patch vertices")
        remap = np.full(len(sel), -1, dtype=np.int64)
        remap[used] = np.arange(int(used.sum()))
        sel = sel[used]
        faces = remap[faces]

    iy = sel // n
    jx = sel % n
    d = grid.spacing
    verts = np.column_stack([jx * d, iy * d, h[iy, jx]])
    dx = jx - cx
    dy = iy - cy
    rho = np.hypot(dx, dy) / radius
    phi = np.arctan2(dy, dx)
    param = DiskParam(
        rho=np.minimum(rho, 1.0),
        phi=phi,
        is_boundary=np.zeros(len(sel), dtype=bool),
    )
    return TriMesh(vertices=verts, faces=faces), param


def sample_square_patch(grid):
    """Whole grid as a patch, scaled so its corners touch the unit circle."""
    h = grid.heights
    n = grid.n
    c = (n - 1) / 2.0
    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    d = grid.spacing
    verts = np.column_stack([jj.ravel() * d, ii.ravel() * d, h.ravel()])
    faces = _grid_faces(n, n)
    dx = (jj.ravel() - c) / (c * np.sqrt(2.0))
    dy = (ii.ravel() - c) / (c * np.sqrt(2.0))
    rho = np.hypot(dx, dy)
    phi = np.arctan2(dy, dx)
    param = DiskParam(
        rho=np.minimum(rho, 1.0),
        phi=phi,
        is_boundary=np.zeros(n * n, dtype=bool),
    )
    return TriMesh(vertices=verts, faces=faces), param


# ---------------------------------------------------------------------------
# m = 0 power spectrum and Hurst fit


@dataclass(frozen=True)
class HurstFit:
    """Log-log OLS fit of the m = 0 spectrum (base-10 logs)."""

    slope: float
    intercept: float
    hurst: float
    k_min: int
    k_max: int
    n_excluded: int

    def to_json(self, path):
        doc = {
            "slope": self.slope,
            "intercept": self.intercept,
            "H": self.hurst,
            "k_min": self.k_min,
            "k_max": self.k_max,
            "n_excluded": self.n_excluded,
        }
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")


@dataclass(frozen=True)
class Spectrum:
    """m = 0 power spectrum indexed by degree k and eigenvalue lambda."""

    k: np.ndarray
    lam: np.ndarray
    psd: np.ndarray  # selected series used for fitting
    per_axis: np.ndarray  # (K+1, n_axes) per world axis
    axis: str
    fit: HurstFit = None
    included: np.ndarray = None

    def to_csv(self, path):
        inc = self.included
        if inc is None:
            inc = np.zeros(len(self.k), dtype=bool)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write("k,lambda,psd,included_in_fit\n")
            for i in range(len(self.k)):
                fh.write(
                    f"{int(self.k[i])},{self.lam[i]:.15g},"
                    f"{self.psd[i]:.15g},{int(inc[i])}\n"
                )


def psd_m0(coeffs, table=None, axis="z"):
    """m = 0 power spectrum of a harmonic decomposition.

    Each spectral value is sqrt(lambda_k) * |q_0^k|^2: the squared m = 0
    coefficient magnitude compensated by the asymptotic radial-wave amplitude
    of the zeroth-order basis (whose envelope falls off as lambda^{-1/2}).
    With this convention an isotropic self-affine surface of Hurst exponent H
    decays as lambda^{-2(3/4 + H)}, while the raw squared magnitudes follow
    the planar Fourier decay lambda^{-2(1 + H)}.

    axis selects a world axis ("x", "y", "z") whose series is returned, or
    "normalized" for the curvature-normalized resultant: the coefficient
    vectors are rotated into the first-degree cap frame and each component is
    divided by that frame axis' first-degree amplitude before summing squares.
    """
    if table is None:
        table = get_table(coeffs.k_max, BoundaryCondition.parse(coeffs.bc))
    if table.k_max != coeffs.k_max:
        raise UsageError("eigenvalue table does not match the coefficients")
    K = coeffs.k_max
    lam = np.array([table.eigenvalue(k, 0) for k in range(K + 1)])
    # amplitude compensation for the lambda^{-1/2} envelope of the radial modes
    comp = np.sqrt(lam)
    q0 = np.stack(
        [coeffs.q[coeff_index(k, 0)] for k in range(K + 1)], axis=0
    )  # (K+1, n_axes)
    per_axis = comp[:, None] * np.abs(q0) ** 2

    if axis == "normalized":
        desc = descriptors(coeffs)
        ref = desc.rotated[1]
        if np.any(ref <= 0):
            raise GeometryError(
                "zero first-degree amplitude along a cap axis; cannot "
                "normalize the spectrum"
            )
        q0_rot = q0 @ desc.frame.T
        psd = comp * np.sum((np.abs(q0_rot) / ref[None, :]) ** 2, axis=1)
    else:
        try:
            ax = (
                int(axis)
                if not isinstance(axis, str)
                else list(coeffs.axes).index(axis)
            )
        except ValueError:
            raise UsageError(f"unknown axis {axis!r}") from None
        psd = per_axis[:, ax]
    return Spectrum(
        k=np.arange(K + 1),
        lam=lam,
        psd=psd,
        per_axis=per_axis,
        axis=str(axis),
    )


def fit_hurst(spectrum, k_min=2, k_max=70, floor_rel=1e-8):
    """OLS power-law fit of the spectrum over degrees [k_min, k_max].

    Points below floor_rel times the range maximum are excluded as numerical
    outliers. Returns a new Spectrum carrying the fit and inclusion mask.
    """
    if k_min < 2:
        raise UsageError("k_min must be >= 2 (degrees 0-1 carry shape, not roughness)")
    k_hi = int(min(k_max, spectrum.k[-1]))
    if k_hi < k_min:
        raise UsageError("empty fit range")
    sel = (spectrum.k >= k_min) & (spectrum.k <= k_hi)
    lam = spectrum.lam[sel]
    psd = spectrum.psd[sel]
    good = np.isfinite(psd) & (psd > 0) & (lam > 0)
    if np.any(good):
        floor = floor_rel * psd[good].max()
        good &= psd >= floor
    n_excluded = int(np.count_nonzero(sel) - np.count_nonzero(good))
    if np.count_nonzero(good) < 5:
        raise GeometryError(
            "fewer than 5 spectrum points retained for the Hurst fit"
        )
    x = np.log10(lam[good])
    y = np.log10(psd[good])
    slope, intercept = np.polyfit(x, y, 1)
    fit = HurstFit(
        slope=float(slope),
        intercept=float(intercept),
        hurst=float(-slope / 2.0 - 0.75),
        k_min=int(k_min),
        k_max=k_hi,
        n_excluded=n_excluded,
    )
    included = np.zeros(len(spectrum.k), dtype=bool)
    inc_idx = np.flatnonzero(sel)[good]
    included[inc_idx] = True
    return replace(spectrum, fit=fit, included=included)
