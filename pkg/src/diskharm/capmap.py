"""Wrapping flat rough patches onto spherical caps.

The Lambert azimuthal equal-area projection (centered on the south pole)
carries the unit disk onto a spherical cap without changing areas; rough
heights are then applied as radial offsets so asperities stay surface-normal.
"""

from dataclasses import dataclass

import numpy as np

from .errors import GeometryError, UsageError
from .mesh import TriMesh, angular_distortion

__all__ = [
    "CapSpec",
    "ProjectionReport",
    "lambert_forward",
    "lambert_inverse",
    "disk_scale",
    "smooth_cap",
    "project_rough_patch",
]


@dataclass(frozen=True)
class CapSpec:
    """Spherical cap: half-angle theta_c (degrees) and sphere radius R."""

    theta_c: float
    radius: float = 1.0

    def __post_init__(self):
        if not (0.0 < self.theta_c < 90.0):
            raise UsageError("theta_c must be in (0, 90) degrees")
        if self.radius <= 0:
            raise UsageError("cap radius must be positive")

    @property
    def gaussian_curvature(self):
        return 1.0 / (self.radius * self.radius)

    @property
    def area(self):
        """Cap surface area 2 pi R^2 (1 - cos theta_c)."""
        th = np.deg2rad(self.theta_c)
        return 2.0 * np.pi * self.radius**2 * (1.0 - np.cos(th))


@dataclass(frozen=True)
class ProjectionReport:
    """Scaling and distortion bookkeeping of one cap projection."""

    theta_c: float
    radius: float
    s_c: float
    d_angle_deg: float

    def to_dict(self):
        return {
            "theta_c": self.theta_c,
            "R": self.radius,
            "s_c": self.s_c,
            "d_angle_deg": self.d_angle_deg,
        }


def lambert_forward(points):
    """Equal-area projection of unit-sphere points to the plane.

    (x, y) = (sqrt(2/(1-Z)) X, sqrt(2/(1-Z)) Y); the south pole (0,0,-1)
    maps to the origin, the equator to the circle of radius sqrt(2).
    """
    p = np.asarray(points, dtype=np.float64)
    squeeze = p.ndim == 1
    p = np.atleast_2d(p)
    if p.shape[1] != 3:
        raise UsageError("lambert_forward expects (n, 3) points")
    nrm = np.linalg.norm(p, axis=1)
    if np.any(np.abs(nrm - 1.0) > 1e-9):
        raise UsageError("lambert_forward input must lie on the unit sphere")
    Z = p[:, 2]
    if np.any(Z >= 1.0 - 1e-12):
        raise GeometryError("lambert_forward undefined at the north pole")
    s = np.sqrt(2.0 / (1.0 - Z))
    out = np.column_stack([s * p[:, 0], s * p[:, 1]])
    return out[0] if squeeze else out


def lambert_inverse(points):
    """Inverse equal-area projection: plane disk of radius 2 to the sphere.

    (X, Y, Z) = (sqrt(1 - r^2/4) x, sqrt(1 - r^2/4) y, -1 + r^2/2).
    """
    p = np.asarray(points, dtype=np.float64)
    squeeze = p.ndim == 1
    p = np.atleast_2d(p)
    if p.shape[1] != 2:
        raise UsageError("lambert_inverse expects (n, 2) points")
    r2 = p[:, 0] ** 2 + p[:, 1] ** 2
    if np.any(r2 > 4.0 + 1e-12):
        raise GeometryError("lambert_inverse domain is the disk of radius 2")
    r2 = np.minimum(r2, 4.0)
    s = np.sqrt(1.0 - r2 / 4.0)
    out = np.column_stack([s * p[:, 0], s * p[:, 1], -1.0 + r2 / 2.0])
    return out[0] if squeeze else out


def disk_scale(theta_c):
    """Disk radius whose Lambert image reaches polar angle theta_c (degrees)."""
    if not (0.0 < theta_c < 180.0):
        raise UsageError("theta_c must be in (0, 180) degrees")
    th = np.deg2rad(theta_c)
    return float(np.sqrt(2.0 * (1.0 - np.cos(th))))


def _disk_frame(param):
    """Unit-disk planar coordinates from a parameterization."""
    return np.column_stack(
        [param.rho * np.cos(param.phi), param.rho * np.sin(param.phi)]
    )


def smooth_cap(cap, mesh, param):
    """Map a flat disk mesh onto the smooth cap (zero roughness)."""
    xy = _disk_frame(param) * disk_scale(cap.theta_c)
    sphere = lambert_inverse(xy)
    return TriMesh(vertices=cap.radius * sphere, faces=mesh.faces)


def _nominal_patch_radius(mesh, param):
    """Physical patch radius from the affine relation xy = c + r * disk_xy."""
    e = _disk_frame(param)
    xy = mesh.vertices[:, :2]
    em = e - e.mean(axis=0)
    xm = xy - xy.mean(axis=0)
    denom = float(np.sum(em * em))
    if denom <= 0:
        raise GeometryError("degenerate disk parameterization")
    return float(np.sum(em * xm) / denom)


def project_rough_patch(patch, param, cap, nominal_radius=None):
    """Wrap a flat rough patch onto a spherical cap with radial asperities.

    The patch's unit-disk coordinates are scaled to reach the cap half-angle,
    mapped by the inverse Lambert projection onto the radius-R sphere, and
    every vertex is then scaled radially by (1 + sqrt(s_c) h) where h is the
    flat height and s_c the cap/flat nominal area ratio, so asperity heights
    shrink with the linear scale change and stay normal to the cap.

    Returns (curved TriMesh, ProjectionReport).
    """
    if patch.n_vertices != param.n_vertices:
        raise UsageError("patch and parameterization vertex counts differ")
    if nominal_radius is None:
        nominal_radius = _nominal_patch_radius(patch, param)
    if nominal_radius <= 0:
        raise GeometryError("nonpositive nominal patch radius")

    flat_area = np.pi * nominal_radius**2
    s_c = cap.area / flat_area
    h = patch.vertices[:, 2]
    factor = 1.0 + np.sqrt(s_c) * h
    if np.any(factor <= 0.0):
        raise GeometryError("self-intersecting projection")

    xy = _disk_frame(param) * disk_scale(cap.theta_c)
    sphere = lambert_inverse(xy)
    verts = (cap.radius * factor)[:, None] * sphere
    curved = TriMesh(vertices=verts, faces=patch.faces)
    if patch.n_faces:
        d_angle = angular_distortion(patch, curved)
    else:
        d_angle = 0.0
    report = ProjectionReport(
        theta_c=cap.theta_c,
        radius=cap.radius,
        s_c=float(s_c),
        d_angle_deg=float(d_angle),
    )
    return curved, report
