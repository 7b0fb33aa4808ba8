"""Tests for the equal-area cap mapping and rough-patch projection."""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from diskharm.analysis import uniform_disk_mesh
from diskharm.capmap import (
    CapSpec,
    disk_scale,
    lambert_forward,
    lambert_inverse,
    project_rough_patch,
    smooth_cap,
)
from diskharm.errors import GeometryError, UsageError
from diskharm.fractal import HeightGrid, sample_circular_patch
from diskharm.mesh import TriMesh
from diskharm.param import DiskParam


def random_sphere_points(n, rng, z_max=0.9):
    """Uniform points on the unit sphere with Z capped away from the pole."""
    p = rng.normal(size=(n, 3))
    p /= np.linalg.norm(p, axis=1, keepdims=True)
    p[:, 2] = np.minimum(p[:, 2], z_max)
    p /= np.linalg.norm(p, axis=1, keepdims=True)
    return p


# ---------------------------------------------------------------------------
# cap description


def test_cap_spec_validation():
    for bad in (0.0, 90.0, -5.0, 120.0):
        with pytest.raises(UsageError):
            CapSpec(theta_c=bad)
    with pytest.raises(UsageError):
        CapSpec(theta_c=20.0, radius=0.0)
    with pytest.raises(UsageError):
        CapSpec(theta_c=20.0, radius=-1.0)


def test_cap_spec_properties():
    cap = CapSpec(theta_c=60.0, radius=2.0)
    assert cap.gaussian_curvature == pytest.approx(0.25, rel=1e-15)
    assert cap.area == pytest.approx(2.0 * np.pi * 4.0 * 0.5, rel=1e-14)
    small = CapSpec(theta_c=1.0)
    # tiny caps are nearly flat: area ~ pi (R theta)^2
    assert small.area == pytest.approx(np.pi * np.deg2rad(1.0) ** 2, rel=1e-4)


# ---------------------------------------------------------------------------
# Lambert projection


def test_lambert_round_trip_sphere_to_plane():
    rng = np.random.default_rng(21)
    p = random_sphere_points(500, rng)
    back = lambert_inverse(lambert_forward(p))
    assert np.max(np.abs(back - p)) < 1e-12


def test_lambert_round_trip_plane_to_sphere():
    rng = np.random.default_rng(22)
    r = 2.0 * np.sqrt(rng.uniform(0.0, 1.0, size=400))
    t = rng.uniform(0.0, 2.0 * np.pi, size=400)
    xy = np.column_stack([r * np.cos(t), r * np.sin(t)])
    back = lambert_forward(lambert_inverse(xy))
    # the rim of the disk maps to the north pole where the inverse blows up,
    # so keep a hair inside
    assert np.max(np.abs(back - xy)) < 1e-9


def test_lambert_known_points():
    assert_allclose(lambert_forward(np.array([0.0, 0.0, -1.0])), [0.0, 0.0])
    assert_allclose(
        lambert_forward(np.array([1.0, 0.0, 0.0])), [np.sqrt(2.0), 0.0], rtol=1e-15
    )
    assert_allclose(lambert_inverse(np.array([0.0, 0.0])), [0.0, 0.0, -1.0])
    # the disk rim reaches the north pole
    assert_allclose(lambert_inverse(np.array([2.0, 0.0])), [0.0, 0.0, 1.0], atol=1e-15)
    # single points squeeze back to 1-d
    assert lambert_forward(np.array([0.0, 0.0, -1.0])).shape == (2,)
    assert lambert_inverse(np.array([0.1, 0.2])).shape == (3,)


def test_lambert_errors():
    with pytest.raises(UsageError):
        lambert_forward(np.array([0.0, 0.0, 1.1]))  # off the sphere
    with pytest.raises(GeometryError):
        lambert_forward(np.array([0.0, 0.0, 1.0]))  # north pole
    with pytest.raises(UsageError):
        lambert_forward(np.zeros((4, 2)))  # wrong width
    with pytest.raises(GeometryError):
        lambert_inverse(np.array([2.5, 0.0]))  # outside the radius-2 disk
    with pytest.raises(UsageError):
        lambert_inverse(np.zeros((4, 3)))


def test_disk_scale_values():
    assert abs(disk_scale(90.0) - np.sqrt(2.0)) < 1e-15
    assert disk_scale(60.0) == pytest.approx(1.0, rel=1e-15)
    th = np.array([5.0, 10.0, 20.0, 50.0, 90.0, 150.0])
    scales = np.array([disk_scale(t) for t in th])
    assert np.all(np.diff(scales) > 0)
    assert scales[-1] < 2.0
    for bad in (0.0, 180.0, -3.0):
        with pytest.raises(UsageError):
            disk_scale(bad)


def test_lambert_is_equal_area():
    # globally: a disk of radius disk_scale(theta) has exactly the cap's area
    for th in (5.0, 10.0, 20.0, 50.0, 89.0):
        disk_area = np.pi * disk_scale(th) ** 2
        assert disk_area == pytest.approx(CapSpec(th).area, rel=1e-13)

    # locally: mapped mesh triangles keep their areas to discretization error
    mesh, param = uniform_disk_mesh(edge=0.02)
    cap = CapSpec(theta_c=40.0)
    curved = smooth_cap(cap, mesh, param)
    flat_areas = mesh.face_areas() * disk_scale(40.0) ** 2
    ratio = curved.face_areas() / flat_areas
    assert abs(ratio.mean() - 1.0) < 1e-3
    assert np.max(np.abs(ratio - 1.0)) < 5e-3
    assert curved.face_areas().sum() == pytest.approx(cap.area, rel=1e-3)


# ---------------------------------------------------------------------------
# smooth cap construction


def test_smooth_cap_geometry():
    mesh, param = uniform_disk_mesh(edge=0.05)
    cap = CapSpec(theta_c=20.0, radius=1.5)
    curved = smooth_cap(cap, mesh, param)
    assert np.array_equal(curved.faces, mesh.faces)

    radii = np.linalg.norm(curved.vertices, axis=1)
    assert_allclose(radii, 1.5, rtol=0, atol=1e-12)

    # polar angle measured from the south pole never exceeds theta_c,
    # and the boundary ring sits exactly at theta_c
    ang = np.degrees(np.arccos(np.clip(-curved.vertices[:, 2] / 1.5, -1, 1)))
    assert ang.max() <= 20.0 + 1e-9
    assert_allclose(ang[param.is_boundary], 20.0, rtol=0, atol=1e-9)
    # the cap center comes from the disk center
    assert curved.vertices[:, 2].min() == pytest.approx(-1.5, abs=1e-9)


# ---------------------------------------------------------------------------
# rough projection


def flat_patch(n=64, extent=None, heights=None, seed=0):
    if heights is None:
        rng = np.random.default_rng(seed)
        heights = 0.002 * rng.standard_normal((n, n))
    grid = HeightGrid(heights=heights, extent=float(n if extent is None else extent))
    return sample_circular_patch(grid)


def test_project_zero_heights_matches_smooth_cap():
    patch, param = flat_patch(heights=np.zeros((64, 64)))
    cap = CapSpec(theta_c=10.0, radius=2.0)
    curved, report = project_rough_patch(patch, param, cap)
    reference = smooth_cap(cap, patch, param)
    assert_allclose(curved.vertices, reference.vertices, rtol=0, atol=1e-14)

    # nominal radius recovered from the planar layout: 31.5 nodes of spacing 1
    expected_sc = cap.area / (np.pi * 31.5**2)
    assert report.s_c == pytest.approx(expected_sc, rel=1e-9)
    assert report.theta_c == 10.0 and report.radius == 2.0
    assert report.d_angle_deg > 0.0  # bending a flat sheet distorts angles
    assert set(report.to_dict()) == {"theta_c", "R", "s_c", "d_angle_deg"}


def test_project_constant_height_scales_radially():
    h0 = 0.01
    patch, param = flat_patch(heights=np.full((64, 64), h0))
    cap = CapSpec(theta_c=20.0, radius=1.0)
    curved, report = project_rough_patch(patch, param, cap)
    radii = np.linalg.norm(curved.vertices, axis=1)
    expected = 1.0 + np.sqrt(report.s_c) * h0
    assert_allclose(radii, expected, rtol=0, atol=1e-12)


def test_project_respects_explicit_nominal_radius():
    patch, param = flat_patch(heights=np.zeros((64, 64)))
    cap = CapSpec(theta_c=10.0)
    _, auto = project_rough_patch(patch, param, cap)
    _, manual = project_rough_patch(patch, param, cap, nominal_radius=31.5)
    assert manual.s_c == pytest.approx(auto.s_c, rel=1e-9)
    _, scaled = project_rough_patch(patch, param, cap, nominal_radius=63.0)
    assert scaled.s_c == pytest.approx(auto.s_c / 4.0, rel=1e-9)


def test_project_infers_physical_spacing():
    # same node layout, half the physical extent -> quarter of the flat area
    patch, param = flat_patch(heights=np.zeros((64, 64)), extent=32)
    cap = CapSpec(theta_c=10.0)
    _, report = project_rough_patch(patch, param, cap)
    assert report.s_c == pytest.approx(cap.area / (np.pi * 15.75**2), rel=1e-9)


def test_project_rejects_oversize_heights():
    heights = np.zeros((64, 64))
    heights[30, 30] = -1e3  # deeper than the cap radius after scaling
    patch, param = flat_patch(heights=heights)
    with pytest.raises(GeometryError, match="self-intersecting"):
        project_rough_patch(patch, param, CapSpec(theta_c=10.0))


def test_project_validates_inputs():
    patch, param = flat_patch(heights=np.zeros((64, 64)))
    other = DiskParam(
        rho=np.zeros(4), phi=np.zeros(4), is_boundary=np.zeros(4, dtype=bool)
    )
    with pytest.raises(UsageError):
        project_rough_patch(patch, other, CapSpec(theta_c=10.0))

    # a parameterization collapsed to the disk center cannot give a radius
    tri = TriMesh(
        vertices=np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]),
        faces=np.array([[0, 1, 2]]),
    )
    degenerate = DiskParam(
        rho=np.zeros(3), phi=np.zeros(3), is_boundary=np.zeros(3, dtype=bool)
    )
    with pytest.raises(GeometryError):
        project_rough_patch(tri, degenerate, CapSpec(theta_c=10.0))


def test_projection_distortion_grows_with_cap_angle():
    patch, param = flat_patch(heights=np.zeros((64, 64)))
    d_angles = []
    s_cs = []
    for th in (5.0, 10.0, 20.0, 50.0):
        _, report = project_rough_patch(patch, param, CapSpec(theta_c=th))
        d_angles.append(report.d_angle_deg)
        s_cs.append(report.s_c)
    assert np.all(np.diff(d_angles) > 0)
    assert np.all(np.diff(s_cs) > 0)
