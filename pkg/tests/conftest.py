"""Shared fixtures: synthetic meshes and disk point sets used across tests."""

import numpy as np
import pytest

from diskharm import (
    CapSpec,
    DiskParam,
    TriMesh,
    smooth_cap,
    uniform_disk_mesh,
)


def quasi_uniform_disk_points(n, seed=0):
    """Seeded random points with uniform area density on the unit disk."""
    rng = np.random.default_rng(seed)
    rho = np.sqrt(rng.uniform(0.0, 1.0, n))
    phi = rng.uniform(0.0, 2.0 * np.pi, n)
    return rho, phi


def make_cap(theta_deg, edge=0.02, radius=1.0):
    """Smooth spherical cap mesh plus its exact equal-area parameterization."""
    disk, dparam = uniform_disk_mesh(edge)
    cap = CapSpec(theta_c=theta_deg, radius=radius)
    mesh = smooth_cap(cap, disk, dparam)
    return mesh, dparam, cap


def make_face_like_mesh(n_side=48):
    """Open curved benchmark: a 35-degree cap with a few gaussian bumps.

    Stands in for a scanned-face-style surface: smooth base curvature with
    localized features, single boundary loop, genus zero.
    """
    mesh, dparam, _ = make_cap(35.0, edge=2.4 / n_side)
    v = mesh.vertices.copy()
    bumps = [
        # (x0, y0, sigma, height) in the cap's tangent coordinates
        (0.00, 0.10, 0.12, 0.06),
        (-0.18, -0.12, 0.08, -0.03),
        (0.18, -0.12, 0.08, -0.03),
        (0.00, -0.25, 0.10, 0.04),
    ]
    r = np.linalg.norm(v, axis=1, keepdims=True)
    normals = v / r
    for x0, y0, sigma, height in bumps:
        g = np.exp(-(((v[:, 0] - x0) ** 2 + (v[:, 1] - y0) ** 2) / (2 * sigma**2)))
        v = v + height * g[:, None] * normals
    return TriMesh(vertices=v, faces=mesh.faces)


@pytest.fixture(scope="session")
def cap10():
    return make_cap(10.0)


@pytest.fixture(scope="session")
def cap20():
    return make_cap(20.0)


@pytest.fixture(scope="session")
def face_like():
    return make_face_like_mesh()


def disk_grid_mesh(n_side=24):
    """Flat unit-disk mesh with its identity parameterization."""
    mesh, dparam = uniform_disk_mesh(2.4 / n_side)
    return mesh, dparam


def single_triangle_mesh(scale=1.0):
    verts = np.array([[0.0, 0.0, 0.0], [scale, 0.0, 0.0], [0.0, 2.0 * scale, 0.0]])
    faces = np.array([[0, 1, 2]])
    return TriMesh(vertices=verts, faces=faces)


def hex_fan_mesh():
    """Six equilateral boundary triangles around a center vertex."""
    ang = np.arange(6) * np.pi / 3.0
    verts = np.zeros((7, 3))
    verts[1:, 0] = np.cos(ang)
    verts[1:, 1] = np.sin(ang)
    faces = np.array([[0, 1 + i, 1 + (i + 1) % 6] for i in range(6)])
    return TriMesh(vertices=verts, faces=faces)
