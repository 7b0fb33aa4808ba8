"""Area-preserving parameterization of open surfaces onto the unit disk.

Pipeline: Tutte disk embedding (always bijective starting point), then a
density-equalizing flow that drives per-vertex area ratios toward uniform,
then a quasi-conformal repair step that caps the Beltrami coefficient below 1
to guarantee the final map stays a bijection.
"""

import csv
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from .errors import GeometryError, InvalidMeshError, UsageError
from .mesh import TriMesh, boundary_loop, validate_open_surface

__all__ = [
    "DiskParam",
    "DemOptions",
    "tutte_embed",
    "dem_flow",
    "beltrami_coefficient",
    "linear_beltrami_solver",
    "enforce_bijectivity",
    "area_preserving_param",
    "flipped_faces",
    "log_area_ratio_std",
]


@dataclass(frozen=True)
class DiskParam:
    """Polar coordinates (rho, phi) on the closed unit disk, one per vertex."""

    rho: np.ndarray
    phi: np.ndarray
    is_boundary: np.ndarray

    def __post_init__(self):
        rho = np.ascontiguousarray(np.asarray(self.rho, dtype=np.float64))
        phi = np.ascontiguousarray(np.asarray(self.phi, dtype=np.float64))
        isb = np.ascontiguousarray(np.asarray(self.is_boundary, dtype=bool))
        if rho.ndim != 1 or rho.shape != phi.shape or rho.shape != isb.shape:
            raise UsageError("DiskParam arrays must be 1-D and equally long")
        if not np.all(np.isfinite(rho)) or not np.all(np.isfinite(phi)):
            raise GeometryError("non-finite disk coordinates")
        if rho.min() < 0 or rho.max() > 1 + 1e-9:
            raise GeometryError("rho out of [0, 1]")
        object.__setattr__(self, "rho", rho)
        object.__setattr__(self, "phi", phi)
        object.__setattr__(self, "is_boundary", isb)

    @property
    def n_vertices(self):
        return self.rho.shape[0]

    def xy(self):
        """Cartesian coordinates (n, 2) of the disk layout."""
        return np.column_stack(
            [self.rho * np.cos(self.phi), self.rho * np.sin(self.phi)]
        )

    @classmethod
    def from_xy(cls, xy, is_boundary=None):
        xy = np.asarray(xy, dtype=np.float64)
        rho = np.hypot(xy[:, 0], xy[:, 1])
        phi = np.arctan2(xy[:, 1], xy[:, 0])
        if is_boundary is None:
            is_boundary = np.zeros(len(rho), dtype=bool)
        return cls(rho=rho, phi=phi, is_boundary=is_boundary)

    def to_csv(self, path):
        """Write `vertex,rho,phi,is_boundary` rows (12 significant digits)."""
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["vertex", "rho", "phi", "is_boundary"])
            for i in range(self.n_vertices):
                writer.writerow(
                    [
                        i,
                        format(self.rho[i], ".12g"),
                        format(self.phi[i], ".12g"),
                        int(self.is_boundary[i]),
                    ]
                )

    @classmethod
    def from_csv(cls, path):
        rows = []
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None or [h.strip() for h in header[:4]] != [
                "vertex",
                "rho",
                "phi",
                "is_boundary",
            ]:
                raise UsageError(f"{path}: not a disk-parameterization CSV")
            for row in reader:
                if row:
                    rows.append(row)
        rows.sort(key=lambda r: int(r[0]))
        rho = np.array([float(r[1]) for r in rows])
        phi = np.array([float(r[2]) for r in rows])
        isb = np.array([bool(int(r[3])) for r in rows])
        return cls(rho=rho, phi=phi, is_boundary=isb)


# ---------------------------------------------------------------------------
# geometry helpers


def _face_areas_2d(xy, faces):
    a = xy[faces[:, 0]]
    b = xy[faces[:, 1]]
    c = xy[faces[:, 2]]
    return 0.5 * (
        (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1])
        - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    )


def flipped_faces(xy, faces):
    """Number of faces with non-positive signed area in a planar layout."""
    return int(np.count_nonzero(_face_areas_2d(xy, faces) <= 0.0))


def _cotan_laplacian(vertices, faces):
    """Symmetric cotangent Laplacian L (positive semi-definite convention)."""
    v0 = vertices[faces[:, 0]]
    v1 = vertices[faces[:, 1]]
    v2 = vertices[faces[:, 2]]
    # cotangent at each corner = dot of adjacent edges / norm of their cross
    cots = np.empty((len(faces), 3))
    for c, (p, q, r) in enumerate([(v0, v1, v2), (v1, v2, v0), (v2, v0, v1)]):
        u = q - p
        w = r - p
        cross = np.linalg.norm(np.cross(u, w), axis=1)
        cross = np.maximum(cross, 1e-300)
        cots[:, c] = np.einsum("ij,ij->i", u, w) / cross
    ii = []
    jj = []
    vv = []
    # corner c is opposite edge (c+1, c+2)
    for c in range(3):
        i = faces[:, (c + 1) % 3]
        j = faces[:, (c + 2) % 3]
        w = 0.5 * cots[:, c]
        ii.extend([i, j, i, j])
        jj.extend([j, i, i, j])
        vv.extend([-w, -w, w, w])
    ii = np.concatenate(ii)
    jj = np.concatenate(jj)
    vv = np.concatenate(vv)
    n = len(vertices)
    return sparse.csr_matrix((vv, (ii, jj)), shape=(n, n))


def _lumped_mass(vertices, faces):
    """Barycentric lumped mass matrix diagonal (one third of ring area)."""
    v0 = vertices[faces[:, 0]]
    v1 = vertices[faces[:, 1]]
    v2 = vertices[faces[:, 2]]
    areas = 0.5 * np.linalg.norm(np.cross(v1 - v0, v2 - v0), axis=1)
    diag = np.zeros(len(vertices))
    for c in range(3):
        np.add.at(diag, faces[:, c], areas / 3.0)
    return diag


# ---------------------------------------------------------------------------
# Tutte embedding


def tutte_embed(mesh):
    """Disk layout from uniform-weight Tutte embedding.

    The boundary loop is pinned to the unit circle with spacing proportional
    to boundary edge arc length; interior vertices solve the uniform graph
    Laplacian. Always bijective for a disk-topology mesh with a convex
    boundary polygon (Tutte's theorem).
    """
    validate_open_surface(mesh)
    loop = boundary_loop(mesh)
    n = mesh.n_vertices

    pts = mesh.vertices[loop]
    seglen = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
    total = seglen.sum()
    if total <= 0:
        raise InvalidMeshError("degenerate boundary loop")
    theta = 2.0 * np.pi * np.concatenate([[0.0], np.cumsum(seglen[:-1])]) / total
    bnd_xy = np.column_stack([np.cos(theta), np.sin(theta)])

    # uniform adjacency weights
    faces = mesh.faces
    edges = np.concatenate(
        [faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]], axis=0
    )
    und = np.unique(np.sort(edges, axis=1), axis=0)
    ii = np.concatenate([und[:, 0], und[:, 1]])
    jj = np.concatenate([und[:, 1], und[:, 0]])
    vv = np.ones(len(ii))
    A = sparse.csr_matrix((vv, (ii, jj)), shape=(n, n))
    deg = np.asarray(A.sum(axis=1)).ravel()
    L = sparse.diags(deg) - A

    is_b = np.zeros(n, dtype=bool)
    is_b[loop] = True
    interior = np.flatnonzero(~is_b)

    xy = np.zeros((n, 2))
    xy[loop] = bnd_xy
    if len(interior):
        Lii = L[interior][:, interior].tocsc()
        Lib = L[interior][:, loop]
        rhs = -Lib @ bnd_xy
        xy[interior] = spsolve(Lii, rhs)
    if flipped_faces(xy, faces) > 0:
        raise GeometryError("Tutte embedding produced flipped faces")
    return DiskParam.from_xy(xy, is_boundary=is_b)


# ---------------------------------------------------------------------------
# density-equalizing flow


@dataclass(frozen=True)
class DemOptions:
    """Knobs for the density-equalizing flow."""

    step: float = 0.1
    max_iters: int = 500
    tol: float = 1e-2
    mu_cap: float = 0.95


def _vertex_density(mesh, xy, faces):
    """Per-vertex density = surface ring area / layout ring area."""
    area3d = np.zeros(mesh.n_vertices)
    v0, v1, v2 = (mesh.vertices[faces[:, c]] for c in range(3))
    fa3 = 0.5 * np.linalg.norm(np.cross(v1 - v0, v2 - v0), axis=1)
    fa2 = np.abs(_face_areas_2d(xy, faces))
    area2d = np.zeros(mesh.n_vertices)
    for c in range(3):
        np.add.at(area3d, faces[:, c], fa3 / 3.0)
        np.add.at(area2d, faces[:, c], fa2 / 3.0)
    area2d = np.maximum(area2d, 1e-300)
    return area3d / area2d


def _face_gradients(xy, faces, scalar):
    """Per-face gradient of a vertex scalar over a planar layout."""
    p0 = xy[faces[:, 0]]
    p1 = xy[faces[:, 1]]
    p2 = xy[faces[:, 2]]
    s0 = scalar[faces[:, 0]][:, None]
    s1 = scalar[faces[:, 1]][:, None]
    s2 = scalar[faces[:, 2]][:, None]
    twice_area = (
        (p1[:, 0] - p0[:, 0]) * (p2[:, 1] - p0[:, 1])
        - (p1[:, 1] - p0[:, 1]) * (p2[:, 0] - p0[:, 0])
    )[:, None]
    twice_area = np.where(np.abs(twice_area) < 1e-300, 1e-300, twice_area)

    def rot90(e):
        return np.column_stack([-e[:, 1], e[:, 0]])

    # gradient of hat function at corner c is rot90(opposite edge)/(2A)
    g = (
        s0 * rot90(p2 - p1) + s1 * rot90(p0 - p2) + s2 * rot90(p1 - p0)
    ) / twice_area
    return g


def dem_flow(mesh, param, options=DemOptions()):
    """Density-equalizing flow on the disk layout.

    Implicit-Euler diffusion of the density field over the evolving layout
    drives vertices with the negative normalized density gradient; boundary
    vertices slide tangentially and are renormalized onto the unit circle.
    Stops when the coefficient of variation of density drops below `tol` or
    after `max_iters` steps.
    """
    faces = mesh.faces
    xy = param.xy()
    is_b = param.is_boundary.copy()
    n = mesh.n_vertices

    rho_v = _vertex_density(mesh, xy, faces)
    cv_prev = None
    for _ in range(int(options.max_iters)):
        cv = float(np.std(rho_v) / max(np.mean(rho_v), 1e-300))
        if cv < options.tol:
            break
        L = _cotan_laplacian(np.column_stack([xy, np.zeros(n)]), faces)
        mass = _lumped_mass(np.column_stack([xy, np.zeros(n)]), faces)
        M = sparse.diags(mass)
        sys = (M + options.step * L).tocsc()
        rho_new = spsolve(sys, mass * rho_v)
        rho_new = np.maximum(rho_new, 1e-12)

        grad = _face_gradients(xy, faces, rho_new)
        # face velocity; average onto vertices with face-area weights
        fa2 = np.abs(_face_areas_2d(xy, faces))[:, None]
        face_rho = rho_new[faces].mean(axis=1)[:, None]
        vel_f = -grad / face_rho
        vel = np.zeros((n, 2))
        wsum = np.zeros(n)
        for c in range(3):
            np.add.at(vel, faces[:, c], vel_f * fa2)
            np.add.at(wsum, faces[:, c], fa2[:, 0])
        vel /= np.maximum(wsum, 1e-300)[:, None]

        # boundary vertices move only tangentially, then stay on the circle
        bxy = xy[is_b]
        r = np.linalg.norm(bxy, axis=1, keepdims=True)
        nrm = bxy / np.maximum(r, 1e-300)
        vb = vel[is_b]
        vel[is_b] = vb - (np.einsum("ij,ij->i", vb, nrm)[:, None]) * nrm

        xy_new = xy + options.step * vel
        bn = xy_new[is_b]
        xy_new[is_b] = bn / np.maximum(
            np.linalg.norm(bn, axis=1, keepdims=True), 1e-300
        )
        xy = xy_new
        rho_v = _vertex_density(mesh, xy, faces)
        if cv_prev is not None and cv > cv_prev * 1.5:
            # flow is diverging; keep the last stable layout
            break
        cv_prev = cv
    # clamp round-off overshoot
    rr = np.linalg.norm(xy, axis=1)
    over = rr > 1.0
    if np.any(over):
        xy[over] /= rr[over, None]
    return DiskParam.from_xy(xy, is_boundary=is_b)


# ---------------------------------------------------------------------------
# Beltrami machinery


def _face_frames(vertices, faces):
    """Orthonormal 2-D frame per face; returns local coords of the corners."""
    p0 = vertices[faces[:, 0]]
    p1 = vertices[faces[:, 1]]
    p2 = vertices[faces[:, 2]]
    e1 = p1 - p0
    e2 = p2 - p0
    u = e1 / np.maximum(np.linalg.norm(e1, axis=1, keepdims=True), 1e-300)
    nrm = np.cross(e1, e2)
    nrm /= np.maximum(np.linalg.norm(nrm, axis=1, keepdims=True), 1e-300)
    v = np.cross(nrm, u)
    x1 = np.einsum("ij,ij->i", e1, u)
    x2 = np.einsum("ij,ij->i", e2, u)
    y2 = np.einsum("ij,ij->i", e2, v)
    zeros = np.zeros_like(x1)
    local = np.stack(
        [
            np.stack([zeros, zeros], axis=1),
            np.stack([x1, zeros], axis=1),
            np.stack([x2, y2], axis=1),
        ],
        axis=1,
    )  # (f, 3, 2)
    return local


def beltrami_coefficient(mesh_or_local, faces, xy):
    """Per-face Beltrami coefficient of the map source -> planar layout.

    `mesh_or_local` is either a TriMesh (3-D source; local face frames are
    built) or an (f, 3, 2) array of per-face 2-D corner coordinates.
    """
    if isinstance(mesh_or_local, TriMesh):
        local = _face_frames(mesh_or_local.vertices, faces)
    else:
        local = np.asarray(mesh_or_local, dtype=np.float64)
    sx = local[:, :, 0]
    sy = local[:, :, 1]
    twice_area = (sx[:, 1] - sx[:, 0]) * (sy[:, 2] - sy[:, 0]) - (
        sy[:, 1] - sy[:, 0]
    ) * (sx[:, 2] - sx[:, 0])
    twice_area = np.where(np.abs(twice_area) < 1e-300, 1e-300, twice_area)
    # hat-function gradients in the source frame
    gx = np.stack(
        [sy[:, 1] - sy[:, 2], sy[:, 2] - sy[:, 0], sy[:, 0] - sy[:, 1]], axis=1
    ) / twice_area[:, None]
    gy = np.stack(
        [sx[:, 2] - sx[:, 1], sx[:, 0] - sx[:, 2], sx[:, 1] - sx[:, 0]], axis=1
    ) / twice_area[:, None]
    f = xy[faces]  # (f, 3, 2)
    dudx = np.einsum("fc,fc->f", gx, f[:, :, 0])
    dudy = np.einsum("fc,fc->f", gy, f[:, :, 0])
    dvdx = np.einsum("fc,fc->f", gx, f[:, :, 1])
    dvdy = np.einsum("fc,fc->f", gy, f[:, :, 1])
    num = (dudx - dvdy) + 1j * (dvdx + dudy)
    den = (dudx + dvdy) + 1j * (dvdx - dudy)
    den = np.where(np.abs(den) < 1e-300, 1e-300, den)
    return num / den


def linear_beltrami_solver(local, faces, mu, landmarks, targets, n_vertices):
    """Planar map with prescribed Beltrami coefficient mu.

    Solves the generalized Laplace equation div(A grad f) = 0 whose
    coefficient matrix A is built from mu, with Dirichlet conditions
    f[landmarks] = targets. Returns the (n, 2) layout.
    """
    mu = np.asarray(mu)
    af = (1.0 - 2.0 * mu.real + np.abs(mu) ** 2) / (1.0 - np.abs(mu) ** 2)
    bf = -2.0 * mu.imag / (1.0 - np.abs(mu) ** 2)
    gf = (1.0 + 2.0 * mu.real + np.abs(mu) ** 2) / (1.0 - np.abs(mu) ** 2)

    sx = local[:, :, 0]
    sy = local[:, :, 1]
    twice_area = (sx[:, 1] - sx[:, 0]) * (sy[:, 2] - sy[:, 0]) - (
        sy[:, 1] - sy[:, 0]
    ) * (sx[:, 2] - sx[:, 0])
    area = np.abs(twice_area) / 2.0
    area = np.maximum(area, 1e-300)
    gx = np.stack(
        [sy[:, 1] - sy[:, 2], sy[:, 2] - sy[:, 0], sy[:, 0] - sy[:, 1]], axis=1
    ) / twice_area[:, None]
    gy = np.stack(
        [sx[:, 2] - sx[:, 1], sx[:, 0] - sx[:, 2], sx[:, 1] - sx[:, 0]], axis=1
    ) / twice_area[:, None]

    ii = []
    jj = []
    vv = []
    for a in range(3):
        for b in range(3):
            w = (
                af * gx[:, a] * gx[:, b]
                + bf * (gx[:, a] * gy[:, b] + gy[:, a] * gx[:, b])
                + gf * gy[:, a] * gy[:, b]
            ) * area
            ii.append(faces[:, a])
            jj.append(faces[:, b])
            vv.append(w)
    ii = np.concatenate(ii)
    jj = np.concatenate(jj)
    vv = np.concatenate(vv)
    L = sparse.csr_matrix((vv, (ii, jj)), shape=(n_vertices, n_vertices))

    fixed = np.zeros(n_vertices, dtype=bool)
    fixed[landmarks] = True
    free = np.flatnonzero(~fixed)
    out = np.zeros((n_vertices, 2))
    out[landmarks] = targets
    if len(free):
        Lff = L[free][:, free].tocsc()
        Lfb = L[free][:, landmarks]
        rhs = -Lfb @ np.asarray(targets, dtype=np.float64)
        out[free] = spsolve(Lff, rhs)
    return out


def enforce_bijectivity(mesh, param, mu_cap=0.95, max_passes=10):
    """Cap |mu| of the source->layout map below `mu_cap`.

    If the map is already below the cap it is returned unchanged. Otherwise
    the Beltrami coefficient is clamped and re-solved over the (bijective)
    reference layout with boundary vertices pinned, repeating up to
    `max_passes` times.
    """
    faces = mesh.faces
    local = _face_frames(mesh.vertices, faces)
    xy = param.xy()
    loop_idx = np.flatnonzero(param.is_boundary)
    mu = beltrami_coefficient(local, faces, xy)
    worst = float(np.max(np.abs(mu))) if len(mu) else 0.0
    if not (worst < mu_cap and flipped_faces(xy, faces) == 0):
        # rescale offending coefficients and re-solve; if folds survive a
        # pass, damp the cap towards the (fold-free) harmonic limit
        target = mu_cap
        for _ in range(int(max_passes)):
            absmu = np.abs(mu)
            scale = np.where(
                absmu >= target, target / np.maximum(absmu, 1e-300), 1.0
            )
            xy = linear_beltrami_solver(
                local, faces, mu * scale, loop_idx, xy[loop_idx], mesh.n_vertices
            )
            mu = beltrami_coefficient(local, faces, xy)
            worst = float(np.max(np.abs(mu))) if len(mu) else 0.0
            if worst < 1.0 and flipped_faces(xy, faces) == 0:
                break
            target *= 0.5
        else:
            warnings.warn("bijectivity repair did not converge; layout may fold")
    rr = np.linalg.norm(xy, axis=1)
    over = rr > 1.0
    if np.any(over):
        xy[over] /= rr[over, None]
    return DiskParam.from_xy(xy, is_boundary=param.is_boundary)


def log_area_ratio_std(mesh, param):
    """Stddev of log(face area ratio) between surface and layout.

    Both area sets are normalized to unit total so a global scale does not
    contribute. Lower is better; 0 is perfectly area-preserving.
    """
    faces = mesh.faces
    fa3 = mesh.face_areas()
    fa2 = np.abs(_face_areas_2d(param.xy(), faces))
    fa3 = fa3 / fa3.sum()
    fa2 = np.maximum(fa2 / fa2.sum(), 1e-300)
    ratio = np.log(np.maximum(fa3, 1e-300) / fa2)
    return float(np.std(ratio))


def area_preserving_param(mesh, options=DemOptions()):
    """Full parameterization pipeline: Tutte, density flow, bijectivity cap.

    Returns (DiskParam, report dict). The report carries the number of
    flipped faces (must be 0), the final density coefficient of variation,
    log-area-ratio stddevs for the result and the Tutte baseline, and the
    worst |mu|.
    """
    tutte = tutte_embed(mesh)
    flowed = dem_flow(mesh, tutte, options)
    final = enforce_bijectivity(mesh, flowed, mu_cap=options.mu_cap)
    faces = mesh.faces
    xy = final.xy()
    flips = flipped_faces(xy, faces)
    if flips > 0:
        raise GeometryError(f"parameterization has {flips} flipped faces")
    dens = _vertex_density(mesh, xy, faces)
    mu = beltrami_coefficient(mesh, faces, xy)
    report = {
        "flipped_faces": int(flips),
        "density_cv": float(np.std(dens) / max(np.mean(dens), 1e-300)),
        "log_area_ratio_std": log_area_ratio_std(mesh, final),
        "log_area_ratio_std_tutte": log_area_ratio_std(mesh, tutte),
        "max_abs_mu": float(np.max(np.abs(mu))) if len(mu) else 0.0,
        "boundary_max_radius_err": float(
            np.max(np.abs(final.rho[final.is_boundary] - 1.0))
        )
        if np.any(final.is_boundary)
        else 0.0,
    }
    return final, report
