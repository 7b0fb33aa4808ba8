"""Triangle-mesh data model, OBJ/PLY I/O and geometric utilities.

Meshes are immutable: vertex positions (n, 3) float64 and counter-clockwise
face index triples (f, 3). Everything downstream (parameterization, harmonic
analysis) assumes an open, manifold, genus-0 surface with a single boundary
loop; that is *checked* by :func:`validate_open_surface`, never assumed.
"""

import os
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .errors import InvalidMeshError


@dataclass(frozen=True)
class TriMesh:
    """Indexed triangle mesh.

    Parameters
    ----------
    vertices : (n, 3) float array
        Vertex positions in length units.
    faces : (f, 3) int array
        Vertex indices per triangle, counter-clockwise.
    """

    vertices: np.ndarray
    faces: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(np.asarray(self.vertices, dtype=np.float64))
        f = np.ascontiguousarray(np.asarray(self.faces, dtype=np.int64))
        if v.ndim != 2 or v.shape[1] != 3:
            raise InvalidMeshError("vertices must be an (n, 3) array")
        if f.size and (f.ndim != 2 or f.shape[1] != 3):
            raise InvalidMeshError("faces must be an (f, 3) array")
        if f.size == 0:
            f = f.reshape(0, 3)
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise InvalidMeshError("face index out of range")
        if f.size and np.any(
            (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])
        ):
            raise InvalidMeshError("degenerate face with repeated vertex index")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "faces", f)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_faces(self):
        return len(self.faces)

    def face_corners(self):
        """Vertex positions per face corner, three (f, 3) arrays."""
        return (self.vertices[self.faces[:, 0]],
                self.vertices[self.faces[:, 1]],
                self.vertices[self.faces[:, 2]])

    def face_areas(self):
        a, b, c = self.face_corners()
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)

    def bbox_diagonal(self):
        """Diagonal length of the axis-aligned bounding box."""
        lo = self.vertices.min(axis=0)
        hi = self.vertices.max(axis=0)
        return float(np.linalg.norm(hi - lo))

    def with_vertices(self, vertices):
        """Same connectivity, new positions."""
        return TriMesh(vertices, self.faces)


# ---------------------------------------------------------------------------
# topology


def _edge_counts(faces):
    """Undirected edge array (e, 2) and the number of faces on each edge."""
    e = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    e_sorted = np.sort(e, axis=1)
    edges, counts = np.unique(e_sorted, axis=0, return_counts=True)
    return edges, counts, e


def validate_open_surface(mesh):
    """Check that `mesh` is a manifold triangle mesh with exactly one
    boundary loop and no degenerate faces. Raises InvalidMeshError otherwise.
    """
    if mesh.n_faces == 0:
        raise InvalidMeshError("mesh has no faces")
    diag = mesh.bbox_diagonal()
    areas = mesh.face_areas()
    bad = np.nonzero(areas < 1e-14 * diag * diag)[0]
    if bad.size:
        raise InvalidMeshError(f"degenerate (zero-area) face {bad[0]}")
    edges, counts, directed = _edge_counts(mesh.faces)
    if counts.max() > 2:
        raise InvalidMeshError("non-manifold edge (more than two incident faces)")
    # interior edges must appear once in each direction (consistent orientation)
    d_sorted = np.sort(directed, axis=1)
    order = np.lexsort((d_sorted[:, 1], d_sorted[:, 0]))
    d2 = directed[order]
    dup = np.nonzero((np.diff(d_sorted[order], axis=0) == 0).all(axis=1))[0]
    if np.any((d2[dup] == d2[dup + 1]).all(axis=1)):
        raise InvalidMeshError("inconsistent face orientation")
    loop = boundary_loop(mesh)
    n_e = len(edges)
    euler = mesh.n_vertices - n_e + mesh.n_faces
    if euler != 1:
        raise InvalidMeshError(f"not a disk-topology surface (Euler characteristic {euler})")
    used = np.zeros(mesh.n_vertices, bool)
    used[mesh.faces.ravel()] = True
    if not used.all():
        raise InvalidMeshError("mesh has isolated vertices")
    return loop


def boundary_loop(mesh):
    """Ordered vertex indices of the single boundary loop.

    The loop follows the boundary's directed edges (for CCW faces the
    boundary is traversed with the surface on its left). Raises if the mesh
    is closed or has more than one loop.
    """
    faces = mesh.faces
    edges, counts, _ = _edge_counts(faces)
    if not len(edges):
        raise InvalidMeshError("mesh has no edges")
    b_mask = counts == 1
    if not b_mask.any():
        raise InvalidMeshError("not an open surface")
    # recover directed boundary edges in face orientation
    n = mesh.n_vertices
    directed = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    und = np.sort(directed, axis=1)
    bkeys = edges[b_mask][:, 0] * n + edges[b_mask][:, 1]
    dkeys = und[:, 0] * n + und[:, 1]
    on_boundary = np.isin(dkeys, bkeys)
    tails = directed[on_boundary, 0]
    heads = directed[on_boundary, 1]
    if len(np.unique(tails)) != len(tails):
        raise InvalidMeshError("non-manifold boundary vertex")
    nxt = np.full(n, -1, dtype=np.int64)
    nxt[tails] = heads
    start = int(tails.min())
    loop = [start]
    cur = nxt[start]
    while cur != start:
        if cur < 0 or len(loop) > len(tails):
            raise InvalidMeshError("boundary traversal did not close")
        loop.append(int(cur))
        cur = nxt[cur]
    if len(loop) != len(tails):
        raise InvalidMeshError("not single-edge genus-0 (multiple boundary loops)")
    return np.asarray(loop, dtype=np.int64)


# ---------------------------------------------------------------------------
# file I/O


def load_mesh(path):
    """Read a Wavefront OBJ (or ASCII PLY) triangle mesh.

    Faces must be triangles; degenerate faces (area below 1e-14 x squared
    bbox diagonal) are rejected with a diagnostic.
    """
    ext = os.path.splitext(path)[1].lower()
    if ext == ".ply":
        mesh = _load_ply(path)
    else:
        mesh = _load_obj(path)
    diag = mesh.bbox_diagonal()
    if mesh.n_faces:
        areas = mesh.face_areas()
        bad = np.nonzero(areas < 1e-14 * diag * diag)[0]
        if bad.size:
            raise InvalidMeshError(f"{path}: degenerate face {bad[0]} (area {areas[bad[0]]:g})")
    return mesh


def _load_obj(path):
    verts = []
    faces = []
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            tag = parts[0]
            if tag == "v":
                if len(parts) < 4:
                    raise InvalidMeshError(f"{path}:{lineno}: vertex needs 3 coordinates")
                try:
                    verts.append([float(parts[1]), float(parts[2]), float(parts[3])])
                except ValueError as exc:
                    raise InvalidMeshError(f"{path}:{lineno}: bad vertex: {exc}") from None
            elif tag == "f":
                idx = parts[1:]
                if len(idx) != 3:
                    raise InvalidMeshError(
                        f"{path}:{lineno}: face {len(faces)} is not a triangle "
                        f"({len(idx)} vertices)")
                tri = []
                for tok in idx:
                    head = tok.split("/")[0]
                    try:
                        i = int(head)
                    except ValueError:
                        raise InvalidMeshError(f"{path}:{lineno}: bad face index {tok!r}") from None
                    if i < 0:
                        i = len(verts) + 1 + i
                    if not (1 <= i <= len(verts)):
                        raise InvalidMeshError(f"{path}:{lineno}: face index {i} out of range")
                    tri.append(i - 1)
                faces.append(tri)
            # vn/vt/o/g/s/usemtl/mtllib are ignored
    if not verts:
        raise InvalidMeshError(f"{path}: no vertices")
    return TriMesh(np.asarray(verts), np.asarray(faces, dtype=np.int64).reshape(-1, 3))


def _load_ply(path):
    """Minimal ASCII PLY reader (vertex x/y/z + triangular faces)."""
    with open(path, "r", encoding="utf-8", errors="replace") as fh:
        line = fh.readline().strip()
        if line != "ply":
            raise InvalidMeshError(f"{path}: not a PLY file")
        fmt = fh.readline().strip()
        if "ascii" not in fmt:
            raise InvalidMeshError(f"{path}: only ASCII PLY is supported")
        n_v = n_f = 0
        v_props = []
        element = None
        while True:
            line = fh.readline()
            if not line:
                raise InvalidMeshError(f"{path}: unexpected end of header")
            parts = line.strip().split()
            if not parts:
                continue
            if parts[0] == "element":
                element = parts[1]
                if element == "vertex":
                    n_v = int(parts[2])
                elif element == "face":
                    n_f = int(parts[2])
            elif parts[0] == "property" and element == "vertex" and parts[1] != "list":
                v_props.append(parts[2])
            elif parts[0] == "end_header":
                break
        try:
            ix, iy, iz = v_props.index("x"), v_props.index("y"), v_props.index("z")
        except ValueError:
            raise InvalidMeshError(f"{path}: vertex x/y/z properties missing") from None
        verts = np.empty((n_v, 3))
        for i in range(n_v):
            vals = fh.readline().split()
            verts[i] = (float(vals[ix]), float(vals[iy]), float(vals[iz]))
        faces = []
        for i in range(n_f):
            vals = fh.readline().split()
            cnt = int(vals[0])
            if cnt != 3:
                raise InvalidMeshError(f"{path}: face {i} is not a triangle ({cnt} vertices)")
            faces.append([int(vals[1]), int(vals[2]), int(vals[3])])
    return TriMesh(verts, np.asarray(faces, dtype=np.int64).reshape(-1, 3))


def save_mesh(path, mesh):
    """Write a mesh as Wavefront OBJ or ASCII PLY, chosen by extension.

    Coordinates are emitted with 9 significant digits, so unit-scale meshes
    round-trip within 1e-9 per coordinate.
    """
    path = str(path)
    ext = path.rsplit(".", 1)[-1].lower() if "." in path else ""
    if ext == "ply":
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("ply\nformat ascii 1.0\n")
            fh.write(f"element vertex {mesh.n_vertices}\n")
            fh.write("property double x\nproperty double y\nproperty double z\n")
            fh.write(f"element face {mesh.n_faces}\n")
            fh.write("property list uchar int vertex_indices\nend_header\n")
            for x, y, z in mesh.vertices:
                fh.write(f"{x:.9g} {y:.9g} {z:.9g}\n")
            for a, b, c in mesh.faces:
                fh.write(f"3 {a} {b} {c}\n")
    elif ext == "obj":
        with open(path, "w", encoding="utf-8") as fh:
            for x, y, z in mesh.vertices:
                fh.write(f"v {x:.9g} {y:.9g} {z:.9g}\n")
            for a, b, c in mesh.faces:
                fh.write(f"f {a + 1} {b + 1} {c + 1}\n")
    else:
        raise InvalidMeshError(f"{path}: unsupported mesh format (use .obj or .ply)")


# ---------------------------------------------------------------------------
# geometric measures


def corner_angles(mesh):
    """Interior angle at each face corner, (f, 3) array in radians."""
    a, b, c = mesh.face_corners()
    out = np.empty((mesh.n_faces, 3))
    for i, (p, q, r) in enumerate(((a, b, c), (b, c, a), (c, a, b))):
        u = q - p
        v = r - p
        nu = np.linalg.norm(u, axis=1)
        nv = np.linalg.norm(v, axis=1)
        denom = np.where(nu * nv > 0, nu * nv, 1.0)
        cosang = np.clip((u * v).sum(axis=1) / denom, -1.0, 1.0)
        out[:, i] = np.arccos(cosang)
    return out


def angular_distortion(source, target):
    """Mean absolute per-corner angle difference between two meshes with
    identical connectivity, in degrees."""
    if source.n_faces != target.n_faces or not np.array_equal(source.faces, target.faces):
        raise InvalidMeshError("angular_distortion: face connectivity mismatch")
    da = np.abs(corner_angles(source) - corner_angles(target))
    return float(np.degrees(da.mean()))


@dataclass(frozen=True)
class ObbFit:
    """PCA-oriented bounding box.

    half_lengths are sorted descending; rotation columns are the matching
    principal axes (right-handed orthonormal frame).
    """

    half_lengths: np.ndarray
    rotation: np.ndarray
    center: np.ndarray


def obb_fit(points):
    """Oriented bounding box from the PCA frame of the point covariance."""
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    if len(pts) < 2:
        raise InvalidMeshError("obb_fit needs at least 2 points")
    mean = pts.mean(axis=0)
    centered = pts - mean
    cov = centered.T @ centered / len(pts)
    _, axes = np.linalg.eigh(cov)
    proj = centered @ axes
    lo = proj.min(axis=0)
    hi = proj.max(axis=0)
    half = (hi - lo) / 2.0
    order = np.argsort(half)[::-1]
    half = half[order]
    axes = axes[:, order]
    mid = (hi + lo)[order] / 2.0
    if np.linalg.det(axes) < 0:
        axes = axes.copy()
        axes[:, 2] = -axes[:, 2]
        mid[2] = -mid[2]
    center = mean + axes @ mid
    return ObbFit(half_lengths=half, rotation=axes, center=center)


# ---------------------------------------------------------------------------
# point-to-surface distance


def _closest_point_sq(p, a, b, c):
    """Squared distance from points p to triangles (a, b, c), elementwise.

    Vectorized closest-point-on-triangle (Ericson's region method); all
    inputs are (n, 3).
    """
    ab = b - a
    ac = c - a
    ap = p - a
    d1 = (ab * ap).sum(1)
    d2 = (ac * ap).sum(1)
    d3 = (ab * (p - b)).sum(1)
    d4 = (ac * (p - b)).sum(1)
    d5 = (ab * (p - c)).sum(1)
    d6 = (ac * (p - c)).sum(1)

    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    # assignments run in reverse priority so that the highest-priority
    # region (vertex A, checked first in the scalar algorithm) wins
    denom = va + vb + vc
    denom = np.where(denom != 0.0, denom, 1.0)
    v = vb / denom
    w = vc / denom
    closest = a + ab * v[:, None] + ac * w[:, None]

    # edge BC
    num = d4 - d3
    den = num + (d5 - d6)
    wbc = num / np.where(den != 0.0, den, 1.0)
    m = (va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0)
    closest[m] = b[m] + (c[m] - b[m]) * wbc[m, None]
    # edge AC
    wac = d2 / np.where(d2 - d6 != 0.0, d2 - d6, 1.0)
    m = (vb <= 0) & (d2 >= 0) & (d6 <= 0)
    closest[m] = a[m] + ac[m] * wac[m, None]
    # vertex C
    m = (d6 >= 0) & (d5 <= d6)
    closest[m] = c[m]
    # edge AB
    vab = d1 / np.where(d1 - d3 != 0.0, d1 - d3, 1.0)
    m = (vc <= 0) & (d1 >= 0) & (d3 <= 0)
    closest[m] = a[m] + ab[m] * vab[m, None]
    # vertex B
    m = (d3 >= 0) & (d4 <= d3)
    closest[m] = b[m]
    # vertex A
    m = (d1 <= 0) & (d2 <= 0)
    closest[m] = a[m]

    diff = p - closest
    return (diff * diff).sum(1)


def point_surface_distances(points, mesh):
    """Exact distance from each query point to the mesh surface.

    A KD-tree on face centroids prunes candidates: the nearest centroid
    distance is an upper bound on the true distance (centroids lie on the
    surface), so only faces whose centroid is within that bound plus the
    largest centroid-to-vertex radius can contain the closest point.
    """
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 3)
    a, b, c = mesh.face_corners()
    centroids = (a + b + c) / 3.0
    r_face = np.sqrt(np.maximum.reduce([
        ((a - centroids) ** 2).sum(1),
        ((b - centroids) ** 2).sum(1),
        ((c - centroids) ** 2).sum(1),
    ]))
    tree = cKDTree(centroids)
    upper, _ = tree.query(pts, k=1)
    r_max = r_face.max()
    out = np.empty(len(pts))
    chunk = 8192
    for lo in range(0, len(pts), chunk):
        hi = min(lo + chunk, len(pts))
        cand = tree.query_ball_point(pts[lo:hi], upper[lo:hi] + r_max + 1e-12)
        lens = np.fromiter((len(x) for x in cand), dtype=np.int64, count=hi - lo)
        flat = np.concatenate([np.asarray(x, dtype=np.int64) for x in cand])
        rep = np.repeat(np.arange(lo, hi), lens)
        d2 = _closest_point_sq(pts[rep], a[flat], b[flat], c[flat])
        ends = np.cumsum(lens)
        starts = ends - lens
        out[lo:hi] = np.sqrt(np.minimum.reduceat(d2, starts))
    return out


def hausdorff_rmse(reference, reconstructed, symmetric=False):
    """Root-mean-square point-to-surface distance, nondimensionalized.

    Distances run from the reconstructed mesh's vertices to the reference
    surface and are divided by the reference's axis-aligned bounding-box
    diagonal. With ``symmetric=True`` the max of both directions (same
    normalization) is returned.
    """
    if reference.n_vertices == 0 or reconstructed.n_vertices == 0:
        raise InvalidMeshError("hausdorff_rmse: empty mesh")
    diag = reference.bbox_diagonal()
    if diag == 0:
        raise InvalidMeshError("hausdorff_rmse: degenerate reference bounding box")
    d = point_surface_distances(reconstructed.vertices, reference)
    rmse = np.sqrt(np.mean(d * d)) / diag
    if symmetric:
        d2 = point_surface_distances(reference.vertices, reconstructed)
        rmse = max(rmse, np.sqrt(np.mean(d2 * d2)) / diag)
    return float(rmse)
