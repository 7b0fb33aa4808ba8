"""Least-squares Fourier-Bessel analysis and synthesis on the unit disk.

The complex expansion f(rho, phi) = sum_k sum_m q_m^k D_m^k is solved through
an equivalent real-packed design matrix: one column per (k, m=0) mode and a
cosine/sine column pair per (k, m>=1) mode, which keeps the least-squares
problem real and half the size. Negative orders follow from the reality
relation q_{-m} = (-1)^m conj(q_m).

Two solver paths share the same kernel-assembled design blocks: a dense
orthogonal-factorization solve when the full matrix fits comfortably in
memory, and a streaming normal-equations path (BLAS syrk accumulation +
Cholesky) for large point sets.
"""

import json
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla
from scipy.linalg import blas as sblas
from scipy.linalg import lapack as slapack
from scipy.spatial import Delaunay

from . import _kernels
from .basis import BoundaryCondition, get_table
from .errors import GeometryError, UsageError
from .mesh import TriMesh, obb_fit
from .param import DiskParam, flipped_faces

__all__ = [
    "HarmonicCoeffs",
    "PackedColumns",
    "packed_columns",
    "fit_harmonics",
    "analyze",
    "synthesize_values",
    "reconstruct",
    "uniform_disk_mesh",
    "Descriptors",
    "descriptors",
    "FdecFit",
    "fdec_fit",
    "save_coeffs",
    "load_coeffs",
]

_CHUNK = 4096
_DIRECT_LIMIT = 40_000_000  # doubles; above this the streaming path is used


def coeff_index(k, m):
    """Flat index of (k, m) in the packed coefficient array: k^2 + k + m."""
    return k * k + k + m


# ---------------------------------------------------------------------------
# column layout


@dataclass(frozen=True)
class PackedColumns:
    """Real design columns in kernel order (grouped by order m).

    kind 0 columns are N J_m(l rho) for m = 0; kind 1 / kind 2 are the cosine
    and sine columns 2 N J_m cos(m phi) and -2 N J_m sin(m phi) whose
    coefficients are Re q_m^k and Im q_m^k.
    """

    morder: np.ndarray  # int32, kernel order parameter
    lvals: np.ndarray
    amp: np.ndarray
    kind: np.ndarray  # int32: 0 const, 1 cos, 2 sin
    k: np.ndarray  # degree per column
    m: np.ndarray  # order per column (>= 0)

    @property
    def n_cols(self):
        return len(self.morder)

    def subset(self, k_upto):
        sel = self.k <= k_upto
        return PackedColumns(
            morder=self.morder[sel],
            lvals=self.lvals[sel],
            amp=self.amp[sel],
            kind=self.kind[sel],
            k=self.k[sel],
            m=self.m[sel],
        )


def packed_columns(table):
    """Column layout for an eigenvalue table, grouped by m for the kernel."""
    K = table.k_max
    morder = []
    lvals = []
    amp = []
    kind = []
    kk = []
    mm = []
    for m in range(K + 1):
        for k in range(m, K + 1):
            l = table.eigenvalue(k, m)
            N = table.norm_factor(k, m)
            if m == 0:
                morder.append(0)
                lvals.append(l)
                amp.append(N)
                kind.append(0)
                kk.append(k)
                mm.append(0)
            else:
                morder.append(m)
                lvals.append(l)
                amp.append(2.0 * N)
                kind.append(1)
                kk.append(k)
                mm.append(m)
                morder.append(m)
                lvals.append(l)
                amp.append(-2.0 * N)
                kind.append(2)
                kk.append(k)
                mm.append(m)
    return PackedColumns(
        morder=np.array(morder, dtype=np.int32),
        lvals=np.array(lvals, dtype=np.float64),
        amp=np.array(amp, dtype=np.float64),
        kind=np.array(kind, dtype=np.int32),
        k=np.array(kk, dtype=np.int64),
        m=np.array(mm, dtype=np.int64),
    )


def _check_disk_coords(rho, phi):
    rho = np.ascontiguousarray(np.asarray(rho, dtype=np.float64))
    phi = np.ascontiguousarray(np.asarray(phi, dtype=np.float64))
    if rho.ndim != 1 or rho.shape != phi.shape:
        raise UsageError("rho and phi must be equal-length 1-D arrays")
    if not np.all(np.isfinite(rho)) or not np.all(np.isfinite(phi)):
        raise GeometryError("non-finite disk coordinates")
    if rho.min() < 0.0 or rho.max() > 1.0 + 1e-9:
        raise GeometryError("rho out of [0, 1]")
    if rho.max() > 1.0:
        rho = np.minimum(rho, 1.0)
    return rho, phi


# ---------------------------------------------------------------------------
# fitting engine


def _fold_to_complex(sol, cols, k_max):
    """Map real packed solution columns to complex coefficients q_m^k."""
    ncoef = (k_max + 1) ** 2
    c = sol.shape[1]
    q = np.zeros((ncoef, c), dtype=np.complex128)
    pos = cols.k * cols.k + cols.k + cols.m
    is_m0 = cols.kind == 0
    is_cos = cols.kind == 1
    is_sin = cols.kind == 2
    q[pos[is_m0]] = sol[is_m0]
    q[pos[is_cos]] = sol[is_cos]
    q[pos[is_sin]] += 1j * sol[is_sin]
    # reality relation fills negative orders
    kk = cols.k[is_cos]
    mm = cols.m[is_cos]
    src = pos[is_cos]
    dst = kk * kk + kk - mm
    sign = np.where(mm % 2 == 0, 1.0, -1.0)[:, None]
    q[dst] = sign * np.conj(q[src])
    return q


def _unfold_from_complex(q, cols):
    """Real (or complex) coefficients of the packed columns for given q."""
    pos = cols.k * cols.k + cols.k + cols.m
    neg = cols.k * cols.k + cols.k - cols.m
    sign = np.where(cols.m % 2 == 0, 1.0, -1.0)[:, None]
    qp = q[pos]
    qn = sign * q[neg]
    out = np.empty((cols.n_cols, q.shape[1]), dtype=np.complex128)
    is_m0 = cols.kind == 0
    is_cos = cols.kind == 1
    is_sin = cols.kind == 2
    out[is_m0] = qp[is_m0]
    out[is_cos] = 0.5 * (qp[is_cos] + qn[is_cos])
    out[is_sin] = -0.5j * (qp[is_sin] - qn[is_sin])
    return out


def _fill(rho, phi, cols, out):
    _kernels.fill_design(
        rho, phi, cols.morder, cols.lvals, cols.amp, cols.kind, out
    )


def fit_harmonics(rho, phi, values, table, solver="auto"):
    """Least-squares coefficients for one or more signals on disk points.

    values has shape (n,) or (n, c), real or complex; all columns share one
    factorization. Returns (q, info) with q of shape ((K+1)^2, c) complex and
    info carrying the solver path, condition estimate and relative residuals.
    """
    rho, phi = _check_disk_coords(rho, phi)
    values = np.asarray(values)
    squeeze = values.ndim == 1
    if squeeze:
        values = values[:, None]
    if values.ndim != 2 or values.shape[0] != rho.shape[0]:
        raise UsageError("values must have one row per disk point")
    if solver not in ("auto", "direct", "normal"):
        raise UsageError(f"unknown solver {solver!r}")

    is_complex = np.iscomplexobj(values)
    if is_complex:
        V = np.concatenate([values.real, values.imag], axis=1)
    else:
        V = values.astype(np.float64, copy=False)
    V = np.ascontiguousarray(V)

    cols = packed_columns(table)
    ncols = cols.n_cols
    n = rho.shape[0]
    if n < ncols:
        raise UsageError(
            f"underdetermined fit: {n} points for {ncols} basis columns"
        )

    use_direct = solver == "direct" or (
        solver == "auto" and n * ncols <= _DIRECT_LIMIT
    )
    if use_direct:
        sol, cond, rel_res = _solve_direct(rho, phi, cols, V)
        path = "direct"
    else:
        sol, cond, rel_res = _solve_normal(rho, phi, cols, V)
        path = "normal"

    if cond > 1e12:
        warnings.warn(
            f"ill-conditioned harmonic fit (cond ~ {cond:.3g}); "
            "coefficients may be unreliable"
        )

    q = _fold_to_complex(sol, cols, table.k_max)
    if is_complex:
        c = values.shape[1]
        q = q[:, :c] + 1j * q[:, c:]
        n_re = np.linalg.norm(values.real, axis=0)
        n_im = np.linalg.norm(values.imag, axis=0)
        abs_res = np.hypot(rel_res[:c] * n_re, rel_res[c:] * n_im)
        denom = np.hypot(n_re, n_im)
        rel_res = np.where(denom > 0, abs_res / np.maximum(denom, 1e-300), 0.0)
    info = {
        "solver": path,
        "backend": _kernels.BACKEND,
        "cond": float(cond),
        "relative_residual": rel_res[0] if squeeze else rel_res,
        "n_points": int(n),
    }
    if squeeze:
        q = q[:, 0]
    return q, info


def _solve_direct(rho, phi, cols, V):
    ncols = cols.n_cols
    n = rho.shape[0]
    B = np.empty((ncols, n))
    _fill(rho, phi, cols, B)
    A = B.T  # (n, ncols), Fortran-contiguous view
    sol, _, rank, sv = sla.lstsq(A, V, lapack_driver="gelsd")
    if rank < ncols:
        warnings.warn(f"rank-deficient design matrix (rank {rank} < {ncols})")
    cond = float(sv[0] / sv[-1]) if sv[-1] > 0 else np.inf
    resid = V - A @ sol
    vnorm = np.linalg.norm(V, axis=0)
    rel = np.linalg.norm(resid, axis=0) / np.maximum(vnorm, 1e-300)
    rel = np.where(vnorm > 0, rel, 0.0)
    return sol, cond, rel


def _solve_normal(rho, phi, cols, V):
    ncols = cols.n_cols
    n = rho.shape[0]
    c = V.shape[1]
    G = np.zeros((ncols, ncols), order="F")
    R = np.zeros((ncols, c))
    vtv = np.zeros(c)
    start = 0
    while start < n:
        h = min(_CHUNK, n - start)
        buf = np.empty((h, ncols), order="F")
        _fill(rho[start : start + h], phi[start : start + h], cols, buf.T)
        G = sblas.dsyrk(
            1.0, buf, beta=1.0, c=G, trans=1, lower=0, overwrite_c=1
        )
        Vc = V[start : start + h]
        R += buf.T @ Vc
        vtv += np.einsum("ij,ij->j", Vc, Vc)
        start += h

    # 1-norm of the (symmetric) Gram matrix from its upper triangle
    absG = np.abs(G)
    colsum = absG.sum(axis=0) + absG.sum(axis=1) - np.abs(np.diag(G))
    anorm = float(colsum.max())

    cho, low = sla.cho_factor(G, lower=False, overwrite_a=True)
    rcond, info = slapack.dpocon(cho, anorm)
    if info != 0:
        raise GeometryError("condition estimation failed")
    cond = float(np.sqrt(1.0 / max(rcond, 1e-300)))
    sol = sla.cho_solve((cho, low), R)
    # residual^2 = |V|^2 - <R, sol> at the least-squares minimizer
    res2 = np.maximum(vtv - np.einsum("ij,ij->j", R, sol), 0.0)
    vnorm = np.sqrt(vtv)
    rel = np.sqrt(res2) / np.maximum(vnorm, 1e-300)
    rel = np.where(vnorm > 0, rel, 0.0)
    return sol, cond, rel


# ---------------------------------------------------------------------------
# public analyze / synthesize


@dataclass(frozen=True)
class HarmonicCoeffs:
    """Complex expansion coefficients q_m^k for one or more signal axes.

    q[coeff_index(k, m), i] is the coefficient of D_m^k for axis i.
    """

    k_max: int
    bc: str
    q: np.ndarray  # ((K+1)^2, n_axes) complex
    axes: tuple
    residual: np.ndarray
    cond: float
    n_points: int
    solver: str

    @property
    def n_axes(self):
        return self.q.shape[1]

    def coeff(self, k, m):
        if not (0 <= abs(m) <= k <= self.k_max):
            raise UsageError(f"coefficient index out of range: k={k}, m={m}")
        return self.q[coeff_index(k, m)]

    def degree_block(self, k):
        """All coefficients of degree k: rows m = -k .. k."""
        if not (0 <= k <= self.k_max):
            raise UsageError(f"degree out of range: {k}")
        return self.q[k * k : (k + 1) * (k + 1)]


def analyze(mesh, param, k_max, bc="neumann", solver="auto"):
    """Expansion coefficients of a mesh over its disk parameterization."""
    bc = BoundaryCondition.parse(bc)
    if k_max < 0:
        raise UsageError("k_max must be >= 0")
    if mesh.n_vertices != param.n_vertices:
        raise UsageError("mesh and parameterization vertex counts differ")
    if mesh.n_faces:
        flips = flipped_faces(param.xy(), mesh.faces)
        if flips > 0:
            raise GeometryError(
                f"parameterization has {flips} flipped faces; not bijective"
            )
    table = get_table(k_max, bc)
    q, info = fit_harmonics(param.rho, param.phi, mesh.vertices, table, solver)
    return HarmonicCoeffs(
        k_max=k_max,
        bc=bc.value,
        q=q,
        axes=("x", "y", "z"),
        residual=np.asarray(info["relative_residual"], dtype=np.float64),
        cond=info["cond"],
        n_points=info["n_points"],
        solver=info["solver"],
    )


def synthesize_values(q, table, rho, phi, k_upto=None):
    """Evaluate the expansion on disk points; returns (n, c) real values."""
    rho, phi = _check_disk_coords(rho, phi)
    if k_upto is None:
        k_upto = table.k_max
    if not (0 <= k_upto <= table.k_max):
        raise UsageError(
            f"k_upto {k_upto} outside the table range 0..{table.k_max}"
        )
    q = np.asarray(q, dtype=np.complex128)
    squeeze = q.ndim == 1
    if squeeze:
        q = q[:, None]
    if q.shape[0] != (table.k_max + 1) ** 2:
        raise UsageError("coefficient array length does not match the table")
    cols = packed_columns(table).subset(k_upto)
    cvec = _unfold_from_complex(q, cols)
    imag_scale = np.abs(cvec.imag).max() if cvec.size else 0.0
    real_scale = max(np.abs(cvec.real).max() if cvec.size else 0.0, 1e-300)
    if imag_scale <= 1e-12 * real_scale:
        coeffs = np.ascontiguousarray(cvec.real)
        complex_path = False
    else:
        coeffs = cvec
        complex_path = True

    n = rho.shape[0]
    c = q.shape[1]
    out = np.zeros((n, c), dtype=coeffs.dtype)
    start = 0
    while start < n:
        h = min(_CHUNK, n - start)
        block = np.empty((cols.n_cols, h))
        _fill(rho[start : start + h], phi[start : start + h], cols, block)
        out[start : start + h] = block.T @ coeffs
        start += h

    if complex_path:
        ref = np.linalg.norm(out.real)
        if np.linalg.norm(out.imag) > 1e-9 * max(ref, 1e-300):
            raise GeometryError(
                "synthesized signal has a non-negligible imaginary part; "
                "coefficients violate the reality relation"
            )
        out = np.ascontiguousarray(out.real)
    if squeeze:
        out = out[:, 0]
    return out


def reconstruct(coeffs, grid, k_upto=None):
    """Rebuild a surface mesh from coefficients on a disk grid.

    grid is a (TriMesh, DiskParam) pair (e.g. from uniform_disk_mesh) or a
    bare DiskParam (the result then has no faces).
    """
    if k_upto is None:
        k_upto = coeffs.k_max
    if k_upto > coeffs.k_max:
        raise UsageError(
            f"k_upto {k_upto} exceeds available degrees (K_max {coeffs.k_max})"
        )
    if isinstance(grid, DiskParam):
        gparam = grid
        faces = np.zeros((0, 3), dtype=np.int64)
    else:
        gmesh, gparam = grid
        faces = gmesh.faces
    table = get_table(coeffs.k_max, BoundaryCondition.parse(coeffs.bc))
    vals = synthesize_values(coeffs.q, table, gparam.rho, gparam.phi, k_upto)
    if vals.ndim == 1 or vals.shape[1] != 3:
        raise UsageError("reconstruction needs 3-axis coefficients")
    return TriMesh(vertices=vals, faces=faces)


def uniform_disk_mesh(edge=0.025):
    """Quasi-uniform triangulation of the unit disk with given edge length.

    Concentric rings at spacing matching equilateral-row height, staggered
    point offsets between rings, Delaunay-connected. Returns
    (TriMesh, DiskParam); vertices lie in the z = 0 plane.
    """
    if not (0 < edge < 1):
        raise UsageError("edge length must be in (0, 1)")
    n_rings = int(round(1.0 / (0.8660254037844386 * edge)))
    if n_rings < 1:
        raise UsageError("edge length too coarse for the unit disk")
    est = np.pi / (0.8660254037844386 * edge * edge)
    if est > 5e6:
        raise UsageError("edge length too fine (vertex budget exceeded)")
    rho = [0.0]
    phi = [0.0]
    for i in range(1, n_rings + 1):
        r = i / n_rings
        cnt = max(6, int(round(2.0 * np.pi * r / edge)))
        offs = 0.5 * (i % 2)
        ang = 2.0 * np.pi * (np.arange(cnt) + offs) / cnt
        rho.extend([r] * cnt)
        phi.extend(np.mod(ang + np.pi, 2.0 * np.pi) - np.pi)
    rho = np.asarray(rho)
    phi = np.asarray(phi)
    xy = np.column_stack([rho * np.cos(phi), rho * np.sin(phi)])
    tri = Delaunay(xy)
    faces = tri.simplices.astype(np.int64)
    # enforce counter-clockwise orientation
    a = xy[faces[:, 0]]
    b = xy[faces[:, 1]]
    c = xy[faces[:, 2]]
    signed = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (
        b[:, 1] - a[:, 1]
    ) * (c[:, 0] - a[:, 0])
    flip = signed < 0
    faces[flip] = faces[flip][:, [0, 2, 1]]
    keep = np.abs(signed) > 1e-14
    faces = faces[keep]
    verts = np.column_stack([xy, np.zeros(len(xy))])
    mesh = TriMesh(vertices=verts, faces=faces)
    is_b = rho >= 1.0 - 1e-12
    return mesh, DiskParam(rho=np.minimum(rho, 1.0), phi=phi, is_boundary=is_b)


# ---------------------------------------------------------------------------
# FDEC and shape descriptors


@dataclass(frozen=True)
class FdecFit:
    """First-degree cap fit: half-axes a >= b, depth c, tangent directions."""

    a: float
    b: float
    c: float
    v_a: np.ndarray
    v_b: np.ndarray
    kappa: float
    method: str

    @property
    def a_avg(self):
        """Mean of the two full tangent extents (a and b are half-axes)."""
        return self.a + self.b

    def frame(self):
        """Orthonormal rows (v_a, v_b, v_a x v_b)."""
        va = self.v_a / np.linalg.norm(self.v_a)
        vb = self.v_b - va * (va @ self.v_b)
        nb = np.linalg.norm(vb)
        if nb < 1e-12:
            raise GeometryError("degenerate tangent directions")
        vb /= nb
        return np.vstack([va, vb, np.cross(va, vb)])


def _kappa(a, b, c):
    mean_ab = 0.5 * (a + b)
    denom = mean_ab * mean_ab + c * c
    if denom <= 0:
        return np.nan
    return float(4.0 * c * c / (denom * denom))


def fdec_fit(coeffs, method="obb", k=5, edge=0.025):
    """Cap half-axes (a, b), depth c and curvature index kappa.

    method "eigenproblem": closed-form from the degree-1 coefficients (fast;
    systematically underestimates the physical cap size). method "obb":
    reconstruct on a uniform disk grid up to degree `k` and measure the
    PCA-oriented bounding box (a, b = two largest half-extents, c = twice the
    smallest); this matches direct measurements much better.
    """
    if coeffs.k_max < 1:
        raise UsageError("FDEC fit needs k_max >= 1")
    if coeffs.n_axes != 3:
        raise UsageError("FDEC fit needs 3-axis coefficients")
    table = get_table(coeffs.k_max, BoundaryCondition.parse(coeffs.bc))
    l11 = table.eigenvalue(1, 1)
    n11 = table.norm_factor(1, 1)
    l01 = table.eigenvalue(1, 0)
    n01 = table.norm_factor(1, 0)
    q_p = coeffs.coeff(1, 1)
    q_n = coeffs.coeff(1, -1)
    q_0 = coeffs.coeff(1, 0)

    A = 0.5 * n11 * l11 * np.vstack([q_p - q_n, 1j * (q_p + q_n)])
    if np.abs(A.imag).max() > 1e-9 * max(np.abs(A.real).max(), 1e-300):
        warnings.warn("degree-1 coefficients violate the reality relation")
    A = A.real
    if not np.any(np.abs(A) > 0) and not np.any(np.abs(q_0) > 0):
        raise GeometryError("degenerate first-degree cap (zero coefficients)")
    _, sv, vt = np.linalg.svd(A, full_matrices=False)
    a_eig = float(sv[0])
    b_eig = float(sv[1]) if len(sv) > 1 else 0.0
    v_a = vt[0]
    v_b = vt[1] if vt.shape[0] > 1 else _any_orthogonal(v_a)
    c_eig = float(2.0 * abs(n01) * l01 * l01 * np.linalg.norm(q_0))

    if method == "eigenproblem":
        return FdecFit(
            a=a_eig,
            b=b_eig,
            c=c_eig,
            v_a=v_a,
            v_b=v_b,
            kappa=_kappa(a_eig, b_eig, c_eig),
            method=method,
        )
    if method != "obb":
        raise UsageError(f"unknown FDEC method {method!r}")
    if k > coeffs.k_max:
        raise UsageError(f"FDEC obb degree {k} exceeds K_max {coeffs.k_max}")
    grid = uniform_disk_mesh(edge)
    cap = reconstruct(coeffs, grid, k_upto=k)
    fit = obb_fit(cap.vertices)
    h = fit.half_lengths  # descending
    a, b = float(h[0]), float(h[1])
    c = float(2.0 * h[2])
    # tangent directions from the box axes of the two largest extents
    v_a = fit.rotation[:, 0]
    v_b = fit.rotation[:, 1]
    return FdecFit(
        a=a, b=b, c=c, v_a=v_a, v_b=v_b, kappa=_kappa(a, b, c), method="obb"
    )


def _any_orthogonal(v):
    ref = np.array([1.0, 0.0, 0.0])
    if abs(v @ ref) > 0.9:
        ref = np.array([0.0, 1.0, 0.0])
    w = ref - v * (v @ ref)
    return w / np.linalg.norm(w)


@dataclass(frozen=True)
class Descriptors:
    """Per-degree amplitude descriptors.

    per_axis[k, i] is sqrt(sum_m |q_m^k|^2) for world axis i; rotated is the
    same after rotating coefficient 3-vectors into the cap frame; normalized
    is the scale-free resultant (defined for k >= 2, NaN below).
    """

    k: np.ndarray
    per_axis: np.ndarray
    rotated: np.ndarray
    normalized: np.ndarray
    frame: np.ndarray
    frame_fallback: bool

    def to_csv(self, path):
        resultant = np.sqrt(np.sum(self.per_axis**2, axis=1))
        with open(path, "w", newline="", encoding="utf-8") as fh:
            fh.write("k,Dx,Dy,Dz,D,Dnorm\n")
            for i, kk in enumerate(self.k):
                row = [
                    str(int(kk)),
                    *(format(v, ".15g") for v in self.per_axis[i]),
                    format(resultant[i], ".15g"),
                    format(self.normalized[i], ".15g"),
                ]
                fh.write(",".join(row) + "\n")


def _degree_amplitudes(q, k_max):
    out = np.empty((k_max + 1, q.shape[1]))
    for k in range(k_max + 1):
        block = q[k * k : (k + 1) * (k + 1)]
        out[k] = np.sqrt(np.sum(np.abs(block) ** 2, axis=0))
    return out


def descriptors(coeffs, frame=None):
    """Degree amplitude descriptors, raw and cap-frame normalized."""
    if coeffs.n_axes != 3:
        raise UsageError("descriptors need 3-axis coefficients")
    fallback = False
    if frame is None:
        try:
            frame = fdec_fit(coeffs, method="eigenproblem").frame()
        except GeometryError:
            frame = np.eye(3)
            fallback = True
            warnings.warn(
                "degenerate first-degree cap; using world axes for "
                "descriptor normalization"
            )
    frame = np.asarray(frame, dtype=np.float64)
    per_axis = _degree_amplitudes(coeffs.q, coeffs.k_max)
    q_rot = coeffs.q @ frame.T
    rotated = _degree_amplitudes(q_rot, coeffs.k_max)
    normalized = np.full(coeffs.k_max + 1, np.nan)
    if coeffs.k_max >= 1:
        ref = rotated[1]
        if np.all(ref > 0):
            for k in range(2, coeffs.k_max + 1):
                normalized[k] = np.sqrt(np.sum((rotated[k] / ref) ** 2))
        else:
            warnings.warn(
                "zero first-degree amplitude along a cap axis; normalized "
                "descriptors unavailable"
            )
    return Descriptors(
        k=np.arange(coeffs.k_max + 1),
        per_axis=per_axis,
        rotated=rotated,
        normalized=normalized,
        frame=frame,
        frame_fallback=fallback,
    )


# ---------------------------------------------------------------------------
# coefficient file format


def save_coeffs(path, coeffs):
    """Write coefficients as JSON (15 significant digits)."""
    entries = []
    for k in range(coeffs.k_max + 1):
        for m in range(-k, k + 1):
            row = coeffs.q[coeff_index(k, m)]
            entries.append(
                {
                    "k": k,
                    "m": m,
                    "re": [float(format(v.real, ".15g")) for v in row],
                    "im": [float(format(v.imag, ".15g")) for v in row],
                }
            )
    doc = {
        "k_max": coeffs.k_max,
        "bc": coeffs.bc,
        "axes": list(coeffs.axes),
        "coeffs": entries,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=1)
        fh.write("\n")


def load_coeffs(path):
    with open(path, encoding="utf-8") as fh:
        doc = json.load(fh)
    try:
        k_max = int(doc["k_max"])
        bc = BoundaryCondition.parse(doc["bc"]).value
        axes = tuple(doc["axes"])
        entries = doc["coeffs"]
    except (KeyError, TypeError) as exc:
        raise UsageError(f"{path}: not a coefficient file ({exc})") from None
    n_axes = len(axes)
    q = np.zeros(((k_max + 1) ** 2, n_axes), dtype=np.complex128)
    for ent in entries:
        k = int(ent["k"])
        m = int(ent["m"])
        if not (0 <= abs(m) <= k <= k_max):
            raise UsageError(f"{path}: coefficient index out of range")
        q[coeff_index(k, m)] = np.asarray(ent["re"], dtype=np.float64) + 1j * (
            np.asarray(ent["im"], dtype=np.float64)
        )
    return HarmonicCoeffs(
        k_max=k_max,
        bc=bc,
        q=q,
        axes=axes,
        residual=np.full(n_axes, np.nan),
        cond=np.nan,
        n_points=0,
        solver="loaded",
    )
