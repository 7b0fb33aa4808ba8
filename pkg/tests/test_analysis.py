"""Harmonic fitting, synthesis, disk grids, FDEC and descriptors."""

import json

import numpy as np
import pytest

from diskharm import (
    DiskParam,
    GeometryError,
    HarmonicCoeffs,
    TriMesh,
    UsageError,
    analyze,
    boundary_loop,
    coeff_index,
    descriptors,
    fdec_fit,
    fit_harmonics,
    flipped_faces,
    get_table,
    load_coeffs,
    reconstruct,
    save_coeffs,
    synthesize_values,
    uniform_disk_mesh,
    validate_open_surface,
)
from diskharm.analysis import _kappa

from conftest import quasi_uniform_disk_points


def random_real_coeffs(k_max, n_axes, rng, decay=1.5):
    """Coefficients satisfying the reality relation q_{-m} = (-1)^m conj(q_m)."""
    q = np.zeros(((k_max + 1) ** 2, n_axes), dtype=np.complex128)
    for k in range(k_max + 1):
        scale = (k + 1.0) ** -decay
        q[coeff_index(k, 0)] = rng.normal(size=n_axes) * scale
        for m in range(1, k + 1):
            g = (rng.normal(size=n_axes) + 1j * rng.normal(size=n_axes)) * scale
            q[coeff_index(k, m)] = g
            q[coeff_index(k, -m)] = (-1.0) ** m * np.conj(g)
    return q


def test_coeff_index_layout():
    assert coeff_index(0, 0) == 0
    assert coeff_index(1, -1) == 1
    assert coeff_index(1, 0) == 2
    assert coeff_index(1, 1) == 3
    # degree block k occupies rows k^2 .. (k+1)^2 - 1
    for k in (2, 5, 9):
        assert coeff_index(k, -k) == k * k
        assert coeff_index(k, k) == (k + 1) * (k + 1) - 1


def test_fit_round_trip_direct():
    rng = np.random.default_rng(42)
    table = get_table(10)
    q_true = random_real_coeffs(10, 1, rng)[:, 0]
    rho, phi = quasi_uniform_disk_points(3000, seed=7)
    vals = synthesize_values(q_true, table, rho, phi)
    assert vals.dtype == np.float64
    q_fit, info = fit_harmonics(rho, phi, vals, table)
    assert info["solver"] == "direct"
    np.testing.assert_allclose(q_fit, q_true, atol=1e-10)
    assert info["relative_residual"] < 1e-10
    assert info["n_points"] == 3000


def test_fit_round_trip_normal_matches_direct():
    rng = np.random.default_rng(43)
    table = get_table(10)
    q_true = random_real_coeffs(10, 2, rng)
    rho, phi = quasi_uniform_disk_points(4000, seed=8)
    vals = synthesize_values(q_true, table, rho, phi)
    qd, infod = fit_harmonics(rho, phi, vals, table, solver="direct")
    qn, infon = fit_harmonics(rho, phi, vals, table, solver="normal")
    assert infon["solver"] == "normal"
    np.testing.assert_allclose(qn, qd, atol=1e-8)
    np.testing.assert_allclose(qn, q_true, atol=1e-8)


def test_fit_auto_switches_to_streaming(monkeypatch):
    import diskharm.analysis as mod

    monkeypatch.setattr(mod, "_DIRECT_LIMIT", 1)
    table = get_table(4)
    rho, phi = quasi_uniform_disk_points(400, seed=9)
    vals = np.cos(phi) * rho
    _, info = fit_harmonics(rho, phi, vals, table)
    assert info["solver"] == "normal"


def test_solver_residual_and_cond_agree():
    rng = np.random.default_rng(44)
    table = get_table(8)
    q_true = random_real_coeffs(8, 1, rng)[:, 0]
    rho, phi = quasi_uniform_disk_points(5000, seed=10)
    clean = synthesize_values(q_true, table, rho, phi)
    noise = 0.01 * np.linalg.norm(clean) / np.sqrt(5000)
    vals = clean + rng.normal(0, noise, 5000)
    qd, infod = fit_harmonics(rho, phi, vals, table, solver="direct")
    qn, infon = fit_harmonics(rho, phi, vals, table, solver="normal")
    assert infod["relative_residual"] == pytest.approx(
        infon["relative_residual"], rel=1e-6
    )
    ratio = infod["cond"] / infon["cond"]
    assert 1 / 15 < ratio < 15


def test_fit_constant_signal():
    table = get_table(6)
    rho, phi = quasi_uniform_disk_points(2000, seed=11)
    c = 2.75
    q, info = fit_harmonics(rho, phi, np.full(2000, c), table)
    assert q[0] == pytest.approx(c * np.sqrt(np.pi), abs=1e-10)
    assert np.max(np.abs(q[1:])) < 1e-10


def test_fit_single_mode_recovery():
    table = get_table(6)
    rho, phi = quasi_uniform_disk_points(2500, seed=12)
    alpha = 0.7 + 0.2j
    q_true = np.zeros(49, dtype=np.complex128)
    q_true[coeff_index(3, 2)] = alpha
    q_true[coeff_index(3, -2)] = np.conj(alpha)
    vals = synthesize_values(q_true, table, rho, phi)
    q_fit, _ = fit_harmonics(rho, phi, vals, table)
    assert q_fit[coeff_index(3, 2)] == pytest.approx(alpha, abs=1e-11)
    assert q_fit[coeff_index(3, -2)] == pytest.approx(np.conj(alpha), abs=1e-11)
    others = np.delete(np.abs(q_fit), [coeff_index(3, 2), coeff_index(3, -2)])
    assert others.max() < 1e-11


def test_fit_complex_values_path():
    rng = np.random.default_rng(45)
    table = get_table(7)
    qx = random_real_coeffs(7, 1, rng)[:, 0]
    qy = random_real_coeffs(7, 1, rng)[:, 0]
    rho, phi = quasi_uniform_disk_points(2500, seed=13)
    sx = synthesize_values(qx, table, rho, phi)
    sy = synthesize_values(qy, table, rho, phi)
    q_fit, info = fit_harmonics(rho, phi, sx + 1j * sy, table)
    np.testing.assert_allclose(q_fit, qx + 1j * qy, atol=1e-9)


def test_fit_underdetermined_raises():
    table = get_table(10)  # 121 columns
    rho, phi = quasi_uniform_disk_points(100, seed=14)
    with pytest.raises(UsageError):
        fit_harmonics(rho, phi, np.ones(100), table)


def test_fit_rejects_bad_coordinates():
    table = get_table(2)
    rho = np.concatenate([np.full(19, 0.5), [1.4]])
    phi = np.zeros(20)
    with pytest.raises(GeometryError):
        fit_harmonics(rho, phi, np.ones(20), table)
    with pytest.raises(UsageError):
        fit_harmonics(np.array([0.2]), np.array([0.0, 1.0]), np.ones(2), table)


def test_fit_rejects_bad_solver_and_shape():
    table = get_table(2)
    rho, phi = quasi_uniform_disk_points(50, seed=15)
    with pytest.raises(UsageError):
        fit_harmonics(rho, phi, np.ones(50), table, solver="qr")
    with pytest.raises(UsageError):
        fit_harmonics(rho, phi, np.ones(49), table)


def test_synthesize_k_upto_and_errors():
    rng = np.random.default_rng(46)
    table = get_table(5)
    q = random_real_coeffs(5, 1, rng)[:, 0]
    rho, phi = quasi_uniform_disk_points(500, seed=16)
    full = synthesize_values(q, table, rho, phi)
    trunc = synthesize_values(q, table, rho, phi, k_upto=2)
    q_low = q.copy()
    q_low[9:] = 0.0
    np.testing.assert_allclose(
        trunc, synthesize_values(q_low, table, rho, phi), atol=1e-13
    )
    assert not np.allclose(full, trunc)
    with pytest.raises(UsageError):
        synthesize_values(q, table, rho, phi, k_upto=6)
    with pytest.raises(UsageError):
        synthesize_values(q[:-1], table, rho, phi)


def test_synthesize_rejects_reality_violation():
    table = get_table(3)
    q = np.zeros(16, dtype=np.complex128)
    q[coeff_index(2, 1)] = 1.0  # no matching m = -1 partner
    rho, phi = quasi_uniform_disk_points(200, seed=17)
    with pytest.raises(GeometryError):
        synthesize_values(q, table, rho, phi)


def test_parseval_identity():
    """Sum |q|^2 equals the surface integral of |f|^2 over the unit disk."""
    rng = np.random.default_rng(47)
    table = get_table(10)
    q = random_real_coeffs(10, 1, rng)[:, 0]
    x, w = np.polynomial.legendre.leggauss(512)
    r = 0.5 * (x + 1.0)
    wr = 0.5 * w
    n_phi = 128
    ang = 2.0 * np.pi * np.arange(n_phi) / n_phi
    rho = np.repeat(r, n_phi)
    phi = np.tile(ang, r.size)
    vals = synthesize_values(q, table, rho, phi).reshape(r.size, n_phi)
    integral = (2.0 * np.pi / n_phi) * np.sum(wr * r * np.sum(vals**2, axis=1))
    assert integral == pytest.approx(float(np.sum(np.abs(q) ** 2)), rel=1e-9)


def test_uniform_disk_mesh_default():
    mesh, param = uniform_disk_mesh()
    n = mesh.n_vertices
    assert abs(n - 5809) / 5809 < 0.10
    assert param.rho.min() >= 0.0 and param.rho.max() <= 1.0
    assert np.all(param.rho[param.is_boundary] == 1.0)
    assert np.all(param.rho[~param.is_boundary] < 1.0)
    validate_open_surface(mesh)
    assert flipped_faces(param.xy(), mesh.faces) == 0
    loop = boundary_loop(mesh)
    assert sorted(loop) == sorted(np.flatnonzero(param.is_boundary))


def test_uniform_disk_mesh_fine_count():
    mesh, _ = uniform_disk_mesh(edge=0.0075)
    assert abs(mesh.n_vertices - 64492) / 64492 < 0.10


def test_uniform_disk_mesh_rejects_bad_edge():
    with pytest.raises(UsageError):
        uniform_disk_mesh(edge=0.0)
    with pytest.raises(UsageError):
        uniform_disk_mesh(edge=1.5)
    with pytest.raises(UsageError):
        uniform_disk_mesh(edge=0.0005)


def make_coeffs(q, k_max, axes=("x", "y", "z")):
    return HarmonicCoeffs(
        k_max=k_max,
        bc="neumann",
        q=q,
        axes=axes,
        residual=np.zeros(q.shape[1]),
        cond=1.0,
        n_points=0,
        solver="direct",
    )


def test_descriptors_pure_first_degree_cap():
    rng = np.random.default_rng(48)
    q = random_real_coeffs(6, 3, rng)
    q[4:] = 0.0  # keep only k <= 1
    coeffs = make_coeffs(q, 6)
    desc = descriptors(coeffs)
    assert np.isnan(desc.normalized[0]) and np.isnan(desc.normalized[1])
    assert np.all(desc.normalized[2:] < 1e-14)
    assert np.all(desc.per_axis[2:] < 1e-14)


def test_descriptors_resultant_rotation_invariant():
    rng = np.random.default_rng(49)
    q = random_real_coeffs(8, 3, rng)
    coeffs = make_coeffs(q, 8)
    # random rotation applied to the world axes
    a = rng.normal(size=(3, 3))
    rot, _ = np.linalg.qr(a)
    if np.linalg.det(rot) < 0:
        rot[:, 0] = -rot[:, 0]
    coeffs_rot = make_coeffs(q @ rot.T, 8)
    d0 = descriptors(coeffs, frame=np.eye(3))
    d1 = descriptors(coeffs_rot, frame=np.eye(3))
    r0 = np.sqrt(np.sum(d0.per_axis**2, axis=1))
    r1 = np.sqrt(np.sum(d1.per_axis**2, axis=1))
    np.testing.assert_allclose(r1, r0, rtol=1e-8)


def test_descriptors_csv_format(tmp_path):
    rng = np.random.default_rng(50)
    q = random_real_coeffs(4, 3, rng)
    desc = descriptors(make_coeffs(q, 4))
    path = tmp_path / "desc.csv"
    desc.to_csv(path)
    rows = path.read_text().strip().splitlines()
    assert rows[0] == "k,Dx,Dy,Dz,D,Dnorm"
    assert len(rows) == 6
    first = rows[1].split(",")
    assert first[0] == "0" and first[5] == "nan"
    k2 = rows[3].split(",")
    d_val = float(k2[4])
    assert d_val == pytest.approx(
        np.sqrt(np.sum(desc.per_axis[2] ** 2)), rel=1e-12
    )
    assert float(k2[5]) == pytest.approx(desc.normalized[2], rel=1e-12)


def test_kappa_is_one_for_exact_caps():
    for theta in np.radians([5.0, 10.0, 20.0, 50.0]):
        s = np.sin(theta)
        c = 1.0 - np.cos(theta)
        assert _kappa(s, s, c) == pytest.approx(1.0, abs=1e-12)


def test_fdec_eigenproblem_synthetic():
    table = get_table(1)
    l11 = table.eigenvalue(1, 1)
    n11 = table.norm_factor(1, 1)
    l01 = table.eigenvalue(1, 0)
    n01 = table.norm_factor(1, 0)
    # target tangent matrix with known singular values 0.8 and 0.2
    r0 = np.array([0.8, 0.0, 0.0])
    r1 = np.array([0.0, 0.2, 0.0])
    s = 0.5 * n11 * l11
    q_p = (r0 - 1j * r1) / (2 * s)
    q_n = -(r0 + 1j * r1) / (2 * s)
    g = 0.05
    q_0 = np.array([0.0, 0.0, g])
    q = np.zeros((4, 3), dtype=np.complex128)
    q[coeff_index(1, 1)] = q_p
    q[coeff_index(1, -1)] = q_n
    q[coeff_index(1, 0)] = q_0
    fit = fdec_fit(make_coeffs(q, 1), method="eigenproblem")
    assert fit.a == pytest.approx(0.8, abs=1e-12)
    assert fit.b == pytest.approx(0.2, abs=1e-12)
    assert fit.c == pytest.approx(2 * abs(n01) * l01 * l01 * g, abs=1e-12)
    assert abs(fit.v_a @ np.array([1.0, 0, 0])) == pytest.approx(1.0, abs=1e-12)
    assert abs(fit.v_b @ np.array([0, 1.0, 0])) == pytest.approx(1.0, abs=1e-12)
    assert fit.a_avg == pytest.approx(1.0, abs=1e-12)
    assert fit.kappa == pytest.approx(_kappa(fit.a, fit.b, fit.c), abs=1e-15)
    frame = fit.frame()
    np.testing.assert_allclose(frame @ frame.T, np.eye(3), atol=1e-12)


def test_fdec_eigenproblem_aspect_ratio():
    # 4:1 tangent anisotropy must survive the eigenproblem route within 10%
    rng = np.random.default_rng(51)
    rot, _ = np.linalg.qr(rng.normal(size=(3, 3)))
    table = get_table(1)
    s = 0.5 * table.norm_factor(1, 1) * table.eigenvalue(1, 1)
    r0 = 0.6 * rot[:, 0]
    r1 = 0.15 * rot[:, 1]
    q = np.zeros((4, 3), dtype=np.complex128)
    q[coeff_index(1, 1)] = (r0 - 1j * r1) / (2 * s)
    q[coeff_index(1, -1)] = -(r0 + 1j * r1) / (2 * s)
    q[coeff_index(1, 0)] = 0.02 * rot[:, 2]
    fit = fdec_fit(make_coeffs(q, 1), method="eigenproblem")
    assert fit.a / fit.b == pytest.approx(4.0, rel=0.10)


def test_fdec_obb_on_spherical_cap(cap20):
    # 20-degree unit-sphere cap: exact full tangent extent 2 sin 20 = 0.684,
    # exact depth 1 - cos 20 = 0.0603. The k = 1 box underestimates the
    # tangent size and overestimates curvature; k = 5 recovers both well.
    mesh, param, spec = cap20
    coeffs = analyze(mesh, param, k_max=12)
    fit1 = fdec_fit(coeffs, method="obb", k=1)
    assert fit1.method == "obb"
    assert 0.50 < fit1.a_avg < 0.62
    assert fit1.c == pytest.approx(0.0603, rel=0.10)
    assert 1.4 < fit1.kappa < 2.1
    fit5 = fdec_fit(coeffs, method="obb", k=5)
    assert fit5.a_avg == pytest.approx(0.670, rel=0.05)
    assert fit5.c == pytest.approx(0.0629, rel=0.10)
    assert abs(fit5.kappa - 1.0) < 0.25
    assert fit5.a_avg > fit1.a_avg


def test_fdec_fit_validation():
    rng = np.random.default_rng(52)
    q = random_real_coeffs(3, 3, rng)
    coeffs = make_coeffs(q, 3)
    with pytest.raises(UsageError):
        fdec_fit(coeffs, method="svd")
    with pytest.raises(UsageError):
        fdec_fit(coeffs, method="obb", k=7)
    with pytest.raises(GeometryError):
        fdec_fit(make_coeffs(np.zeros((4, 3), dtype=np.complex128), 1),
                 method="eigenproblem")
    q1 = random_real_coeffs(3, 1, rng)
    with pytest.raises(UsageError):
        fdec_fit(make_coeffs(q1, 3, axes=("z",)), method="eigenproblem")


def test_analyze_checks_input_consistency(cap10):
    mesh, param, _ = cap10
    bad_param = DiskParam(
        rho=param.rho[:-1], phi=param.phi[:-1], is_boundary=param.is_boundary[:-1]
    )
    with pytest.raises(UsageError):
        analyze(mesh, bad_param, k_max=3)
    with pytest.raises(UsageError):
        analyze(mesh, param, k_max=-1)


def test_analyze_rejects_flipped_parameterization():
    mesh, param = uniform_disk_mesh(edge=0.2)
    flipped = DiskParam(rho=param.rho, phi=-param.phi, is_boundary=param.is_boundary)
    with pytest.raises(GeometryError):
        analyze(mesh, flipped, k_max=1)


def test_reconstruct_truncation_and_errors():
    rng = np.random.default_rng(53)
    q = random_real_coeffs(5, 3, rng)
    coeffs = make_coeffs(q, 5)
    grid = uniform_disk_mesh(edge=0.1)
    flat = reconstruct(coeffs, grid, k_upto=0)
    expected = q[0].real / np.sqrt(np.pi)
    np.testing.assert_allclose(
        flat.vertices, np.broadcast_to(expected, flat.vertices.shape), atol=1e-12
    )
    assert flat.n_faces == grid[0].n_faces
    bare = reconstruct(coeffs, grid[1], k_upto=2)
    assert bare.n_faces == 0 and bare.n_vertices == grid[0].n_vertices
    with pytest.raises(UsageError):
        reconstruct(coeffs, grid, k_upto=6)


def test_coeffs_accessors():
    rng = np.random.default_rng(54)
    q = random_real_coeffs(4, 3, rng)
    coeffs = make_coeffs(q, 4)
    np.testing.assert_array_equal(coeffs.coeff(3, -2), q[coeff_index(3, -2)])
    block = coeffs.degree_block(2)
    assert block.shape == (5, 3)
    np.testing.assert_array_equal(block[0], q[coeff_index(2, -2)])
    assert coeffs.n_axes == 3
    with pytest.raises(UsageError):
        coeffs.coeff(5, 0)
    with pytest.raises(UsageError):
        coeffs.coeff(2, 3)
    with pytest.raises(UsageError):
        coeffs.degree_block(5)


def test_save_load_coeffs_round_trip(tmp_path):
    rng = np.random.default_rng(55)
    q = random_real_coeffs(6, 3, rng)
    coeffs = make_coeffs(q, 6)
    path = tmp_path / "coeffs.json"
    save_coeffs(path, coeffs)
    loaded = load_coeffs(path)
    assert loaded.k_max == 6
    assert loaded.bc == "neumann"
    assert loaded.axes == ("x", "y", "z")
    assert loaded.solver == "loaded"
    np.testing.assert_allclose(loaded.q, q, rtol=1e-14, atol=1e-16)


def test_load_coeffs_rejects_malformed(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"not": "coeffs"}))
    with pytest.raises(UsageError):
        load_coeffs(path)
    path2 = tmp_path / "bad2.json"
    path2.write_text(json.dumps({
        "k_max": 1, "bc": "neumann", "axes": ["x"],
        "coeffs": [{"k": 3, "m": 0, "re": [1.0], "im": [0.0]}],
    }))
    with pytest.raises(UsageError):
        load_coeffs(path2)
