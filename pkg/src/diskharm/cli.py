"""Command-line interface.

Subcommands cover the full workflow: generate (fractal surfaces), param
(disk parameterization), analyze (harmonic coefficients + descriptors),
hurst (spectrum + power-law fit, single or multi-patch), reconstruct
(synthesis + error sweep), project (cap wrapping), and pipeline (generate ->
sample -> analyze -> hurst in one call).

Every run prints a one-line JSON summary to stdout (always, also on
failure). Exit codes: 0 success, 2 usage, 3 invalid input mesh, 4
numeric/geometry failure. A JSON config file can prefill any flag via
--config; explicit flags win. DISKHARM_THREADS bounds worker threads for
batch subcommands.
"""

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import analysis, capmap, fractal, param as param_mod
from .basis import get_table
from .errors import DiskharmError, GeometryError, InvalidMeshError, UsageError
from .mesh import hausdorff_rmse, load_mesh, save_mesh

__all__ = ["main", "build_parser"]


def _threads():
    val = os.environ.get("DISKHARM_THREADS", "")
    if val.strip():
        try:
            return max(1, int(val))
        except ValueError:
            raise UsageError(
                f"DISKHARM_THREADS must be an integer, got {val!r}"
            ) from None
    return os.cpu_count() or 1


def _int_list(text):
    try:
        return [int(tok) for tok in str(text).split(",") if tok.strip()]
    except ValueError:
        raise UsageError(f"expected comma-separated integers, got {text!r}")


# ---------------------------------------------------------------------------
# parser


def build_parser():
    ap = argparse.ArgumentParser(
        prog="diskharm",
        description="Disk-harmonic analysis of open rough surfaces",
    )
    ap.add_argument(
        "--config",
        help="JSON file with default values for any flag (flags override)",
    )
    sub = ap.add_subparsers(dest="command", metavar="command")

    g = sub.add_parser("generate", help="generate a self-affine height grid")
    g.add_argument("--H", type=float, help="Hurst exponent in (0, 1)")
    g.add_argument("--qr", type=float, help="roll-off wavevector (default 0)")
    g.add_argument("--ql", type=float, help="lower power-law wavevector")
    g.add_argument("--qs", type=float, help="cut-off wavevector")
    g.add_argument("--rms", type=float, help="target rms height (default 1)")
    g.add_argument("--seed", type=int, help="random seed (default 0)")
    g.add_argument(
        "--seeds", help="comma-separated seed list for a batch of grids"
    )
    g.add_argument("--n", type=int, help="grid size, power of two (default 512)")
    g.add_argument(
        "--amplitude-noise",
        action="store_true",
        default=None,
        help="multiply spectral amplitudes by Rayleigh noise",
    )
    g.add_argument("--out", help="output prefix (default surface)")
    g.add_argument(
        "--no-obj",
        action="store_true",
        default=None,
        help="skip the OBJ export of the triangulated grid",
    )

    p = sub.add_parser("param", help="area-preserving disk parameterization")
    p.add_argument("--mesh", help="input OBJ/PLY open surface")
    p.add_argument("--out", help="output CSV path (default param.csv)")
    p.add_argument("--dem-step", type=float, help="flow step size (default 0.1)")
    p.add_argument(
        "--dem-iters", type=int, help="max flow iterations (default 500)"
    )
    p.add_argument("--dem-tol", type=float, help="density CV tolerance (default 1e-2)")

    a = sub.add_parser("analyze", help="harmonic coefficients + descriptors")
    a.add_argument("--mesh", help="input OBJ/PLY surface")
    a.add_argument("--param", help="disk parameterization CSV")
    a.add_argument("--kmax", type=int, help="max degree (default 10)")
    a.add_argument("--bc", help="boundary condition: neumann|dirichlet")
    a.add_argument(
        "--solver", help="least-squares path: auto|direct|normal (default auto)"
    )
    a.add_argument("--axis", help="spectrum axis selector (default z)")
    a.add_argument("--out", help="output prefix (default coeffs)")

    h = sub.add_parser("hurst", help="m = 0 spectrum and Hurst fit")
    h.add_argument("--coeffs", help="coefficients JSON from analyze")
    h.add_argument("--spectrum", help="spectrum CSV (fit only, skip analysis)")
    h.add_argument("--grid", help="height grid binary for multi-patch batch")
    h.add_argument("--patches", type=int, help="number of random patches")
    h.add_argument("--patch-radius", type=int, help="patch radius in cells")
    h.add_argument("--axis", help="axis selector: x|y|z|normalized (default z)")
    h.add_argument("--kmax", type=int, help="analysis max degree (default 70)")
    h.add_argument("--bc", help="boundary condition (default neumann)")
    h.add_argument("--fit-kmin", type=int, help="fit range start (default 2)")
    h.add_argument("--fit-kmax", type=int, help="fit range end (default 70)")
    h.add_argument("--seed", type=int, help="patch placement seed (default 0)")
    h.add_argument("--out", help="output prefix (default hurst)")

    r = sub.add_parser("reconstruct", help="synthesize surfaces from coefficients")
    r.add_argument("--coeffs", help="coefficients JSON")
    r.add_argument("--k", help="comma-separated degree list (default K_max)")
    r.add_argument("--edge", type=float, help="disk mesh edge length (default 0.025)")
    r.add_argument("--ref", help="reference mesh for error reporting")
    r.add_argument("--out", help="output prefix (default recon)")

    j = sub.add_parser("project", help="wrap a flat rough patch onto a cap")
    j.add_argument("--mesh", help="flat patch OBJ")
    j.add_argument("--param", help="patch disk parameterization CSV")
    j.add_argument("--theta", type=float, help="cap half-angle, degrees")
    j.add_argument("--R", type=float, help="cap radius (default 1)")
    j.add_argument("--out", help="output prefix (default cap)")

    q = sub.add_parser(
        "pipeline", help="generate -> sample -> analyze -> hurst in one run"
    )
    q.add_argument("--H", type=float, help="Hurst exponent")
    q.add_argument("--qr", type=float, help="roll-off wavevector (default 0)")
    q.add_argument("--ql", type=float, help="lower wavevector (default 4)")
    q.add_argument("--qs", type=float, help="cut-off wavevector (default n/2)")
    q.add_argument("--rms", type=float, help="rms height (default 1)")
    q.add_argument("--seed", type=int, help="seed (default 0)")
    q.add_argument("--seeds", help="comma-separated seeds for a batch")
    q.add_argument("--n", type=int, help="grid size (default 512)")
    q.add_argument("--kmax", type=int, help="analysis max degree (default 70)")
    q.add_argument("--fit-kmin", type=int, help="fit start (default 2)")
    q.add_argument("--fit-kmax", type=int, help="fit end (default 70)")
    q.add_argument("--out", help="output prefix (default pipeline)")
    return ap


def _merge_config(args, parser):
    """Fill unset flags from the --config JSON file (flags override)."""
    if not args.config:
        return args
    try:
        with open(args.config, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}")
    except json.JSONDecodeError as exc:
        raise UsageError(f"config is not valid JSON: {exc}")
    if not isinstance(doc, dict):
        raise UsageError("config must be a JSON object of flag values")
    for key, val in doc.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise UsageError(f"config key {key!r} is not a known flag")
        if getattr(args, attr) is None:
            setattr(args, attr, val)
    return args


# ---------------------------------------------------------------------------
# subcommands


def _spec_from_args(args, n_default=512):
    if args.H is None:
        raise UsageError("--H is required")
    n = args.n if args.n is not None else n_default
    qs_default = n / 2
    return fractal.PowerLawSpec(
        hurst=float(args.H),
        q_r=float(args.qr) if args.qr is not None else 0.0,
        q_l=float(args.ql) if args.ql is not None else 4.0,
        q_s=float(args.qs) if args.qs is not None else qs_default,
        rms=float(args.rms) if args.rms is not None else 1.0,
        seed=int(args.seed) if args.seed is not None else 0,
        n=int(n),
    )


def _generate_one(spec, prefix, amplitude_noise, write_obj):
    grid = fractal.generate_surface(spec, amplitude_noise=amplitude_noise)
    grid.save(f"{prefix}.f32")
    if write_obj:
        save_mesh(f"{prefix}.obj", grid.to_mesh())
    return {
        "heights": f"{prefix}.f32",
        "sidecar": f"{prefix}.f32.json",
        "obj": f"{prefix}.obj" if write_obj else None,
        "seed": spec.seed,
        "rms": grid.rms,
        "n": grid.n,
    }


def cmd_generate(args):
    prefix = args.out or "surface"
    noise = bool(args.amplitude_noise)
    write_obj = not bool(args.no_obj)
    if args.seeds:
        seeds = _int_list(args.seeds)
        specs = [
            _spec_from_args(
                argparse.Namespace(**{**vars(args), "seed": s}), 512
            )
            for s in seeds
        ]
        with ThreadPoolExecutor(max_workers=_threads()) as pool:
            results = list(
                pool.map(
                    lambda sp: _generate_one(
                        sp, f"{prefix}_seed{sp.seed}", noise, write_obj
                    ),
                    specs,
                )
            )
        return {"command": "generate", "batch": results}
    spec = _spec_from_args(args)
    out = _generate_one(spec, prefix, noise, write_obj)
    out["command"] = "generate"
    return out


def cmd_param(args):
    if not args.mesh:
        raise UsageError("--mesh is required")
    mesh = load_mesh(args.mesh)
    opts = param_mod.DemOptions(
        step=args.dem_step if args.dem_step is not None else 0.1,
        max_iters=args.dem_iters if args.dem_iters is not None else 500,
        tol=args.dem_tol if args.dem_tol is not None else 1e-2,
    )
    dparam, report = param_mod.area_preserving_param(mesh, opts)
    out = args.out or "param.csv"
    dparam.to_csv(out)
    return {"command": "param", "out": out, **report}


def cmd_analyze(args):
    if not args.mesh or not args.param:
        raise UsageError("--mesh and --param are required")
    mesh = load_mesh(args.mesh)
    dparam = param_mod.DiskParam.from_csv(args.param)
    k_max = args.kmax if args.kmax is not None else 10
    bc = args.bc or "neumann"
    solver = args.solver or "auto"
    coeffs = analysis.analyze(mesh, dparam, k_max, bc=bc, solver=solver)
    prefix = args.out or "coeffs"
    analysis.save_coeffs(f"{prefix}.json", coeffs)
    desc = analysis.descriptors(coeffs)
    desc.to_csv(f"{prefix}_descriptors.csv")
    spectrum = fractal.psd_m0(coeffs, axis=args.axis or "z")
    spectrum.to_csv(f"{prefix}_spectrum.csv")
    return {
        "command": "analyze",
        "coeffs": f"{prefix}.json",
        "descriptors": f"{prefix}_descriptors.csv",
        "spectrum": f"{prefix}_spectrum.csv",
        "k_max": k_max,
        "bc": coeffs.bc,
        "n_points": coeffs.n_points,
        "solver": coeffs.solver,
        "cond": coeffs.cond,
        "relative_residual": [float(v) for v in np.atleast_1d(coeffs.residual)],
    }


def _load_spectrum_csv(path):
    ks, lams, psds = [], [], []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header[:3]] != [
            "k",
            "lambda",
            "psd",
        ]:
            raise UsageError(f"{path}: not a spectrum CSV")
        for row in reader:
            if not row:
                continue
            ks.append(int(row[0]))
            lams.append(float(row[1]))
            psds.append(float(row[2]))
    order = np.argsort(ks)
    k = np.asarray(ks)[order]
    return fractal.Spectrum(
        k=k,
        lam=np.asarray(lams)[order],
        psd=np.asarray(psds)[order],
        per_axis=np.zeros((len(k), 0)),
        axis="file",
    )


def _fit_and_write(spectrum, args, prefix, tag=""):
    k_min = args.fit_kmin if args.fit_kmin is not None else 2
    k_max = args.fit_kmax if args.fit_kmax is not None else 70
    fitted = fractal.fit_hurst(spectrum, k_min, k_max)
    fitted.to_csv(f"{prefix}{tag}_spectrum.csv")
    fitted.fit.to_json(f"{prefix}{tag}_fit.json")
    return fitted


def _fit_payload(fitted):
    f = fitted.fit
    return {
        "slope": f.slope,
        "intercept": f.intercept,
        "H": f.hurst,
        "k_min": f.k_min,
        "k_max": f.k_max,
        "n_excluded": f.n_excluded,
    }


def cmd_hurst(args):
    prefix = args.out or "hurst"
    sources = [bool(args.coeffs), bool(args.spectrum), bool(args.grid)]
    if sum(sources) != 1:
        raise UsageError("provide exactly one of --coeffs, --spectrum, --grid")

    if args.spectrum:
        spectrum = _load_spectrum_csv(args.spectrum)
        fitted = _fit_and_write(spectrum, args, prefix)
        return {"command": "hurst", "source": args.spectrum, **_fit_payload(fitted)}

    if args.coeffs:
        coeffs = analysis.load_coeffs(args.coeffs)
        spectrum = fractal.psd_m0(coeffs, axis=args.axis or "z")
        fitted = _fit_and_write(spectrum, args, prefix)
        return {"command": "hurst", "source": args.coeffs, **_fit_payload(fitted)}

    # multi-patch batch over one height grid
    grid = fractal.HeightGrid.load(args.grid)
    n_patches = args.patches if args.patches is not None else 10
    radius = args.patch_radius if args.patch_radius is not None else grid.n // 4
    k_max = args.kmax if args.kmax is not None else 70
    if radius < 2 or 2 * radius > grid.n - 2:
        raise UsageError("patch radius does not fit the grid")
    rng = np.random.default_rng(args.seed if args.seed is not None else 0)
    lo, hi = radius, grid.n - 1 - radius
    centers = [
        (int(rng.integers(lo, hi + 1)), int(rng.integers(lo, hi + 1)))
        for _ in range(n_patches)
    ]
    # integer centers with one radius share the same local geometry, so all
    # patches are fitted against a single design factorization
    patches = [
        fractal.sample_circular_patch(grid, center=c, radius=radius)
        for c in centers
    ]
    base_param = patches[0][1]
    values = np.column_stack([m.vertices[:, 2] for m, _ in patches])
    table = get_table(k_max, args.bc or "neumann")
    q, info = analysis.fit_harmonics(
        base_param.rho, base_param.phi, values, table
    )

    def fit_patch(i):
        coeffs = analysis.HarmonicCoeffs(
            k_max=k_max,
            bc=table.bc.value,
            q=q[:, i : i + 1],
            axes=("z",),
            residual=np.atleast_1d(info["relative_residual"])[i : i + 1],
            cond=info["cond"],
            n_points=info["n_points"],
            solver=info["solver"],
        )
        spectrum = fractal.psd_m0(coeffs, table=table, axis="z")
        fitted = _fit_and_write(spectrum, args, prefix, tag=f"_patch{i}")
        return fitted.fit

    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        fits = list(pool.map(fit_patch, range(n_patches)))
    slopes = np.array([f.slope for f in fits])
    return {
        "command": "hurst",
        "source": args.grid,
        "n_patches": n_patches,
        "patch_radius": radius,
        "centers": centers,
        "slopes": [float(s) for s in slopes],
        "slope_mean": float(slopes.mean()),
        "slope_std": float(slopes.std(ddof=1)) if n_patches > 1 else 0.0,
        "H_mean": float(np.mean([f.hurst for f in fits])),
    }


def cmd_reconstruct(args):
    if not args.coeffs:
        raise UsageError("--coeffs is required")
    coeffs = analysis.load_coeffs(args.coeffs)
    ks = _int_list(args.k) if args.k else [coeffs.k_max]
    for k in ks:
        if k > coeffs.k_max:
            raise UsageError(
                f"requested degree {k} exceeds stored K_max {coeffs.k_max}"
            )
    edge = args.edge if args.edge is not None else 0.025
    prefix = args.out or "recon"
    grid = analysis.uniform_disk_mesh(edge)
    ref = load_mesh(args.ref) if args.ref else None
    rows = []
    for k in ks:
        mesh = analysis.reconstruct(coeffs, grid, k_upto=k)
        path = f"{prefix}_k{k}.obj"
        save_mesh(path, mesh)
        row = {"k": k, "obj": path}
        if ref is not None:
            row["hausdorff_rmse"] = hausdorff_rmse(ref, mesh)
        rows.append(row)
    fdec = analysis.fdec_fit(coeffs, method="obb", k=min(5, coeffs.k_max), edge=edge)
    summary = {
        "command": "reconstruct",
        "edge": edge,
        "n_grid_vertices": grid[0].n_vertices,
        "sweep": rows,
        "fdec": {
            "2a": 2.0 * fdec.a,
            "2b": 2.0 * fdec.b,
            "c": fdec.c,
            "kappa": fdec.kappa,
            "method": fdec.method,
        },
    }
    with open(f"{prefix}_report.json", "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=1)
        fh.write("\n")
    return summary


def cmd_project(args):
    if not args.mesh or not args.param or args.theta is None:
        raise UsageError("--mesh, --param and --theta are required")
    mesh = load_mesh(args.mesh)
    dparam = param_mod.DiskParam.from_csv(args.param)
    cap = capmap.CapSpec(
        theta_c=float(args.theta),
        radius=float(args.R) if args.R is not None else 1.0,
    )
    curved, report = capmap.project_rough_patch(mesh, dparam, cap)
    prefix = args.out or "cap"
    save_mesh(f"{prefix}.obj", curved)
    with open(f"{prefix}_report.json", "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, indent=1)
        fh.write("\n")
    return {"command": "project", "obj": f"{prefix}.obj", **report.to_dict()}


def _pipeline_one(args, seed, prefix):
    spec = _spec_from_args(
        argparse.Namespace(**{**vars(args), "seed": seed}), 512
    )
    grid = fractal.generate_surface(spec)
    mesh, dparam = fractal.sample_circular_patch(grid)
    k_max = args.kmax if args.kmax is not None else 70
    table = get_table(k_max, "neumann")
    q, info = analysis.fit_harmonics(
        dparam.rho, dparam.phi, mesh.vertices[:, 2], table
    )
    coeffs = analysis.HarmonicCoeffs(
        k_max=k_max,
        bc="neumann",
        q=q[:, None] if q.ndim == 1 else q,
        axes=("z",),
        residual=np.atleast_1d(info["relative_residual"]),
        cond=info["cond"],
        n_points=info["n_points"],
        solver=info["solver"],
    )
    spectrum = fractal.psd_m0(coeffs, table=table, axis="z")
    fitted = _fit_and_write(spectrum, args, prefix)
    return {"seed": seed, **_fit_payload(fitted)}


def cmd_pipeline(args):
    prefix = args.out or "pipeline"
    if args.seeds:
        seeds = _int_list(args.seeds)
        with ThreadPoolExecutor(max_workers=_threads()) as pool:
            results = list(
                pool.map(
                    lambda s: _pipeline_one(args, s, f"{prefix}_seed{s}"),
                    seeds,
                )
            )
        hs = [r["H"] for r in results]
        return {
            "command": "pipeline",
            "batch": results,
            "H_mean": float(np.mean(hs)),
            "H_std": float(np.std(hs, ddof=1)) if len(hs) > 1 else 0.0,
        }
    seed = args.seed if args.seed is not None else 0
    out = _pipeline_one(args, seed, prefix)
    out["command"] = "pipeline"
    return out


_COMMANDS = {
    "generate": cmd_generate,
    "param": cmd_param,
    "analyze": cmd_analyze,
    "hurst": cmd_hurst,
    "reconstruct": cmd_reconstruct,
    "project": cmd_project,
    "pipeline": cmd_pipeline,
}


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    if not args.command:
        parser.print_usage(sys.stderr)
        print(json.dumps({"status": "error", "error": "no command given"}))
        return 2
    try:
        args = _merge_config(args, parser)
        summary = _COMMANDS[args.command](args)
        summary["status"] = "ok"
        print(json.dumps(summary, default=_json_default))
        return 0
    except DiskharmError as exc:
        print(f"error: {exc}", file=sys.stderr)
        print(
            json.dumps(
                {
                    "status": "error",
                    "command": args.command,
                    "error": str(exc),
                    "exit_code": exc.exit_code,
                }
            )
        )
        return exc.exit_code
    except OSError as exc:
        # unreadable/missing input or unwritable output is a usage problem
        print(f"error: {exc}", file=sys.stderr)
        print(
            json.dumps(
                {
                    "status": "error",
                    "command": args.command,
                    "error": str(exc),
                    "exit_code": 2,
                }
            )
        )
        return 2


if __name__ == "__main__":
    sys.exit(main())
