"""Disk-harmonic (Fourier-Bessel) analysis of open rough surfaces.

Workflow: parameterize an open genus-0 mesh onto the unit disk
(area-preserving), expand it in an orthonormal Fourier-Bessel basis, then
read global shape from the low degrees (ellipsoidal cap fit), roughness
scaling from the m = 0 radial power spectrum (Hurst exponent), and rebuild
surfaces from truncated expansions. A fractal-surface laboratory and
sphere-cap projections support validation end to end.
"""

from .analysis import (
    Descriptors,
    FdecFit,
    HarmonicCoeffs,
    analyze,
    coeff_index,
    descriptors,
    fdec_fit,
    fit_harmonics,
    load_coeffs,
    reconstruct,
    save_coeffs,
    synthesize_values,
    uniform_disk_mesh,
)
from .basis import (
    BoundaryCondition,
    EigenTable,
    bessel_j,
    bessel_j_prime,
    eval_basis,
    find_eigenvalues,
    get_table,
    normalization,
    wavelengths,
)
from .capmap import (
    CapSpec,
    ProjectionReport,
    disk_scale,
    lambert_forward,
    lambert_inverse,
    project_rough_patch,
    smooth_cap,
)
from .errors import DiskharmError, GeometryError, InvalidMeshError, UsageError
from .fractal import (
    HeightGrid,
    HurstFit,
    PowerLawSpec,
    Spectrum,
    fit_hurst,
    generate_surface,
    iso_power_law,
    psd_m0,
    sample_circular_patch,
    sample_square_patch,
)
from .mesh import (
    ObbFit,
    TriMesh,
    angular_distortion,
    boundary_loop,
    corner_angles,
    hausdorff_rmse,
    load_mesh,
    obb_fit,
    point_surface_distances,
    save_mesh,
    validate_open_surface,
)
from .param import (
    DemOptions,
    DiskParam,
    area_preserving_param,
    beltrami_coefficient,
    dem_flow,
    enforce_bijectivity,
    flipped_faces,
    linear_beltrami_solver,
    log_area_ratio_std,
    tutte_embed,
)

__version__ = "0.1.0"

__all__ = [
    "BoundaryCondition",
    "CapSpec",
    "DemOptions",
    "Descriptors",
    "DiskharmError",
    "DiskParam",
    "EigenTable",
    "FdecFit",
    "GeometryError",
    "HarmonicCoeffs",
    "HeightGrid",
    "HurstFit",
    "InvalidMeshError",
    "ObbFit",
    "PowerLawSpec",
    "ProjectionReport",
    "Spectrum",
    "TriMesh",
    "UsageError",
    "analyze",
    "angular_distortion",
    "area_preserving_param",
    "beltrami_coefficient",
    "bessel_j",
    "bessel_j_prime",
    "boundary_loop",
    "coeff_index",
    "corner_angles",
    "dem_flow",
    "descriptors",
    "disk_scale",
    "enforce_bijectivity",
    "eval_basis",
    "fdec_fit",
    "find_eigenvalues",
    "fit_harmonics",
    "flipped_faces",
    "fit_hurst",
    "generate_surface",
    "get_table",
    "hausdorff_rmse",
    "iso_power_law",
    "lambert_forward",
    "lambert_inverse",
    "linear_beltrami_solver",
    "load_coeffs",
    "load_mesh",
    "log_area_ratio_std",
    "normalization",
    "obb_fit",
    "point_surface_distances",
    "project_rough_patch",
    "psd_m0",
    "reconstruct",
    "sample_circular_patch",
    "sample_square_patch",
    "save_coeffs",
    "save_mesh",
    "smooth_cap",
    "synthesize_values",
    "tutte_embed",
    "uniform_disk_mesh",
    "validate_open_surface",
    "wavelengths",
    "__version__",
]
