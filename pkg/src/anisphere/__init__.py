"""anisphere: incidence geometry of anisotropic spheres in a Finsler-Minkowski
space -- Wulff shapes, sphere congruences, canal surfaces, the anisotropic
Laguerre functional and its fourth-order Euler-Lagrange equation on S^2, and
Hamilton-Jacobi cross-validation of Huygens' principle."""

__version__ = "0.1.0"

from .calculus import (
    ScalarField,
    TangentTensorField,
    TangentVectorField,
    grad,
    harmonic_field,
    hess,
    ibp_residual,
    integrate,
    laplace,
    ma_bilinear,
    monge_ampere,
    random_band_limited,
    real_sph_harm,
)
from .congruence import (
    OrientedSphere,
    SphereCongruence,
    SphereCurve,
    canal_envelope,
    curvature_congruences,
    curve_from_spec,
    envelope_residuals,
    incidence,
    middle_congruence,
)
from .elsolve import (
    CapRegion,
    assemble_F,
    build_cap,
    el_residual,
    first_variation,
    second_variation,
    solve_cap,
)
from .laguerre import (
    InvariantReport,
    compare_wavefronts,
    energy,
    gauge_invariant_I,
    invariant_report,
    laguerre_functional,
    q_density,
    steiner_coefficients,
)
from .mesh import SphereMesh, build_icosphere, read_obj, write_obj
from .norms import (
    Norm,
    WulffShape,
    cahn_hoffman_map,
    eval_T,
    eval_T_dual,
    finsler_L,
    gauge,
    norm_from_spec,
    wulff_volume,
)
from .propagate import (
    LevelGrid,
    extract_front,
    hj_step,
    huygens_check,
    init_from_surface,
    propagate_to,
)
from .surfaces import (
    ParametricPatch,
    SupportSurface,
    fit_support,
    from_support,
    helicoid_patch,
    legendre_residual,
    parallel_support,
    patch_anisotropic_curvatures,
    surface_from_spec,
)
