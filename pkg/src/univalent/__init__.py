"""Locally univalent approximation, Schwarzian reconstruction and conformal
metrics with numpy."""

__version__ = "0.1.0"

from .errors import ConfigError, NumericalError, PreconditionError, UnivalentError
from .foundation import (
    INF,
    Annulus,
    ClosedDisk,
    Contour,
    DiskUnion,
    HoledDisk,
    PuncturedPlane,
    SimplyConnected,
    UnitDisk,
    WholePlane,
    argument_count,
    boundary_samples,
    chordal_distance,
    contour_integral,
    interior_grid,
    winding_number,
)
from .rational import (
    MoebiusMap,
    Polynomial,
    RationalFunction,
    certify_local_univalence,
    differentiate,
    roots,
    schwarzian,
)
from .runge import (
    CorrectionBasis,
    LaurentBasis,
    Period,
    ValueGap,
    fit_analytic_ls,
    glue_targets,
    lu_holomorphic_runge,
    match_functionals,
    zero_free_runge,
)
from .schwarzian_ode import (
    ReconstructionFrame,
    SchwarzianODE,
    meromorphic_lu_runge,
    numerical_schwarzian,
    obstruction_residue,
    reconstruct_from_schwarzian,
    solve_ivp_along,
    wronskian_drift,
)
from .metrics import (
    EUCLIDEAN,
    HYPERBOLIC,
    SPHERICAL,
    GridSpec,
    curvature,
    harmonic_glue,
    liouville_construct,
    pullback,
    sample_density,
)
from .universality import (
    DiskAutomorphisms,
    Explicit,
    PuncturedUnitDisk,
    Translations,
    build_finite_universal,
    covering_map_special,
    diagnose_sequence,
    injectivity_check,
    metric_orbit_experiment,
    runaway_index,
)
