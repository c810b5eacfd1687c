"""saddlekit: high-index saddle point search on matrix manifolds.

A position on an embedded submanifold is paired with a k-plane of tangent
directions; the position descends a reflected gradient while the plane
tracks the k most unstable Hessian directions, so the pair converges to
index-k saddle points. Includes the analytic eigenvalue-problem catalog,
restricted Hartree-Fock objectives over FCIDUMP integrals, and a campaign
CLI that writes CSV/JSON reports with rendered figures.
"""

__version__ = "0.1.0"

from .bundle import (
    BundleDirection,
    BundleState,
    bundle_retract,
    bundle_tangent_basis,
    extended_ii,
    horizontal_lift,
    sasaki_inner,
    simple_transport_retract,
)
from .dynamics import (
    RateReport,
    RunRecord,
    SolverConfig,
    classify,
    measure_rate,
    p_direction,
    rate_report,
    solve,
    x_direction,
)
from .fcidump import FcidumpData, parse_fcidump, write_fcidump
from .linalg import Frame, Projector, SymMatrix, commutator, sym_eig, thin_qr, thin_svd
from .manifolds import (
    FixedRank,
    Flat,
    GrassmannProjector,
    LevelSet,
    LevelSetSpec,
    Manifold,
    Sphere,
    Stiefel,
    compressed_hessian,
    riemannian_gradient,
    riemannian_hessian_vec,
)
from .objectives import (
    LepSpec,
    Objective,
    RhfObjective,
    coulomb_exchange,
    core_guess,
    lep_grassmann_objective,
    lep_stiefel_objective,
    make_lep,
    rhf_objective,
)
from .oracle import (
    CatalogEntry,
    CriticalPointCatalog,
    catalog_entry,
    enumerate_catalog,
    fd_gradient,
    fd_hessian_vec,
    fd_projector_differential,
    match_terminal,
)

__all__ = [name for name in dir() if not name.startswith("_")]
