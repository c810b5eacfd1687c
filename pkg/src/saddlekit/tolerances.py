"""Centralized numeric tolerances.

One table so thresholds are consistent across modules and easy to audit.
All are absolute unless the name says REL; callers scale REL values by a
problem-dependent magnitude.
"""

# Structural validation
FRAME_ORTHO_TOL = 1e-10        # ||V^T V - I||_F for frames
PROJECTOR_TOL = 1e-10          # ||P^2 - P||_F, ||P - P^T||_F, |tr P - k|
FEASIBILITY_TOL = 1e-10        # manifold defining-equation residual
TANGENT_TOL = 1e-8             # ||v - Proj(v)|| / (1 + ||v||)
PLANE_RANGE_TOL = 1e-9         # bundle plane columns inside T_x M
BUNDLE_TANGENT_TOL = 1e-8      # bundle direction tangency residual

# Rank decisions
SVD_RANK_REL = 1e-12           # singular values below REL * sigma_max are zero
QR_RANK_REL = 1e-12            # |R_ii| below REL * max|R_jj| is rank collapse
EIG_RANK_REL = 1e-12           # eigenvalue cutoff for nearest-projector repair

# Retractions
NEWTON_RETRACT_TOL = 1e-12     # level-set projection retraction residual
NEWTON_RETRACT_MAXIT = 50

# Spectral classification
INDEX_TOL_REL = 1e-6           # |lambda| below REL * max|lambda| is degenerate

# Oracle
CATALOG_VALUE_SEP = 1e-12      # minimum separation between catalog values
MATCH_TOL = 1e-4               # Frobenius distance for terminal matching
