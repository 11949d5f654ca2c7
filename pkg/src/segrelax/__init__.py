"""Seed-constrained segmentation on superpixel graphs.

Four solvers for the same boundary-energy problem (a compact
Cholesky-factor LP, the edgewise LP, the random-walker QP, and an exact
graph cut), plus the image pipeline around them and a diagnostics layer
that numerically verifies the identities relating the formulations.
"""

from .config import Config, load_config, parse_config_text
from .errors import (
    InputError,
    SingularMatrixError,
    SizeLimitError,
    SolverError,
    UnseededComponentError,
)
from .factorization import (
    FactorU,
    OrthogonalFactor,
    augmented_operator,
    cholesky_upper,
    factorize_spd,
    qr_reference,
    recover_q,
)
from .graph import (
    IncidenceOperator,
    ReducedSystem,
    SeedSet,
    SmoothnessMatrix,
    SuperpixelGraph,
    build_incidence,
    build_wtilde,
    compute_edge_weights,
    reduce_by_seeds,
)
from .lp import LpProblem, LpSolution, solve_lp, solve_lp_dense_reference
from .relaxations import (
    METHODS,
    EnergyReport,
    LabelField,
    assemble_compact_lp,
    assemble_conventional_lp,
    assemble_l1_lp,
    boundary_energy,
    compute_energies,
    quasi_tv_energy,
    segment,
    solve_compact_lp,
    solve_conventional_lp,
    solve_graph_cut,
    solve_random_walker,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
