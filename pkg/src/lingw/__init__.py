"""Gromov-Wasserstein distances and their linear (gLGW) surrogates."""

from .analysis import classical_mds, compare_distance_matrices, confusion_matrix, gw_kernel
from .barycenter import BarycenterConfig, barycenter_objective, solve_barycenter
from .errors import (
    ClassTooSmall,
    DegenerateVariance,
    DimensionMismatch,
    DisconnectedMesh,
    IdMismatch,
    InfeasibleError,
    LinGWError,
    LinGWIOError,
    MarginalError,
    NoPointsError,
    NonTriangleFace,
    ParseError,
    RefMismatch,
    TooFewPixels,
    ValidationError,
    ZeroRowError,
)
from .gw import GwConfig, GwResult, gw_objective, solve_gw, wasserstein_init
from .ingest import (
    WeightedGraph,
    dijkstra_distances,
    farthest_point_sample,
    image_to_space,
    mesh_to_graph,
    mesh_to_space,
)
from .lgw import (
    LgwEmbedding,
    check_lgw_bounds,
    embed,
    generalized_barycentric_projection,
    glgw,
    glgw_pairwise,
    gw_s_three_plan,
)
from .measure import (
    DistanceMatrix,
    MmSpace,
    ThreePlan,
    TransportPlan,
    load_mm_space,
    save_mm_space,
    validate_plan,
)
from .ot import BarycentricMap, OtResult, euclidean_barycentric_projection, glot, solve_ot, w_sigma_lp

__version__ = "0.1.0"
