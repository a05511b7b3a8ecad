"""Linear optimal transport embeddings of discrete measures."""

from .measures import (
    DiscreteMeasure,
    MapSamples,
    density_sup_estimate,
    identity_map,
    l2_distance,
    l2_norm,
    load_measure,
    make_measure,
    pushforward,
    save_measure,
    uniform_measure,
)
from .solvers import (
    MapProvenance,
    TransportMap,
    TransportPlan,
    barycentric_map,
    brute_force_oracle,
    cyclic_monotonicity_violations,
    map_cost,
    solve_1d,
    solve_exact,
    solve_sinkhorn,
)
from .embedding import (
    DistanceMatrix,
    Embedding,
    MatrixKind,
    SolverConfig,
    compatibility_defect,
    compose,
    composition_gap,
    distance_matrix,
    embed,
    exact_distance_matrix,
    lot_distance,
    midpoint_convexity_defect,
)
from .families import (
    AffineMap,
    FamilySpec,
    PerturbedMap,
    make_two_class_dataset,
    perturb,
    sample_affine,
)
from .bounds import (
    BoundsReport,
    GapCurve,
    bounds_report,
    delta_threshold,
    estimate_strong_convexity,
    holder_gap_curve,
    psi_bar,
    psi_merigot,
    sandwich_check,
)
from .classify import (
    EvalReport,
    FeatureMatrix,
    LinearModel,
    evaluate,
    fit_pca,
    hard_margin_separate,
    lda_fit,
    lda_scatter_coordinates,
    pca_project,
)

__version__ = "0.1.0"
