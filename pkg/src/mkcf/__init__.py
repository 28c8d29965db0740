"""Two-parameter continued fraction expansions, their approximation
coefficients, and the convex plane geometry of consecutive-coefficient
pairs, at arbitrary working precision."""

from .params import ExpressionError, Params, parse_real, real_to_expr
from .core import (
    ConstructionFailedError,
    DomainError,
    MobiusCoeffs,
    Orbit,
    PrecisionLossError,
    ThetaSeq,
    classical_digit_translate,
    continuant_pair,
    convergent_matrix,
    digit_matrix,
    eval_finite,
    expand,
    past_value,
    seed_with_prefix,
    step_map,
    theta_direct,
    theta_perron,
    theta_sequence,
)
from .geometry import (
    BoundsReport,
    HalfPlane,
    JagerPoint,
    SubdivisionRegion,
    UnboundedRegionError,
    VertexAtInfinityError,
    acute_diagonal_sq,
    obtuse_diagonal_sq,
    contains,
    corollary_bounds,
    cylinder_interval,
    f_line,
    lemma_bounds,
    p_line,
    psi,
    region_mesh,
    subdivision,
    theorem_bounds,
    vertex_uv,
)
from .harness import (
    ExperimentConfig,
    Summary,
    ViolationRecord,
    classical_checks,
    collect_orbits,
    export_pairs,
    export_regions,
    export_summary,
    import_pairs,
    merge_summaries,
    replay_orbit,
    run_bounds,
    run_membership,
    sharpness_scan,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
