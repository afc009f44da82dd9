"""Detection of a rigid solid moving in a 2D perfect fluid from its complex potential."""

__version__ = "0.1.0"

from .seqcore import CoeffSeq, conv, conv_power, delta, reflect
from .rigid import Configuration, Position, RigidVelocity, equivalent, rigid_velocity_field
from .shape import (
    InversionError,
    ShapeSpec,
    area,
    boundary,
    eval_map,
    eval_map_derivative,
    eval_map_inverse,
    make_arc,
    make_c147,
    make_disk,
    make_ellipse,
    make_segment,
    symmetry_order,
)
from .flow import (
    PotentialCoeffs,
    StealthVerdict,
    classify_stealth,
    ellipse_potential_closed_form,
    eval_fluid_velocity,
    eval_potential,
    stream_boundary_residual,
    zeta_coeffs,
)
from .spectral import (
    GeometryCoeffs,
    MomentTable,
    geometry_coeffs,
    geometry_coeffs_bruteforce,
    invert_moments,
    localize_chebyshev,
    moments_closed_form,
    moments_contour,
    singularity_radius,
    theta_matrix,
)
from .inverse import (
    DetectionError,
    DetectionResult,
    RankDeficientError,
    bezout_angle,
    detect_c147,
    detect_ellipse,
    detect_quarter_full,
    detect_quarter_symmetric,
    recover_velocity,
)
from .counterx import LevelSetShape, build_family, verify_family
from .track import TimeSeriesMeasurement, Trajectory, synthesize_timeseries, track

__all__ = [
    "__version__",
    "CoeffSeq",
    "conv",
    "conv_power",
    "delta",
    "reflect",
    "Configuration",
    "Position",
    "RigidVelocity",
    "equivalent",
    "rigid_velocity_field",
    "InversionError",
    "ShapeSpec",
    "area",
    "boundary",
    "eval_map",
    "eval_map_derivative",
    "eval_map_inverse",
    "make_arc",
    "make_c147",
    "make_disk",
    "make_ellipse",
    "make_segment",
    "symmetry_order",
    "PotentialCoeffs",
    "StealthVerdict",
    "classify_stealth",
    "ellipse_potential_closed_form",
    "eval_fluid_velocity",
    "eval_potential",
    "stream_boundary_residual",
    "zeta_coeffs",
    "GeometryCoeffs",
    "MomentTable",
    "geometry_coeffs",
    "geometry_coeffs_bruteforce",
    "invert_moments",
    "localize_chebyshev",
    "moments_closed_form",
    "moments_contour",
    "singularity_radius",
    "theta_matrix",
    "DetectionError",
    "DetectionResult",
    "RankDeficientError",
    "bezout_angle",
    "detect_c147",
    "detect_ellipse",
    "detect_quarter_full",
    "detect_quarter_symmetric",
    "recover_velocity",
    "LevelSetShape",
    "build_family",
    "verify_family",
    "TimeSeriesMeasurement",
    "Trajectory",
    "synthesize_timeseries",
    "track",
]
