"""Frame-by-frame infrared/visible video registration from polygon vertices."""

from .bgsub import BackgroundModel, clean_mask
from .config import PipelineParams
from .contours import PolygonShape, dce_simplify, extract_outer_contours, prune_concave_branches
from .core import (
    AffineTransform,
    GrayFrame,
    Point2,
    apply_transform,
    mask_intersection_count,
    mask_union_count,
    signed_area,
    warp_mask,
)
from .descriptors import VertexDescriptor, convexity_z, describe_polygon, interior_angle, is_convex
from .errors import (
    ConfigError,
    DegenerateFitError,
    FrameIOError,
    InsufficientDataError,
    PolyregError,
    StreamMismatchError,
)
from .evaluate import AlignmentError, GroundTruthSet, alignment_error, build_report
from .matching import (
    MatchPair,
    MatchParams,
    TemporalBuffer,
    best_polygon_pairing,
    match_keypoints,
)
from .pipeline import PipelineRun, Registrar, register_streams
from .synth import (
    SceneSpec,
    Silhouette,
    SilhouettePart,
    SyntheticSequence,
    TargetSpec,
    generate_sequence,
    person_silhouette,
    standard_scene,
    triangle_wave_trajectory,
)
from .transform import (
    RansacParams,
    RansacResult,
    RegistrationState,
    fit_affine_lsq,
    overlap_ratio,
    ransac_affine,
    update_registration,
)

__version__ = "0.1.0"
