"""Camera localization from a single rectangular LED luminaire.

The receiver is a calibrated pinhole camera that images the four corners
of one VLC-enabled rectangular panel whose world-frame vertices it knows
from the VLC broadcast; position and orientation are recovered without
any known 3D-2D correspondences.
"""

from .errors import (
    AmbiguousSelection,
    BehindCamera,
    ConfigError,
    DegenerateLine,
    DegenerateObjective,
    DegenerateQuad,
    HeightMismatch,
    InputFileError,
    LumiposeError,
    NonPositiveVolume,
    ParallelLines,
    SamplingExhausted,
    SingularConfiguration,
)
from .estimator import CameraPoseEstimator
from .geometry import (
    CameraIntrinsics,
    EulerAngles,
    Line2D,
    image_to_ccs,
    intersect_lines,
    lateral_plane,
    line_through,
    pixel_to_image,
    project_vertex,
    rotation_from_euler,
    tilt_rotation,
)
from .luminaire import (
    CameraFrameLuminaire,
    LuminaireSpec,
    normal_ccs,
    order_corners,
    recover_luminaire,
    solve_normal_direction,
    vertices_ccs,
)
from .pose_basic import (
    HeadingFit,
    PoseEstimate,
    build_lls_row,
    euler_xy_from_normal,
    resolve_correspondence,
    solve_candidate,
    solve_pose_sh,
    solve_tz,
)
from .pose_dh import (
    CRowFit,
    DhSearchConfig,
    euler_xy_from_c,
    solve_c_row,
    solve_pose_2d,
    solve_pose_dh,
)
from .simulate import (
    DEFAULT_INTRINSICS,
    ImageObservation,
    McSummary,
    SceneConfig,
    TrialResult,
    make_scene,
    observe,
    orientation_errors,
    position_error,
    run_monte_carlo,
    sample_pose,
    solve_observation,
)

__version__ = "0.1.0"

__all__ = [
    "AmbiguousSelection",
    "BehindCamera",
    "CameraFrameLuminaire",
    "CameraIntrinsics",
    "CameraPoseEstimator",
    "ConfigError",
    "CRowFit",
    "DEFAULT_INTRINSICS",
    "DegenerateLine",
    "DegenerateObjective",
    "DegenerateQuad",
    "DhSearchConfig",
    "EulerAngles",
    "HeadingFit",
    "HeightMismatch",
    "ImageObservation",
    "InputFileError",
    "Line2D",
    "LuminaireSpec",
    "LumiposeError",
    "McSummary",
    "NonPositiveVolume",
    "ParallelLines",
    "PoseEstimate",
    "SamplingExhausted",
    "SceneConfig",
    "SingularConfiguration",
    "TrialResult",
    "build_lls_row",
    "euler_xy_from_c",
    "euler_xy_from_normal",
    "image_to_ccs",
    "intersect_lines",
    "lateral_plane",
    "line_through",
    "make_scene",
    "normal_ccs",
    "observe",
    "order_corners",
    "orientation_errors",
    "pixel_to_image",
    "position_error",
    "project_vertex",
    "recover_luminaire",
    "resolve_correspondence",
    "rotation_from_euler",
    "run_monte_carlo",
    "sample_pose",
    "solve_c_row",
    "solve_candidate",
    "solve_normal_direction",
    "solve_observation",
    "solve_pose_2d",
    "solve_pose_dh",
    "solve_pose_sh",
    "solve_tz",
    "tilt_rotation",
    "vertices_ccs",
]
