"""scikit-learn compatible front end for the pose solvers.

CameraPoseEstimator follows the estimator protocol (parameters stored
verbatim in __init__, work done in fit, fitted state in trailing
underscore attributes, get_params/set_params/clone support), so the
solver drops into pipelines, grid searches and other tooling.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .errors import DegenerateObjective
from .geometry import project_vertex
from .luminaire import recover_luminaire
from .pose_basic import _image_corners, solve_pose_sh
from .pose_dh import FLAT_SPREAD_TOL, DhSearchConfig, solve_pose_dh
from .validation import check_corners, check_intrinsics, check_luminaire

__all__ = ["CameraPoseEstimator"]


class CameraPoseEstimator(BaseEstimator):
    """Camera pose from the projected corners of one rectangular luminaire.

    Parameters
    ----------
    luminaire : LuminaireSpec or (4, 3) array-like
        World-frame vertices of the panel, in cyclic order.
    intrinsics : CameraIntrinsics, mapping or (u0, v0, f, fu, fv)
        Calibrated pinhole parameters.
    mode : {"auto", "basic", "dh"}, default "auto"
        "basic" forces the same-height solver, "dh" forces the
        height-search solver, "auto" dispatches on the vertex heights.
    room_height : float, default 3.0
        Upper bound for the camera height search.
    coarse_step, fine_step : float
        Grid spacings of the height search stages.
    stages : int, default 2
        Number of search stages.

    Attributes (after fit)
    ----------------------
    euler_ : ndarray (3,), rotation angles (phi, theta, psi) in radians
    rotation_ : ndarray (3, 3), camera-to-world rotation
    translation_ : ndarray (3,), camera position in meters
    residual_ : float, mean planar least-squares misfit
    solver_ : str, solver actually used ("basic" or "dh")
    luminaire_camera_ : CameraFrameLuminaire, panel recovered in the camera frame

    The corner set of a rectangle is invariant under a half-turn about
    its center, so the recovered yaw is reported in (-pi/2, pi/2]; see
    the pose solver documentation.
    """

    def __init__(
        self,
        luminaire=None,
        intrinsics=None,
        mode="auto",
        room_height=3.0,
        coarse_step=0.10,
        fine_step=0.01,
        stages=2,
    ):
        self.luminaire = luminaire
        self.intrinsics = intrinsics
        self.mode = mode
        self.room_height = room_height
        self.coarse_step = coarse_step
        self.fine_step = fine_step
        self.stages = stages

    def fit(self, X, y=None):
        """Estimate the pose from pixel corners of shape (4, 2) or (n, 4, 2)."""
        spec = check_luminaire(self.luminaire)
        intr = check_intrinsics(self.intrinsics)
        if self.mode not in ("auto", "basic", "dh"):
            raise ValueError(f"unknown mode {self.mode!r}")
        corners = check_corners(X)

        if self.mode == "basic":
            pose = solve_pose_sh(corners, spec, intr, require_same_height=False)
            solver = "basic"
        elif self.mode == "dh" or spec.height_spread > FLAT_SPREAD_TOL:
            config = DhSearchConfig(
                max_height=self.room_height,
                coarse_step=self.coarse_step,
                fine_step=self.fine_step,
                stages=self.stages,
            )
            try:
                pose = solve_pose_dh(corners, spec, intr, config)
                solver = "dh"
            except DegenerateObjective:
                if self.mode == "dh":
                    raise
                pose = solve_pose_sh(corners, spec, intr)
                solver = "basic"
        else:
            pose = solve_pose_sh(corners, spec, intr)
            solver = "basic"

        self.pose_ = pose
        self.euler_ = np.array(pose.euler)
        self.rotation_ = pose.rotation
        self.translation_ = pose.translation
        self.residual_ = pose.residual
        self.solver_ = solver
        self.luminaire_camera_ = recover_luminaire(
            _image_corners(corners, intr), spec.area, intr
        )
        return self

    def predict(self, X):
        """Project world points (n, 3) to pixel coordinates under the fitted pose."""
        if not hasattr(self, "pose_"):
            raise NotFittedError("fit the estimator before calling predict")
        intr = check_intrinsics(self.intrinsics)
        points = np.atleast_2d(np.asarray(X, dtype=float))
        if points.shape[1] != 3:
            raise ValueError("expected world points of shape (n, 3)")
        return np.stack(
            [
                project_vertex(p, self.pose_.rotation, self.pose_.translation, intr)
                for p in points
            ]
        )
