"""Synthetic scenes, noisy corner observations and Monte Carlo runs.

The harness reproduces the desk-scale experiment setup: a rectangular
luminaire centered on the ceiling of a 5 x 5 x 3 m room, optionally
tilted about the room's y axis, observed by a hand-held camera at a
random position with a roughly upward orientation.  Pixel detections
carry white Gaussian noise and are averaged over a burst of images per
position.

Orientation sampling keeps the yaw 5 degrees clear of +-90: the corner
set of a rectangle is invariant under a half-turn about its center, so
poses too close to the boundary of the solver's canonical yaw range
(-90, 90] are not reliably identifiable from a single observation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigError, LumiposeError, SamplingExhausted
from .geometry import (
    CameraIntrinsics,
    EulerAngles,
    intersect_lines,
    line_through,
    project_vertex,
    rot_y,
    rotation_from_euler,
)
from .luminaire import LuminaireSpec
from .pose_basic import PoseEstimate, solve_pose_sh
from .pose_dh import FLAT_SPREAD_TOL, DhSearchConfig, solve_pose_dh

__all__ = [
    "DEFAULT_INTRINSICS",
    "SceneConfig",
    "ImageObservation",
    "TrialResult",
    "McSummary",
    "make_scene",
    "sample_pose",
    "observe",
    "position_error",
    "orientation_errors",
    "solve_observation",
    "run_monte_carlo",
    "write_trials_csv",
    "summary_row",
    "SUMMARY_COLUMNS",
    "TRIAL_COLUMNS",
]

DEFAULT_INTRINSICS = CameraIntrinsics(u0=320.0, v0=240.0, f=0.008, fu=800.0, fv=800.0)

CEILING_CLEARANCE = 0.5
MAX_CAMERA_TILT_DEG = 15.0
MAX_CAMERA_YAW_DEG = 85.0
_SAMPLE_BATCH = 256
_MAX_SAMPLE_BATCHES = 64


@dataclass(frozen=True)
class SceneConfig:
    """Room, luminaire, camera and noise parameters of one experiment."""

    room_length: float = 5.0
    room_width: float = 5.0
    room_height: float = 3.0
    luminaire_length: float = 1.2
    luminaire_width: float = 0.4
    tilt_deg: float = 0.0
    intrinsics: CameraIntrinsics = DEFAULT_INTRINSICS
    frame_width: float = 640.0
    frame_height: float = 480.0
    noise_sigma: float = 2.0
    images_per_position: int = 20
    quantize_pixels: bool = False
    occlude_vertex: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        dims = (
            self.room_length,
            self.room_width,
            self.room_height,
            self.luminaire_length,
            self.luminaire_width,
            self.frame_width,
            self.frame_height,
        )
        if not all(d > 0.0 for d in dims):
            raise ConfigError("room, luminaire and frame dimensions must be positive")
        if not 0.0 <= self.tilt_deg < 90.0:
            raise ConfigError("tilt must lie in [0, 90) degrees")
        if self.noise_sigma < 0.0:
            raise ConfigError("noise sigma must be nonnegative")
        if self.images_per_position < 1:
            raise ConfigError("need at least one image per position")
        if self.occlude_vertex is not None and self.occlude_vertex not in range(4):
            raise ConfigError("occluded vertex index must be in 0..3")


@dataclass(frozen=True, eq=False)
class ImageObservation:
    """Averaged pixel-frame corner detections of one camera position."""

    pixels: np.ndarray


@dataclass(frozen=True, eq=False)
class TrialResult:
    trial: int
    status: str
    pose_true: PoseEstimate
    pose_est: Optional[PoseEstimate]
    pe: Optional[float]
    oe_deg: Optional[np.ndarray]


@dataclass(frozen=True, eq=False)
class McSummary:
    config: SceneConfig
    mode: str
    n_trials: int
    n_ok: int
    pe_mean: float
    pe_median: float
    pe_std: float
    oe_mean: np.ndarray
    oe_median: np.ndarray
    oe_std: np.ndarray
    trials: list = field(repr=False)

    @property
    def n_error(self) -> int:
        return self.n_trials - self.n_ok

    @property
    def error_rate(self) -> float:
        return self.n_error / self.n_trials


def make_scene(config: SceneConfig) -> LuminaireSpec:
    """World-frame luminaire: ceiling-centered, tilted about its y axis."""
    half_l = config.luminaire_length / 2.0
    half_w = config.luminaire_width / 2.0
    local = np.array(
        [
            [-half_l, -half_w, 0.0],
            [half_l, -half_w, 0.0],
            [half_l, half_w, 0.0],
            [-half_l, half_w, 0.0],
        ]
    )
    tilt = math.radians(config.tilt_deg)
    center = np.array(
        [config.room_length / 2.0, config.room_width / 2.0, config.room_height]
    )
    vertices = local @ rot_y(tilt).T + center
    if (
        config.luminaire_length * math.cos(tilt) > config.room_length
        or config.luminaire_width > config.room_width
    ):
        raise ConfigError("luminaire footprint does not fit the room")
    if vertices[:, 2].min() <= 0.0:
        raise ConfigError("tilted luminaire reaches the floor")
    return LuminaireSpec(vertices=vertices)


def _batch_rotations(phi: np.ndarray, theta: np.ndarray, psi: np.ndarray) -> np.ndarray:
    cp, sp = np.cos(phi), np.sin(phi)
    ct, st = np.cos(theta), np.sin(theta)
    cy, sy = np.cos(psi), np.sin(psi)
    zeros = np.zeros_like(phi)
    row_a = np.stack([ct, st * sp, st * cp], axis=1)
    row_b = np.stack([zeros, cp, -sp], axis=1)
    row_c = np.stack([-st, ct * sp, ct * cp], axis=1)
    top = cy[:, None] * row_a - sy[:, None] * row_b
    mid = sy[:, None] * row_a + cy[:, None] * row_b
    return np.stack([top, mid, row_c], axis=1)


def sample_pose(
    config: SceneConfig, spec: LuminaireSpec, rng: np.random.Generator
) -> PoseEstimate:
    """Random admissible camera pose (all four corners imaged in frame).

    Positions are uniform in the room with the camera at least half a
    meter below the ceiling; orientations are small tilts about an
    upward-facing camera with yaw in (-85, 85) degrees.  Candidates are
    rejected until the whole luminaire projects inside the pixel frame.
    """
    z_top = config.room_height - CEILING_CLEARANCE
    if z_top <= 0.0:
        raise ConfigError("room too low for the camera band")
    intr = config.intrinsics
    tilt_max = math.radians(MAX_CAMERA_TILT_DEG)
    yaw_max = math.radians(MAX_CAMERA_YAW_DEG)
    for _ in range(_MAX_SAMPLE_BATCHES):
        pos = rng.uniform(
            low=[0.0, 0.0, 0.0],
            high=[config.room_length, config.room_width, z_top],
            size=(_SAMPLE_BATCH, 3),
        )
        phi = rng.uniform(-tilt_max, tilt_max, _SAMPLE_BATCH)
        theta = rng.uniform(-tilt_max, tilt_max, _SAMPLE_BATCH)
        psi = rng.uniform(-yaw_max, yaw_max, _SAMPLE_BATCH)
        rotations = _batch_rotations(phi, theta, psi)
        cam = np.einsum(
            "bji,vbj->vbi", rotations, spec.vertices[:, None, :] - pos[None, :, :]
        )  # (4, B, 3)
        depth_ok = np.all(cam[..., 2] > intr.f, axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            u = intr.u0 + intr.fu * cam[..., 0] / cam[..., 2]
            v = intr.v0 + intr.fv * cam[..., 1] / cam[..., 2]
        in_frame = (
            (u >= 0.0) & (u <= config.frame_width) & (v >= 0.0) & (v <= config.frame_height)
        ).all(axis=0)
        good = np.flatnonzero(depth_ok & in_frame)
        if good.size:
            b = int(good[0])
            euler = EulerAngles(phi=float(phi[b]), theta=float(theta[b]), psi=float(psi[b]))
            return PoseEstimate(
                euler=euler,
                rotation=rotation_from_euler(euler),
                translation=pos[b],
                residual=0.0,
            )
    raise SamplingExhausted(
        f"no admissible pose in {_SAMPLE_BATCH * _MAX_SAMPLE_BATCHES} attempts"
    )


def _pixel_to_image_array(px: np.ndarray, intr: CameraIntrinsics) -> np.ndarray:
    return (px - [intr.u0, intr.v0]) * [intr.dx, intr.dy]


def _image_to_pixel(point: np.ndarray, intr: CameraIntrinsics) -> np.ndarray:
    return np.array([intr.u0 + point[0] / intr.dx, intr.v0 + point[1] / intr.dy])


def observe(
    spec: LuminaireSpec,
    pose: PoseEstimate,
    config: SceneConfig,
    rng: np.random.Generator,
) -> ImageObservation:
    """Noisy averaged corner detections for one camera position.

    Each image adds i.i.d. Gaussian pixel noise to every detected point;
    the observation averages the burst.  An occluded corner is dropped
    and reconstructed per image as the intersection of its two adjacent
    edge lines, each drawn through the visible neighbor corner and the
    midpoint of the visible half of the edge.
    """
    intr = config.intrinsics
    targets = [
        project_vertex(v, pose.rotation, pose.translation, intr) for v in spec.vertices
    ]
    occ = config.occlude_vertex
    if occ is not None:
        prev_i, next_i = (occ - 1) % 4, (occ + 1) % 4
        mid_prev = (spec.vertices[prev_i] + spec.vertices[occ]) / 2.0
        mid_next = (spec.vertices[occ] + spec.vertices[next_i]) / 2.0
        targets.append(project_vertex(mid_prev, pose.rotation, pose.translation, intr))
        targets.append(project_vertex(mid_next, pose.rotation, pose.translation, intr))
    targets = np.stack(targets)

    samples = targets[None] + rng.normal(
        0.0, config.noise_sigma, size=(config.images_per_position,) + targets.shape
    )
    if config.quantize_pixels:
        samples = np.rint(samples)

    if occ is None:
        return ImageObservation(pixels=samples.mean(axis=0))

    corners = samples[:, :4].copy()
    prev_i, next_i = (occ - 1) % 4, (occ + 1) % 4
    for k in range(samples.shape[0]):
        img = _pixel_to_image_array(samples[k], intr)
        line_prev = line_through(img[prev_i], img[4])
        line_next = line_through(img[5], img[next_i])
        corner = intersect_lines(line_prev, line_next)
        corners[k, occ] = _image_to_pixel(corner, intr)
    return ImageObservation(pixels=corners.mean(axis=0))


def position_error(t_true, t_est) -> float:
    """Euclidean distance between true and estimated camera positions."""
    return float(np.linalg.norm(np.asarray(t_true, float) - np.asarray(t_est, float)))


def orientation_errors(euler_true, euler_est) -> np.ndarray:
    """Per-axis absolute rotation-angle differences in degrees, in [0, 180]."""
    diff = np.degrees(np.abs(np.asarray(euler_true, float) - np.asarray(euler_est, float)))
    diff = diff % 360.0
    return np.minimum(diff, 360.0 - diff)


def solve_observation(
    obs,
    spec: LuminaireSpec,
    config: SceneConfig,
    mode: str = "auto",
) -> tuple[PoseEstimate, str]:
    """Dispatch an observation to a solver; returns (pose, solver_used).

    auto and dh use the height-search solver for genuinely tilted
    luminaires and the same-height solver otherwise (the mismatch
    objective is uninformative for a flat panel); basic forces the
    same-height solver regardless of vertex heights.
    """
    if mode not in ("auto", "basic", "dh"):
        raise ConfigError(f"unknown solver mode {mode!r}")
    if mode == "basic":
        return (
            solve_pose_sh(obs, spec, config.intrinsics, require_same_height=False),
            "basic",
        )
    if spec.height_spread > FLAT_SPREAD_TOL:
        dh_config = DhSearchConfig(max_height=config.room_height)
        return solve_pose_dh(obs, spec, config.intrinsics, dh_config), "dh"
    return solve_pose_sh(obs, spec, config.intrinsics), "basic"


def _trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(trial,)))


def run_monte_carlo(config: SceneConfig, n_trials: int, mode: str = "auto") -> McSummary:
    """Independent localization trials with per-trial RNG streams.

    Solver failures on individual trials are recorded by exception name
    and excluded from the error statistics.
    """
    if n_trials < 1:
        raise ConfigError("need at least one trial")
    spec = make_scene(config)
    trials = []
    for i in range(n_trials):
        rng = _trial_rng(config.seed, i)
        truth = sample_pose(config, spec, rng)
        obs = observe(spec, truth, config, rng)
        try:
            pose, _ = solve_observation(obs, spec, config, mode)
        except LumiposeError as exc:
            trials.append(
                TrialResult(
                    trial=i,
                    status=type(exc).__name__,
                    pose_true=truth,
                    pose_est=None,
                    pe=None,
                    oe_deg=None,
                )
            )
            continue
        trials.append(
            TrialResult(
                trial=i,
                status="ok",
                pose_true=truth,
                pose_est=pose,
                pe=position_error(truth.translation, pose.translation),
                oe_deg=orientation_errors(truth.euler, pose.euler),
            )
        )
    good = [t for t in trials if t.status == "ok"]
    if good:
        pe = np.array([t.pe for t in good])
        oe = np.stack([t.oe_deg for t in good])
        stats = (
            float(pe.mean()),
            float(np.median(pe)),
            float(pe.std()),
            oe.mean(axis=0),
            np.median(oe, axis=0),
            oe.std(axis=0),
        )
    else:
        nan3 = np.full(3, np.nan)
        stats = (math.nan, math.nan, math.nan, nan3, nan3, nan3)
    return McSummary(
        config=config,
        mode=mode,
        n_trials=n_trials,
        n_ok=len(good),
        pe_mean=stats[0],
        pe_median=stats[1],
        pe_std=stats[2],
        oe_mean=stats[3],
        oe_median=stats[4],
        oe_std=stats[5],
        trials=trials,
    )


TRIAL_COLUMNS = [
    "trial",
    "status",
    "pe_m",
    "oe_x_deg",
    "oe_y_deg",
    "oe_z_deg",
    "tz_true",
    "tz_est",
    "residual",
]

SUMMARY_COLUMNS = [
    "value",
    "mode",
    "trials",
    "ok",
    "error_rate",
    "pe_mean_m",
    "pe_median_m",
    "pe_std_m",
    "oe_x_mean_deg",
    "oe_y_mean_deg",
    "oe_z_mean_deg",
]


def write_trials_csv(summary: McSummary, stream) -> None:
    """Per-trial records; error trials leave the metric fields empty."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(TRIAL_COLUMNS)
    for t in summary.trials:
        if t.status == "ok":
            writer.writerow(
                [
                    t.trial,
                    t.status,
                    repr(t.pe),
                    repr(float(t.oe_deg[0])),
                    repr(float(t.oe_deg[1])),
                    repr(float(t.oe_deg[2])),
                    repr(float(t.pose_true.translation[2])),
                    repr(float(t.pose_est.translation[2])),
                    repr(t.pose_est.residual),
                ]
            )
        else:
            writer.writerow(
                [t.trial, t.status, "", "", "", "", repr(float(t.pose_true.translation[2])), "", ""]
            )


def summary_row(summary: McSummary, value) -> list:
    return [
        value,
        summary.mode,
        summary.n_trials,
        summary.n_ok,
        repr(summary.error_rate),
        repr(summary.pe_mean),
        repr(summary.pe_median),
        repr(summary.pe_std),
        repr(float(summary.oe_mean[0])),
        repr(float(summary.oe_mean[1])),
        repr(float(summary.oe_mean[2])),
    ]
