"""Camera pose from one luminaire whose LEDs share a single height.

Pipeline: order the image corners, recover the panel normal and vertex
coordinates in the camera frame, read the x/y rotation angles off the
normal (a flat panel points straight up in the world), then fit the yaw
angle and planar position by linear least squares over all candidate
3D-2D correspondences, and finally average the vertex heights for the
camera z coordinate.

Correspondence handling: with two camera vertices paired to two world
vertices the planar fit is exactly determined, so the solver builds all
6 x 6 pairings of canonical index pairs (r < s against i < j) and
groups them by world pair.  Pairings consistent with the true matching
agree on one solution across all six groups, while wrong pairings
scatter (a mismatched pair implies a non-unit scale), so the solver
selects the tightest one-per-group cluster among the 36 solutions and
averages it.  Both vertex cycles are first realigned to a shared
canonical traversal (counter-clockwise, long edge first) so the true
matching is always among the candidates regardless of detection order.

One genuine ambiguity remains: the unlabeled corner set of a rectangle
is invariant under a half-turn about its center, so two camera poses
explain every image exactly.  The solver resolves it by convention,
returning the yaw in (-pi/2, pi/2] with the planar position reflected
through the panel center accordingly.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import math

import numpy as np

from .errors import HeightMismatch, SingularConfiguration
from .geometry import (
    CameraIntrinsics,
    EulerAngles,
    rotation_from_euler,
    tilt_rotation,
)
from .luminaire import LuminaireSpec, recover_luminaire
__all__ = [
    "PoseEstimate",
    "HeadingFit",
    "euler_xy_from_normal",
    "build_lls_row",
    "solve_candidate",
    "resolve_correspondence",
    "solve_tz",
    "solve_pose_sh",
]

SAME_HEIGHT_TOL = 1e-9

_FORWARD = np.arange(4)
_REVERSED = np.array([0, 3, 2, 1])
# Canonical index pairs r < s; used both for camera and world vertices.
_PAIRS = np.array([(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)])
# Cluster seeds tried per fit; the true matching holds six of the at
# most eight zero-defect solutions, so six seeds always include one.
_N_SEEDS = 6


@dataclass(frozen=True, eq=False)
class PoseEstimate:
    """Camera pose in the world frame.

    rotation maps camera to world coordinates, translation is the camera
    position, and residual is the mean misfit of the planar
    least-squares fit (a noise diagnostic, zero for exact data).
    """

    euler: EulerAngles
    rotation: np.ndarray
    translation: np.ndarray
    residual: float


class HeadingFit(NamedTuple):
    """Yaw angle and planar camera position from the correspondence fit."""

    psi: float
    t_x: float
    t_y: float
    residual: float


def _corner_pixels(obs) -> np.ndarray:
    pixels = np.asarray(getattr(obs, "pixels", obs), dtype=float)
    if pixels.shape != (4, 2):
        raise ValueError("expected four pixel corners of shape (4, 2)")
    return pixels


def _image_corners(obs, intrinsics: CameraIntrinsics) -> np.ndarray:
    px = _corner_pixels(obs)
    offset = np.array([intrinsics.u0, intrinsics.v0])
    pitch = np.array([intrinsics.dx, intrinsics.dy])
    return (px - offset) * pitch


def euler_xy_from_normal(n_c) -> tuple[float, float]:
    """Rotation angles (phi, theta) about the camera x/y axes.

    For a panel that points straight up in the world, its camera-frame
    unit normal equals the third row of Ry(theta) @ Rx(phi), which the
    two-argument arctangent inverts without quadrant issues.
    """
    n_c = np.asarray(n_c, dtype=float)
    theta = -math.asin(min(1.0, max(-1.0, n_c[0])))
    phi = math.atan2(n_c[1], n_c[2])
    return phi, theta


def build_lls_row(p_c, phi: float, theta: float) -> np.ndarray:
    """2x4 coefficient block of one vertex for the planar pose fit.

    With a, b the first two rows of Ry(theta) @ Rx(phi), the world x/y
    of a vertex are a rotation by the unknown yaw of (a.P, b.P) plus the
    unknown planar translation, linear in (cos psi, sin psi, t_x, t_y).
    """
    rows = tilt_rotation(phi, theta)
    ap = float(rows[0] @ np.asarray(p_c, dtype=float))
    bp = float(rows[1] @ np.asarray(p_c, dtype=float))
    return np.array([[ap, -bp, 1.0, 0.0], [bp, ap, 0.0, 1.0]])


def solve_candidate(a_rs: np.ndarray, b_ij: np.ndarray) -> tuple[np.ndarray, float]:
    """Least-squares solution of one stacked candidate system.

    Returns (x_hat, residual_norm); raises SingularConfiguration when
    the normal equations are not safely invertible.
    """
    a_rs = np.asarray(a_rs, dtype=float)
    b_ij = np.asarray(b_ij, dtype=float)
    ata = a_rs.T @ a_rs
    cond = np.linalg.cond(ata)
    if not np.isfinite(cond) or cond >= 1e12:
        raise SingularConfiguration(f"candidate normal equations have condition {cond:.3g}")
    x_hat = np.linalg.solve(ata, a_rs.T @ b_ij)
    residual = float(np.linalg.norm(a_rs @ x_hat - b_ij))
    return x_hat, residual


def _canonical_cycle(pts: np.ndarray) -> np.ndarray:
    """Canonical traversal indices for batched 2D vertex cycles.

    pts has shape (G, 4, 2), each a convex cyclic quadrilateral.  The
    result (G, 4) indexes the counter-clockwise traversal that starts at
    a corner whose outgoing edge belongs to the longer side pair,
    breaking the remaining half-turn freedom by the lexicographically
    smaller starting vertex.
    """
    x, y = pts[..., 0], pts[..., 1]
    x1, y1 = np.roll(x, -1, axis=1), np.roll(y, -1, axis=1)
    area2 = np.sum(x * y1 - x1 * y, axis=1)
    idx = np.where(area2[:, None] < 0.0, _REVERSED[None, :], _FORWARD[None, :])
    oriented = np.take_along_axis(pts, idx[..., None], axis=1)
    edges = np.roll(oriented, -1, axis=1) - oriented
    lengths = np.linalg.norm(edges, axis=2)
    parity = ((lengths[:, 0] + lengths[:, 2]) < (lengths[:, 1] + lengths[:, 3])).astype(int)
    g = np.arange(pts.shape[0])
    first = oriented[g, parity]
    second = oriented[g, parity + 2]
    second_smaller = (second[:, 0] < first[:, 0]) | (
        (second[:, 0] == first[:, 0]) & (second[:, 1] < first[:, 1])
    )
    start = parity + np.where(second_smaller, 2, 0)
    offsets = (start[:, None] + _FORWARD[None, :]) % 4
    return np.take_along_axis(idx, offsets, axis=1)


def _world_cycle(spec: LuminaireSpec) -> tuple[np.ndarray, np.ndarray]:
    """World vertex x/y in canonical traversal order, plus the center."""
    xy = spec.vertices[:, :2]
    order = _canonical_cycle(xy[None])[0]
    return xy[order], spec.center[:2]


def _heading_lls(
    u: np.ndarray, w_cycle: np.ndarray, w_center: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Batched yaw/translation fit over all candidate correspondences.

    u holds the camera vertices mapped into the yaw frame, shape
    (G, 4, 2) in cyclic order; w_cycle is the canonical world cycle.
    Returns (psi, t_xy, residual, ok) with leading dimension G; entries
    with ok False had a singular candidate system and carry no meaning.
    """
    order = _canonical_cycle(u)
    u = np.take_along_axis(u, order[..., None], axis=1)
    n_batch = u.shape[0]

    blocks = np.zeros((n_batch, 4, 2, 4))
    blocks[..., 0, 0] = u[..., 0]
    blocks[..., 0, 1] = -u[..., 1]
    blocks[..., 0, 2] = 1.0
    blocks[..., 1, 0] = u[..., 1]
    blocks[..., 1, 1] = u[..., 0]
    blocks[..., 1, 3] = 1.0

    r_idx, s_idx = _PAIRS[:, 0], _PAIRS[:, 1]
    a_rs = np.concatenate([blocks[:, r_idx], blocks[:, s_idx]], axis=2)  # (G, 6, 4, 4)
    b_ij = np.concatenate([w_cycle[r_idx], w_cycle[s_idx]], axis=1)  # (6, 4)

    ata = np.einsum("grki,grkj->grij", a_rs, a_rs)
    det = np.linalg.det(ata)
    scale = np.einsum("grii->gr", ata) / 4.0
    bad = ~np.isfinite(det) | (np.abs(det) <= 1e-18 * scale**4)
    ok = ~bad.any(axis=1)
    safe = np.where(bad[..., None, None], np.eye(4)[None, None], ata)
    inv = np.linalg.inv(safe)
    atb = np.einsum("grki,ck->grci", a_rs, b_ij)
    solutions = np.einsum("grij,grcj->grci", inv, atb)  # (G, 6 rs, 6 ij, 4)
    predicted = np.einsum("grki,grci->grck", a_rs, solutions)
    residuals = np.linalg.norm(predicted - b_ij[None, None], axis=3)  # (G, 6 rs, 6 ij)

    # Tightest one-per-group cluster: use the most rotation-like
    # solutions as seeds (the true matching has cos^2 + sin^2 ~ 1, while
    # mismatched pairs absorb the side-length ratio into a spurious
    # scale), pick per group the candidate nearest each seed (residual
    # breaks ties), and keep the seed whose picks are jointly tightest.
    # Solutions of the true matching coincide in every group, so its
    # seeds win with tightness ~ noise; wrong matchings replicate in at
    # most two groups.
    flat = solutions.reshape(n_batch, 36, 4)
    defect = np.abs(np.hypot(flat[..., 0], flat[..., 1]) - 1.0)
    seed_idx = np.argsort(defect, axis=1, kind="stable")[:, :_N_SEEDS]  # (G, S)
    seeds = np.take_along_axis(flat, seed_idx[..., None], axis=1)
    dist = np.linalg.norm(
        seeds[:, :, None, :] - flat[:, None, :, :], axis=3
    ).reshape(n_batch, _N_SEEDS, 6, 6)  # (G, seed, rs, ij)
    dist_min = dist.min(axis=2, keepdims=True)
    penalty = np.where(dist <= dist_min + 1e-12, residuals[:, None], np.inf)
    pick_by_seed = np.argmin(penalty, axis=2)  # (G, seed, ij)
    tightness = np.take_along_axis(dist, pick_by_seed[:, :, None, :], axis=2)[
        :, :, 0, :
    ].sum(axis=2)
    seed = np.argmin(tightness, axis=1)  # (G,)
    pick = np.take_along_axis(pick_by_seed, seed[:, None, None], axis=1)[:, 0]  # (G, 6)

    reps = np.take_along_axis(solutions, pick[:, None, :, None], axis=1)[:, 0]  # (G, 6, 4)
    x_hat = reps.mean(axis=1)

    a_sel = np.take_along_axis(a_rs, pick[:, :, None, None], axis=1)  # (G, 6, 4, 4)
    misfit = np.einsum("gcki,gi->gck", a_sel, x_hat) - b_ij[None]
    residual = np.linalg.norm(misfit, axis=2).mean(axis=1)

    psi = np.arctan2(x_hat[:, 1], x_hat[:, 0])
    t_xy = x_hat[:, 2:4]

    # Half-turn canonicalization: keep psi in (-pi/2, pi/2]; the partner
    # solution reflects the planar position through the panel center.
    in_range = (x_hat[:, 0] > 0.0) | ((x_hat[:, 0] == 0.0) & (x_hat[:, 1] > 0.0))
    flip = ~in_range
    psi = np.where(flip, psi - np.sign(psi) * math.pi, psi)
    t_xy = np.where(flip[:, None], 2.0 * w_center[None, :] - t_xy, t_xy)
    return psi, t_xy, residual, ok


def resolve_correspondence(vertices_c, spec: LuminaireSpec, phi: float, theta: float) -> HeadingFit:
    """Yaw and planar position by candidate enumeration and averaging."""
    vertices_c = np.asarray(vertices_c, dtype=float)
    rows = tilt_rotation(phi, theta)
    u = (vertices_c @ rows[:2].T)[None]
    w_cycle, w_center = _world_cycle(spec)
    psi, t_xy, residual, ok = _heading_lls(u, w_cycle, w_center)
    if not ok[0]:
        raise SingularConfiguration("a candidate correspondence system is singular")
    return HeadingFit(float(psi[0]), float(t_xy[0, 0]), float(t_xy[0, 1]), float(residual[0]))


def solve_tz(
    vertices_c,
    spec: LuminaireSpec,
    phi: float,
    theta: float,
    *,
    require_same_height: bool = True,
) -> float:
    """Camera height from the vertex heights, averaged over the corners.

    Valid when all luminaire vertices share one height; pass
    require_same_height=False to apply the same-height approximation to
    a tilted panel anyway (the misuse studied by the tilt sweeps).
    """
    heights = spec.heights
    spread = float(heights.max() - heights.min())
    if require_same_height and spread > SAME_HEIGHT_TOL:
        raise HeightMismatch(
            f"vertex heights spread {spread:.3g} m; use the height-search solver"
        )
    vertices_c = np.asarray(vertices_c, dtype=float)
    c_row = tilt_rotation(phi, theta)[2]
    return float(heights.mean() - (vertices_c @ c_row).mean())


def solve_pose_sh(
    obs,
    spec: LuminaireSpec,
    intrinsics: CameraIntrinsics,
    *,
    require_same_height: bool = True,
) -> PoseEstimate:
    """Full pose for a same-height luminaire from four pixel corners."""
    corners = _image_corners(obs, intrinsics)
    cam = recover_luminaire(corners, spec.area, intrinsics)
    phi, theta = euler_xy_from_normal(cam.normal)
    fit = resolve_correspondence(cam.vertices, spec, phi, theta)
    t_z = solve_tz(
        cam.vertices, spec, phi, theta, require_same_height=require_same_height
    )
    euler = EulerAngles(phi=phi, theta=theta, psi=fit.psi)
    return PoseEstimate(
        euler=euler,
        rotation=rotation_from_euler(euler),
        translation=np.array([fit.t_x, fit.t_y, t_z]),
        residual=fit.residual,
    )
