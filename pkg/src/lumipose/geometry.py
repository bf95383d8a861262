"""Pinhole camera model, 2D image lines, 3D viewing planes and rotations.

Coordinate conventions used throughout the package:

- Pixel frame:  origin at the top-left corner of the image, u right,
  v down, continuous-valued pixels.
- Image frame:  metric coordinates on the image plane, origin at the
  principal point, axes parallel to the pixel axes, units of meters.
- Camera frame: origin at the optical center, x/y parallel to the image
  axes, z along the optical axis into the scene.  The image plane sits
  at z = f.
- World frame:  right-handed, z up.

A camera pose is the pair (R, t) mapping camera coordinates to world
coordinates, P_w = R @ P_c + t, with R = Rz(psi) @ Ry(theta) @ Rx(phi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import BehindCamera, DegenerateLine, ParallelLines

__all__ = [
    "CameraIntrinsics",
    "Line2D",
    "EulerAngles",
    "pixel_to_image",
    "image_to_ccs",
    "line_through",
    "lateral_plane",
    "rot_x",
    "rot_y",
    "rot_z",
    "tilt_rotation",
    "rotation_from_euler",
    "intersect_lines",
    "project_vertex",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class CameraIntrinsics:
    """Calibrated pinhole parameters.

    u0, v0 are the principal point in pixels, f the focal length in
    meters and fu, fv the dimensionless focal ratios.  The physical
    pixel pitch follows as dx = f / fu and dy = f / fv.
    """

    u0: float
    v0: float
    f: float
    fu: float
    fv: float

    def __post_init__(self):
        if not (self.f > 0.0 and self.fu > 0.0 and self.fv > 0.0):
            raise ValueError("focal length and focal ratios must be positive")
        if not all(map(math.isfinite, (self.u0, self.v0, self.f, self.fu, self.fv))):
            raise ValueError("intrinsics must be finite")

    @property
    def dx(self) -> float:
        return self.f / self.fu

    @property
    def dy(self) -> float:
        return self.f / self.fv


class Line2D(NamedTuple):
    """Point-normal image line x*cos(phi) + y*sin(phi) = rho.

    phi is the anticlockwise angle from the image y-axis to the line
    (equivalently the direction angle of the line normal), normalized to
    [0, 2*pi); rho >= 0 is the distance from the image origin.
    """

    phi: float
    rho: float


class EulerAngles(NamedTuple):
    """Rotation angles about the camera x, y and z axes.

    phi (x) and theta (y) live in (-pi/2, pi/2], psi (z) in (-pi, pi].
    """

    phi: float
    theta: float
    psi: float


def pixel_to_image(p, intrinsics: CameraIntrinsics) -> np.ndarray:
    """Convert pixel coordinates (u, v) to metric image coordinates."""
    p = np.asarray(p, dtype=float)
    return np.array(
        [
            (p[0] - intrinsics.u0) * intrinsics.dx,
            (p[1] - intrinsics.v0) * intrinsics.dy,
        ]
    )


def image_to_ccs(p, intrinsics: CameraIntrinsics) -> np.ndarray:
    """Lift an image-plane point onto the plane z = f in the camera frame."""
    p = np.asarray(p, dtype=float)
    return np.array([p[0], p[1], intrinsics.f])


def line_through(a, b) -> Line2D:
    """Point-normal form of the image line through points a and b."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    d = b - a
    length = float(np.hypot(d[0], d[1]))
    if length <= 1e-12:
        raise DegenerateLine(f"points {a} and {b} are too close to define a line")
    # Unit normal, then flip so the signed distance is nonnegative.
    nx, ny = d[1] / length, -d[0] / length
    rho = nx * a[0] + ny * a[1]
    if rho < 0.0:
        nx, ny, rho = -nx, -ny, -rho
    phi = math.atan2(ny, nx) % TWO_PI
    return Line2D(phi=phi, rho=rho)


def lateral_plane(a, b, intrinsics: CameraIntrinsics) -> np.ndarray:
    """Unit normal of the plane through the optical center and two image points.

    The plane contains the back-projected rays of both points, so its
    normal is their cross product.  This is the same plane as the
    point-normal construction (f*cos(phi), f*sin(phi), -rho) but stays
    well defined for lines parallel to an image axis.
    """
    ra = image_to_ccs(a, intrinsics)
    rb = image_to_ccs(b, intrinsics)
    n = np.cross(ra, rb)
    norm = float(np.linalg.norm(n))
    scale = float(np.linalg.norm(ra) * np.linalg.norm(rb))
    if norm <= 1e-12 * scale:
        raise DegenerateLine("back-projected rays are parallel")
    return n / norm


def rot_x(phi: float) -> np.ndarray:
    c, s = math.cos(phi), math.sin(phi)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def rot_y(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])


def rot_z(psi: float) -> np.ndarray:
    c, s = math.cos(psi), math.sin(psi)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def tilt_rotation(phi: float, theta: float) -> np.ndarray:
    """The yaw-free part Ry(theta) @ Rx(phi) of the camera rotation.

    Its rows are the coefficient vectors that map camera coordinates to
    the yaw frame; the third row applied to a camera point gives its
    height contribution.
    """
    cp, sp = math.cos(phi), math.sin(phi)
    ct, st = math.cos(theta), math.sin(theta)
    return np.array(
        [
            [ct, st * sp, st * cp],
            [0.0, cp, -sp],
            [-st, ct * sp, ct * cp],
        ]
    )


def rotation_from_euler(euler) -> np.ndarray:
    """Rotation matrix Rz(psi) @ Ry(theta) @ Rx(phi) from Euler angles."""
    phi, theta, psi = euler
    return rot_z(psi) @ tilt_rotation(phi, theta)


def intersect_lines(l1: Line2D, l2: Line2D) -> np.ndarray:
    """Intersection point of two point-normal image lines."""
    denom = math.sin(l2.phi - l1.phi)
    if abs(denom) <= 1e-9:
        raise ParallelLines(f"lines at phi={l1.phi:.6f} and phi={l2.phi:.6f} are parallel")
    c1, s1 = math.cos(l1.phi), math.sin(l1.phi)
    c2, s2 = math.cos(l2.phi), math.sin(l2.phi)
    x = (l1.rho * s2 - l2.rho * s1) / denom
    y = (l2.rho * c1 - l1.rho * c2) / denom
    return np.array([x, y])


def project_vertex(p_world, rotation, translation, intrinsics: CameraIntrinsics) -> np.ndarray:
    """Project a world point through the pinhole onto the pixel frame.

    Raises BehindCamera unless the camera-frame depth exceeds the focal
    length, i.e. the point lies strictly in front of the image plane.
    """
    p_world = np.asarray(p_world, dtype=float)
    rotation = np.asarray(rotation, dtype=float)
    translation = np.asarray(translation, dtype=float)
    p_cam = rotation.T @ (p_world - translation)
    if p_cam[2] <= intrinsics.f:
        raise BehindCamera(f"camera-frame depth {p_cam[2]:.6g} <= focal length")
    x = intrinsics.f * p_cam[0] / p_cam[2]
    y = intrinsics.f * p_cam[1] / p_cam[2]
    return np.array(
        [
            intrinsics.u0 + x / intrinsics.dx,
            intrinsics.v0 + y / intrinsics.dy,
        ]
    )
