"""Rectangular luminaire geometry and its recovery in the camera frame.

The luminaire is a rectangle whose world-frame vertices are broadcast to
the receiver; the camera only observes the four projected corners.  From
those corners alone (plus the known panel area) the routines here
reconstruct the panel's plane and vertex coordinates in the camera
frame: each panel edge together with the optical center spans a viewing
plane, the panel plane must be parallel to the intersection directions
of opposite viewing planes, and the known area pins the absolute scale
through the volume of the viewing pyramid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateQuad, NonPositiveVolume, SingularConfiguration
from .geometry import CameraIntrinsics, lateral_plane

__all__ = [
    "LuminaireSpec",
    "CameraFrameLuminaire",
    "order_corners",
    "solve_normal_direction",
    "normal_ccs",
    "vertices_ccs",
    "recover_luminaire",
]


@dataclass(frozen=True, eq=False)
class LuminaireSpec:
    """World-frame rectangle, vertices in cyclic order, shape (4, 3)."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.array(self.vertices, dtype=float)
        if v.shape != (4, 3) or not np.all(np.isfinite(v)):
            raise ValueError("luminaire vertices must be a finite (4, 3) array")
        sides = np.roll(v, -1, axis=0) - v
        lengths = np.linalg.norm(sides, axis=1)
        if np.any(lengths <= 0.0):
            raise ValueError("luminaire has a zero-length side")
        for i in (0, 1):
            rel = abs(lengths[i] - lengths[i + 2]) / max(1.0, lengths[i])
            if rel > 1e-9:
                raise ValueError("opposite sides differ in length; not a rectangle")
            cos = abs(np.dot(sides[i], sides[i + 1])) / (lengths[i] * lengths[i + 1])
            if cos > 1e-9:
                raise ValueError("adjacent sides are not orthogonal; not a rectangle")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @property
    def area(self) -> float:
        sides = np.roll(self.vertices, -1, axis=0) - self.vertices
        return float(np.linalg.norm(sides[0]) * np.linalg.norm(sides[1]))

    @property
    def center(self) -> np.ndarray:
        return self.vertices.mean(axis=0)

    @property
    def heights(self) -> np.ndarray:
        return self.vertices[:, 2]

    @property
    def height_spread(self) -> float:
        return float(self.heights.max() - self.heights.min())

    @property
    def normal(self) -> np.ndarray:
        """Unit normal of the panel plane, sign-fixed to nonnegative z."""
        v = self.vertices
        n = np.cross(v[1] - v[0], v[3] - v[0])
        n = n / np.linalg.norm(n)
        return -n if n[2] < 0.0 else n


@dataclass(frozen=True, eq=False)
class CameraFrameLuminaire:
    """Recovered panel in the camera frame.

    The panel plane satisfies slope_x*x + slope_y*y + z = 1/scale for
    every vertex, with scale > 0; normal is the unit plane normal with
    positive z (pointing from the camera toward the panel) and distance
    the perpendicular distance from the optical center to the plane.
    Vertices are in the same cyclic order as the image corners they were
    recovered from.
    """

    normal: np.ndarray
    slope_x: float
    slope_y: float
    scale: float
    vertices: np.ndarray
    distance: float


def order_corners(points) -> np.ndarray:
    """Sort four image points into a canonical convex cycle.

    Points are ordered counter-clockwise by polar angle about their
    centroid, starting at the smallest angle in [0, 2*pi).  Raises
    DegenerateQuad if the points do not form a strictly convex
    quadrilateral.
    """
    pts = np.asarray(points, dtype=float)
    if pts.shape != (4, 2) or not np.all(np.isfinite(pts)):
        raise DegenerateQuad("expected four finite image points")
    centroid = pts.mean(axis=0)
    rel = pts - centroid
    angles = np.arctan2(rel[:, 1], rel[:, 0]) % (2.0 * math.pi)
    ordered = pts[np.argsort(angles, kind="stable")]
    edges = np.roll(ordered, -1, axis=0) - ordered
    lengths = np.linalg.norm(edges, axis=1)
    nxt = np.roll(edges, -1, axis=0)
    crosses = edges[:, 0] * nxt[:, 1] - edges[:, 1] * nxt[:, 0]
    floor = 1e-12 * np.maximum(lengths * np.roll(lengths, -1), 1e-300)
    if np.any(crosses <= floor):
        raise DegenerateQuad("corners are not strictly convex")
    return ordered


def _edge_planes(corners: np.ndarray, intrinsics: CameraIntrinsics) -> np.ndarray:
    """Unit normals of the four viewing planes of edges i -> i+1."""
    return np.stack(
        [lateral_plane(corners[i], corners[(i + 1) % 4], intrinsics) for i in range(4)]
    )


def solve_normal_direction(corners, intrinsics: CameraIntrinsics) -> tuple[float, float]:
    """Slopes (m, n) of the panel plane m*x + n*y + z = const.

    Each panel edge direction is the cross product of the panel normal
    (m, n, 1) with its viewing-plane normal, and must be orthogonal to
    the viewing plane of the opposite edge.  The two opposite-edge pairs
    give a 2x2 linear system in (m, n).
    """
    corners = np.asarray(corners, dtype=float)
    planes = _edge_planes(corners, intrinsics)
    rows = np.empty((2, 2))
    rhs = np.empty(2)
    for k, (ea, eb) in enumerate(((2, 0), (3, 1))):
        w = np.cross(planes[ea], planes[eb])
        rows[k] = w[:2]
        rhs[k] = -w[2]
    det = rows[0, 0] * rows[1, 1] - rows[0, 1] * rows[1, 0]
    if abs(det) <= 1e-12:
        raise SingularConfiguration("opposite-edge constraints are degenerate")
    m = (rhs[0] * rows[1, 1] - rhs[1] * rows[0, 1]) / det
    n = (rows[0, 0] * rhs[1] - rows[1, 0] * rhs[0]) / det
    return float(m), float(n)


def normal_ccs(m: float, n: float) -> np.ndarray:
    """Unit panel normal (m, n, 1) / |(m, n, 1)| in the camera frame."""
    return np.array([m, n, 1.0]) / math.sqrt(m * m + n * n + 1.0)


def vertices_ccs(
    corners,
    m: float,
    n: float,
    area: float,
    intrinsics: CameraIntrinsics,
) -> CameraFrameLuminaire:
    """Camera-frame vertex coordinates of the panel from its corner cycle.

    Vertex i is the intersection of the panel plane with the two viewing
    planes of its incident edges; intersecting with the normalized plane
    m*x + n*y + z = 1 gives scaled vertices, and the known panel area
    recovers the true scale through the volume of the viewing pyramid
    (the four origin-apex corner tetrahedra together fill it twice).
    """
    corners = np.asarray(corners, dtype=float)
    planes = _edge_planes(corners, intrinsics)
    base = np.array([m, n, 1.0])
    base_norm = float(np.linalg.norm(base))
    e1 = np.array([1.0, 0.0, 0.0])
    scaled = np.empty((4, 3))
    for i in range(4):
        system = np.stack([base, planes[(i - 1) % 4], planes[i]])
        if abs(np.linalg.det(system)) <= 1e-12 * base_norm:
            raise SingularConfiguration(f"viewing planes at corner {i} are degenerate")
        scaled[i] = np.linalg.solve(system, e1)
    volumes = np.empty(4)
    for i in range(4):
        triple = scaled[[i, (i + 1) % 4, (i + 2) % 4]]
        volumes[i] = abs(np.linalg.det(triple)) / 6.0
    total = float(volumes.sum())
    if total <= 1e-18:
        raise NonPositiveVolume("scaled pyramid volumes vanish")
    scale = math.sqrt(3.0 * total * base_norm / (2.0 * area))
    vertices = scaled / scale
    return CameraFrameLuminaire(
        normal=normal_ccs(m, n),
        slope_x=float(m),
        slope_y=float(n),
        scale=scale,
        vertices=vertices,
        distance=1.0 / (scale * base_norm),
    )


def recover_luminaire(image_corners, area: float, intrinsics: CameraIntrinsics) -> CameraFrameLuminaire:
    """Full camera-frame recovery from four unordered image corners."""
    ordered = order_corners(image_corners)
    m, n = solve_normal_direction(ordered, intrinsics)
    return vertices_ccs(ordered, m, n, area, intrinsics)
