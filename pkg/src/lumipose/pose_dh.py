"""Camera pose for luminaires whose LEDs sit at different heights.

With unequal vertex heights the flat-panel assumption breaks down; the
height pattern itself becomes a measurement.  Given a hypothesized
camera height t_z, the third-row coefficients of the camera rotation
follow from a least-squares fit of vertex heights (enumerating the
vertex/height assignments), after which the planar fit of the basic
solver applies unchanged.  The hypothesized height is then found by a
coarse-to-fine grid search minimizing the mismatch between the panel
normal implied by the fitted rotation and the true world normal
computed from the broadcast vertices.

Two structural hazards shape the search.  First, away from the true
height a wrong vertex/height assignment often fits better than the
correct one, which can shrink the objective's true dip below the coarse
grid resolution; refinement windows therefore also come from a dense
scan of the closed-form assignment-fit score, and near-tied assignments
are arbitrated by the normal mismatch itself.  Second, every image of a
rectangle admits one exactly-consistent mirror pose (a half-turn of the
camera about the panel's center normal) that produces a second zero of
the objective; among basins with comparable objective values the search
keeps the poses with the most upright camera, matching hand-held indoor
receivers.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DegenerateObjective, SingularConfiguration
from .geometry import CameraIntrinsics, EulerAngles, rotation_from_euler
from .luminaire import LuminaireSpec, recover_luminaire
from .pose_basic import PoseEstimate, _heading_lls, _image_corners, _world_cycle

__all__ = [
    "DhSearchConfig",
    "CRowFit",
    "solve_c_row",
    "euler_xy_from_c",
    "solve_pose_2d",
    "solve_pose_dh",
]

FLAT_SPREAD_TOL = 1e-6
OBJECTIVE_SPREAD_TOL = 1e-9

# A refined basin competes with the best one when its objective is
# within this factor, or within a small fraction of the typical
# coarse-grid objective (two exact zeros differ only by grid luck).
# Among competitors, basins whose camera tilt materially exceeds the
# most upright one are mirror-pose suspects and are dropped; the rest
# are ranked by objective value.
_PLAUSIBLE_RATIO = 4.0
_PLAUSIBLE_SCALE = 0.02
_PLAUSIBLE_FLOOR = 1e-8
_TILT_CAP = math.radians(50.0)
_TILT_MARGIN = math.radians(3.0)
_MAX_BASINS = 3
_SHORTLIST = 3
# Assignments whose fit score is this close to the best one at a given
# height are evaluated through the full chain; the normal mismatch then
# arbitrates (a wrong assignment can fit the heights almost exactly but
# implies a wildly wrong panel normal).  The scan works on distinct
# height patterns (at most six for a tilted rectangle), so the cap of
# six never evicts the correct pattern.
_SCORE_RATIO = 2.0
_SCORE_SLACK = 0.05
_MAX_EVAL_ASSIGNMENTS = 6

_ASSIGNMENTS = np.array(sorted(itertools.permutations(range(4))))


@dataclass(frozen=True)
class DhSearchConfig:
    """Grid-search schedule for the camera-height scan.

    max_height bounds t_z from above (the room height); coarse_step and
    fine_step are the first- and last-stage grid spacings.  With more
    than two stages the intermediate spacings are log-interpolated.
    """

    max_height: float
    coarse_step: float = 0.10
    fine_step: float = 0.01
    stages: int = 2

    def __post_init__(self):
        if not 0.0 < self.fine_step <= self.coarse_step < self.max_height:
            raise ValueError("need 0 < fine_step <= coarse_step < max_height")
        if self.stages < 1:
            raise ValueError("need at least one search stage")

    @property
    def step_schedule(self) -> np.ndarray:
        if self.stages == 1:
            return np.array([self.coarse_step])
        return np.geomspace(self.coarse_step, self.fine_step, self.stages)


class CRowFit(NamedTuple):
    """Third-row fit result: unit row c, its pre-normalization norm, the
    fit residual and the winning vertex-to-height assignment."""

    c: np.ndarray
    raw_norm: float
    residual: float
    assignment: tuple[int, ...]


def solve_c_row(vertices_c, heights_w, t_z: float) -> CRowFit:
    """Rotation third row from vertex heights at a hypothesized camera height.

    Each camera vertex satisfies c . P = z_w - t_z for its (unknown)
    world partner; all 24 assignments are scored by fit residual plus
    the unit-norm defect of c (a rotation row must have norm one, which
    discriminates assignments that a zero residual alone would not).
    Ties pick the lexicographically smallest assignment.
    """
    vertices_c = np.asarray(vertices_c, dtype=float)
    heights_w = np.asarray(heights_w, dtype=float)
    pinv, gram_defect = _height_operators(vertices_c)
    targets = heights_w[_ASSIGNMENTS] - t_z  # (24, 4)
    c_all = targets @ pinv.T
    residuals = np.linalg.norm(targets @ gram_defect.T, axis=1)
    norms = np.linalg.norm(c_all, axis=1)
    scores = residuals + np.abs(norms - 1.0)
    best = int(np.argmin(scores))
    if norms[best] <= 1e-12:
        raise SingularConfiguration("height data does not constrain the rotation row")
    c = c_all[best] / norms[best]
    if c[2] < 0.0:
        c = -c
    return CRowFit(
        c=c,
        raw_norm=float(norms[best]),
        residual=float(residuals[best]),
        assignment=tuple(int(k) for k in _ASSIGNMENTS[best]),
    )


def _height_operators(vertices_c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Pseudoinverse of the stacked vertex matrix and its residual map."""
    if vertices_c.shape != (4, 3):
        raise ValueError("expected four camera-frame vertices of shape (4, 3)")
    singulars = np.linalg.svd(vertices_c, compute_uv=False)
    if singulars[-1] <= 1e-12 * singulars[0]:
        raise SingularConfiguration("camera-frame vertices are rank deficient")
    pinv = np.linalg.pinv(vertices_c)
    gram_defect = vertices_c @ pinv - np.eye(4)
    return pinv, gram_defect


def euler_xy_from_c(c) -> tuple[float, float]:
    """Rotation angles (phi, theta) from a unit third row with positive z."""
    c = np.asarray(c, dtype=float)
    theta = -math.asin(min(1.0, max(-1.0, c[0])))
    phi = math.atan2(c[1], c[2])
    return phi, theta


class _HeightScan:
    """Vectorized evaluation of the pose and normal mismatch over t_z grids.

    All quantities that do not depend on t_z (the camera-frame panel
    recovery, the height-fit operators and the canonical world cycle)
    are precomputed once; evaluate() then handles a whole grid of
    hypothesized heights in a few batched linear-algebra calls.  The
    scalar entry points reuse this class with one-point grids so there
    is a single code path.
    """

    def __init__(self, obs, spec: LuminaireSpec, intrinsics: CameraIntrinsics):
        corners = _image_corners(obs, intrinsics)
        self.cam = recover_luminaire(corners, spec.area, intrinsics)
        self.spec = spec
        vertices = self.cam.vertices
        pinv, gram_defect = _height_operators(vertices)
        # Distinct height patterns only: duplicate assignments (vertices
        # sharing a height) would otherwise crowd the evaluation cap.
        heights = np.unique(spec.heights[_ASSIGNMENTS], axis=0)
        self._c_base = heights @ pinv.T  # c(sigma, tz) = base - tz * drift
        self._c_drift = pinv @ np.ones(4)
        self._res_base = heights @ gram_defect.T
        self._res_drift = gram_defect @ np.ones(4)
        self._vertices = vertices
        self._w_cycle, self._w_center = _world_cycle(spec)
        self._n_c = self.cam.normal
        self._n_w = spec.normal

    def _assignment_scores(self, t_z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Fit residual plus unit-norm defect per (height, assignment)."""
        c_all = self._c_base[None] - t_z[:, None, None] * self._c_drift[None, None, :]
        residuals = np.linalg.norm(
            self._res_base[None] - t_z[:, None, None] * self._res_drift[None, None, :],
            axis=2,
        )
        norms = np.linalg.norm(c_all, axis=2)
        return residuals + np.abs(norms - 1.0), c_all

    def score_minima(self, max_height: float, top: int = 4) -> list[float]:
        """Heights where some vertex-to-height assignment fits almost
        exactly, located by a dense scan of the closed-form fit score.

        The mismatch objective can be blind to the true height at coarse
        resolution (a wrong assignment shadows the correct one a few
        centimeters off the truth), but the per-assignment score is a
        cheap function of the height whose dense scan cannot miss it.
        """
        step = 0.01
        grid = _span_grid(0.0, max_height, step)
        values = self._assignment_scores(grid)[0].min(axis=1)
        picks = sorted(_local_minima(values)[: 2 * top], key=lambda i: values[i])
        fine_grids = [
            _span_grid(max(0.0, grid[i] - step), min(max_height, grid[i] + step), step / 10.0)
            for i in picks
        ]
        refined = []
        if fine_grids:
            merged = np.concatenate(fine_grids)
            fine_values = self._assignment_scores(merged)[0].min(axis=1)
            offset = 0
            for fine in fine_grids:
                chunk = fine_values[offset : offset + fine.size]
                offset += fine.size
                j = int(np.argmin(chunk))
                refined.append((float(chunk[j]), float(fine[j])))
        refined.sort()
        out: list[float] = []
        for _, t in refined:
            if all(abs(t - seen) > 2e-3 for seen in out):
                out.append(t)
            if len(out) == top:
                break
        return out

    def _chain(self, t_z: np.ndarray, c_raw: np.ndarray) -> dict[str, np.ndarray]:
        """Pose and normal mismatch for given rotation-row candidates."""
        c_norm = np.linalg.norm(c_raw, axis=1)
        degenerate = c_norm <= 1e-12
        c = c_raw / np.where(degenerate, 1.0, c_norm)[:, None]
        c = np.where(c[:, 2:3] < 0.0, -c, c)

        theta = -np.arcsin(np.clip(c[:, 0], -1.0, 1.0))
        phi = np.arctan2(c[:, 1], c[:, 2])
        sin_p, cos_p = np.sin(phi), np.cos(phi)
        sin_t, cos_t = np.sin(theta), np.cos(theta)
        row_a = np.stack([cos_t, sin_t * sin_p, sin_t * cos_p], axis=1)
        row_b = np.stack([np.zeros_like(phi), cos_p, -sin_p], axis=1)

        u = np.stack(
            [self._vertices @ row_a.T, self._vertices @ row_b.T], axis=2
        ).transpose(1, 0, 2)  # (G, 4, 2)
        psi, t_xy, lls_residual, ok = _heading_lls(u, self._w_cycle, self._w_center)

        sin_y, cos_y = np.sin(psi), np.cos(psi)
        top = cos_y[:, None] * row_a - sin_y[:, None] * row_b
        mid = sin_y[:, None] * row_a + cos_y[:, None] * row_b
        rotation = np.stack([top, mid, c], axis=1)  # (G, 3, 3)

        n_hat = rotation @ self._n_c
        n_hat = np.where(n_hat[:, 2:3] < 0.0, -n_hat, n_hat)
        delta_g = np.linalg.norm(self._n_w[None] - n_hat, axis=1)
        # Points whose candidate systems degenerate carry no pose.
        delta_g = np.where(ok & ~degenerate, delta_g, np.inf)
        tilt = np.arccos(np.clip(c[:, 2], -1.0, 1.0))
        return {
            "t_z": t_z,
            "delta_g": delta_g,
            "phi": phi,
            "theta": theta,
            "psi": psi,
            "t_xy": t_xy,
            "residual": lls_residual,
            "tilt": tilt,
        }

    def evaluate(self, t_z, deep: bool = False) -> dict[str, np.ndarray]:
        """Pose and normal mismatch over a grid of hypothesized heights.

        The shallow mode uses, per height, the assignment with the best
        fit score.  The deep mode additionally runs every assignment
        whose score is nearly tied with the best through the full chain
        and keeps the one with the smallest normal mismatch; near the
        true height a wrong assignment can out-score the correct one by
        a hair while implying a wildly wrong normal.
        """
        t_z = np.atleast_1d(np.asarray(t_z, dtype=float))
        scores, c_all = self._assignment_scores(t_z)
        n_points = t_z.size
        if not deep:
            best = np.argmin(scores, axis=1)
            g = np.arange(n_points)
            return self._chain(t_z, c_all[g, best])

        order = np.argsort(scores, axis=1, kind="stable")[:, :_MAX_EVAL_ASSIGNMENTS]
        width = order.shape[1]
        top_scores = np.take_along_axis(scores, order, axis=1)
        window = np.maximum(_SCORE_RATIO * top_scores[:, 0], top_scores[:, 0] + _SCORE_SLACK)
        eligible = top_scores <= window[:, None]  # first column always true
        flat = np.flatnonzero(eligible)
        point_of = flat // width
        c_sel = np.take_along_axis(c_all, order[..., None], axis=1).reshape(-1, 3)[flat]
        sub = self._chain(t_z[point_of], c_sel)

        out: dict[str, np.ndarray] = {}
        delta_flat = np.full(n_points * width, np.inf)
        delta_flat[flat] = sub["delta_g"]
        pick = np.argmin(delta_flat.reshape(n_points, width), axis=1)
        chosen = np.searchsorted(flat, np.arange(n_points) * width + pick)
        for key, values in sub.items():
            out[key] = np.asarray(values)[chosen]
        out["t_z"] = t_z
        return out

    def pose_at(self, t_z: float) -> tuple[PoseEstimate, float]:
        sample = self.evaluate([t_z], deep=True)
        if not np.isfinite(sample["delta_g"][0]):
            raise SingularConfiguration(
                f"correspondence fit degenerates at t_z = {float(t_z):.3f}"
            )
        euler = EulerAngles(
            phi=float(sample["phi"][0]),
            theta=float(sample["theta"][0]),
            psi=float(sample["psi"][0]),
        )
        pose = PoseEstimate(
            euler=euler,
            rotation=rotation_from_euler(euler),
            translation=np.array(
                [sample["t_xy"][0, 0], sample["t_xy"][0, 1], float(t_z)]
            ),
            residual=float(sample["residual"][0]),
        )
        return pose, float(sample["delta_g"][0])


def solve_pose_2d(
    obs, spec: LuminaireSpec, intrinsics: CameraIntrinsics, t_z: float
) -> tuple[PoseEstimate, float]:
    """Pose at a known camera height, plus the normal-mismatch value there."""
    scan = _HeightScan(obs, spec, intrinsics)
    return scan.pose_at(float(t_z))


def _span_grid(lo: float, hi: float, step: float) -> np.ndarray:
    count = int(math.floor((hi - lo) / step + 1e-9))
    grid = lo + step * np.arange(count + 1)
    if grid[-1] < hi - 1e-12:
        grid = np.append(grid, hi)
    return grid


def _local_minima(values: np.ndarray) -> list[int]:
    padded = np.concatenate([[np.inf], values, [np.inf]])
    mask = (
        np.isfinite(values)
        & (values <= padded[:-2])
        & (values <= padded[2:])
    )
    idx = np.flatnonzero(mask)
    order = np.argsort(values[idx], kind="stable")
    return [int(i) for i in idx[order]]


def _candidate_intervals(grid: np.ndarray, values: np.ndarray, halfwidth: float) -> list[tuple[float, float, float]]:
    """Merged refinement intervals (lo, hi, seed_value) worth digging into.

    Wrong vertex-height assignments can shadow the true height except in
    a dip narrower than the coarse step, leaving no local minimum at
    coarse resolution; the dip still depresses nearby values.  So the
    candidate set combines local minima with runs of the smallest grid
    values, each widened by one coarse cell.
    """
    picks = set(_local_minima(values)[:_SHORTLIST])
    finite = np.where(np.isfinite(values))[0]
    shortlist = finite[np.argsort(values[finite], kind="stable")][:_SHORTLIST]
    picks.update(int(i) for i in shortlist)
    runs = []
    for i in sorted(picks):
        if runs and i - runs[-1][1] <= 1:
            runs[-1][1] = i
        else:
            runs.append([i, i])
    spans = []
    for first, last in runs:
        lo = max(0.0, grid[first] - halfwidth)
        hi = min(grid[-1], grid[last] + halfwidth)
        seed = float(values[first : last + 1].min())
        if spans and lo <= spans[-1][1] + 1e-12:
            spans[-1][1] = max(spans[-1][1], hi)
            spans[-1][2] = min(spans[-1][2], seed)
        else:
            spans.append([lo, hi, seed])
    spans.sort(key=lambda iv: iv[2])
    return [tuple(iv) for iv in spans[:_MAX_BASINS]]


def solve_pose_dh(
    obs,
    spec: LuminaireSpec,
    intrinsics: CameraIntrinsics,
    config: DhSearchConfig,
    *,
    full_output: bool = False,
):
    """Full pose for a tilted luminaire via the coarse-to-fine height scan.

    Raises DegenerateObjective when the vertex heights are (numerically)
    equal, in which case the mismatch objective carries no information
    and the same-height solver should be used instead.
    """
    if spec.height_spread <= FLAT_SPREAD_TOL:
        raise DegenerateObjective(
            f"vertex height spread {spec.height_spread:.3g} m; use the same-height solver"
        )
    scan = _HeightScan(obs, spec, intrinsics)
    steps = config.step_schedule

    grid = _span_grid(0.0, config.max_height, steps[0])
    stage1 = scan.evaluate(grid)
    values = stage1["delta_g"]
    finite = values[np.isfinite(values)]
    if finite.size == 0:
        raise SingularConfiguration("correspondence fit degenerates on the whole grid")
    if float(finite.max() - finite.min()) < OBJECTIVE_SPREAD_TOL:
        raise DegenerateObjective("normal mismatch is flat across the height grid")

    trace = {"stage_grids": [grid], "stage_values": [values]} if full_output else None

    # Interval state: [lo, hi, t_best, value_best, tilt_best, deep].
    # Wide intervals around coarse-grid minima refine with the plain
    # per-height assignment choice; the tight windows around exact-fit
    # heights use the deep (mismatch-arbitrated) assignment choice,
    # which is what resolves assignments that alias near the truth.
    state = []
    for lo, hi, _ in _candidate_intervals(grid, values, steps[0]):
        inside = np.where((grid >= lo - 1e-12) & (grid <= hi + 1e-12))[0]
        j = inside[np.argmin(values[inside])]
        state.append([lo, hi, float(grid[j]), float(values[j]), float(stage1["tilt"][j]), False])

    fine = steps[-1]
    for t_s in scan.score_minima(config.max_height):
        lo = max(0.0, t_s - 2.0 * fine)
        hi = min(config.max_height, t_s + 2.0 * fine)
        state.append([lo, hi, float(t_s), math.inf, math.inf, True])

    seeds = [s for s in state if s[5]]
    if len(steps) == 1 and seeds:
        sample = scan.evaluate([s[2] for s in seeds], deep=True)
        for s, dg, tl in zip(seeds, sample["delta_g"], sample["tilt"]):
            if np.isfinite(dg):
                s[3], s[4] = float(dg), float(tl)

    for k in range(1, len(steps)):
        for deep in (False, True):
            batch = [s for s in state if s[5] == deep]
            if not batch:
                continue
            grids = [_span_grid(s[0], s[1], steps[k]) for s in batch]
            sample = scan.evaluate(np.concatenate(grids), deep=deep)
            if trace is not None:
                trace["stage_grids"].append(np.concatenate(grids))
                trace["stage_values"].append(sample["delta_g"])
            offset = 0
            for s, stage_grid in zip(batch, grids):
                dg = sample["delta_g"][offset : offset + stage_grid.size]
                tl = sample["tilt"][offset : offset + stage_grid.size]
                offset += stage_grid.size
                j = int(np.argmin(dg))
                if float(dg[j]) < s[3]:
                    s[2], s[3], s[4] = float(stage_grid[j]), float(dg[j]), float(tl[j])
                s[0] = max(0.0, s[2] - steps[k])
                s[1] = min(config.max_height, s[2] + steps[k])
    basins = [(s[2], s[3], s[4]) for s in state if np.isfinite(s[3])]
    if not basins:
        raise SingularConfiguration("no usable height basin found")

    scale = float(np.median(finite))
    best_value = min(v for _, v, _ in basins)
    threshold = max(
        _PLAUSIBLE_RATIO * best_value,
        best_value + _PLAUSIBLE_SCALE * scale,
        best_value + _PLAUSIBLE_FLOOR,
    )
    plausible = [b for b in basins if b[1] <= threshold]
    upright = [b for b in plausible if b[2] <= _TILT_CAP]
    pool = upright if upright else plausible
    tilt_floor = min(b[2] for b in pool)
    pool = [b for b in pool if b[2] <= tilt_floor + _TILT_MARGIN]
    t_final, _, _ = min(pool, key=lambda b: (b[1], b[0]))

    pose, delta_g = scan.pose_at(t_final)
    if full_output:
        trace["basins"] = basins
        trace["delta_g"] = delta_g
        return pose, trace
    return pose
