"""Command-line front end: single solves, simulations and experiment sweeps.

Observation files are plain text with a versioned header line::

    lumipose-observation v1
    # camera calibration
    u0 = 320.0
    v0 = 240.0
    f = 0.008
    fu = 800.0
    fv = 800.0
    # detected corners, pixels (any order)
    corner_1 = 352.1 240.8
    ...
    corner_4 = ...
    # luminaire vertices broadcast over VLC, world meters, cyclic order
    vertex_1 = 1.9 2.3 3.0
    ...
    vertex_4 = ...
    room_height = 3.0

Values are whitespace-separated numbers; '#' starts a comment.  Every
randomized command takes --seed and prints the seed it used, so any
published table can be reproduced bit for bit.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from .errors import InputFileError, LumiposeError
from .geometry import CameraIntrinsics
from .luminaire import LuminaireSpec
from .simulate import (
    SUMMARY_COLUMNS,
    SceneConfig,
    make_scene,
    observe,
    run_monte_carlo,
    sample_pose,
    solve_observation,
    summary_row,
    write_trials_csv,
    _trial_rng,
)

FORMAT_HEADER = "lumipose-observation v1"

TILT_SWEEP = [0.0, 10.0, 20.0, 30.0, 40.0]
WIDTH_SWEEP = [0.2, 0.4, 0.6, 0.8, 1.0]
NOISE_SWEEP = [0.0, 1.0, 2.0, 3.0, 4.0]

_MODES = [("basic-forced", "basic"), ("dh", "dh"), ("auto", "auto")]


def _parse_observation(path: str) -> tuple[np.ndarray, LuminaireSpec, CameraIntrinsics, float]:
    fields: dict[str, list[float]] = {}
    try:
        lines = open(path, encoding="utf-8").read().splitlines()
    except OSError as exc:
        raise InputFileError(f"{path}: {exc}") from exc
    body = [(i + 1, ln.split("#", 1)[0].strip()) for i, ln in enumerate(lines)]
    body = [(no, ln) for no, ln in body if ln]
    if not body or body[0][1] != FORMAT_HEADER:
        raise InputFileError(f"{path}:1: expected header '{FORMAT_HEADER}'")
    for no, ln in body[1:]:
        if "=" not in ln:
            raise InputFileError(f"{path}:{no}: expected 'key = values'")
        key, _, rest = ln.partition("=")
        key = key.strip()
        try:
            values = [float(tok) for tok in rest.split()]
        except ValueError as exc:
            raise InputFileError(f"{path}:{no}: field '{key}': {exc}") from exc
        if key in fields:
            raise InputFileError(f"{path}:{no}: duplicate field '{key}'")
        fields[key] = values

    def take(key: str, count: int) -> list[float]:
        if key not in fields:
            raise InputFileError(f"{path}: missing field '{key}'")
        if len(fields[key]) != count:
            raise InputFileError(
                f"{path}: field '{key}' needs {count} number(s), got {len(fields[key])}"
            )
        return fields.pop(key)

    intr = CameraIntrinsics(
        u0=take("u0", 1)[0],
        v0=take("v0", 1)[0],
        f=take("f", 1)[0],
        fu=take("fu", 1)[0],
        fv=take("fv", 1)[0],
    )
    corners = np.array([take(f"corner_{i}", 2) for i in range(1, 5)])
    vertices = np.array([take(f"vertex_{i}", 3) for i in range(1, 5)])
    room_height = fields.pop("room_height", [3.0])[0]
    if fields:
        raise InputFileError(f"{path}: unknown field '{sorted(fields)[0]}'")
    try:
        spec = LuminaireSpec(vertices=vertices)
    except ValueError as exc:
        raise InputFileError(f"{path}: field 'vertex_*': {exc}") from exc
    return corners, spec, intr, room_height


def _write_observation(
    path: str,
    corners: np.ndarray,
    spec: LuminaireSpec,
    intr: CameraIntrinsics,
    room_height: float,
) -> None:
    with open(path, "w", encoding="utf-8") as out:
        out.write(FORMAT_HEADER + "\n")
        for key, value in (
            ("u0", intr.u0),
            ("v0", intr.v0),
            ("f", intr.f),
            ("fu", intr.fu),
            ("fv", intr.fv),
        ):
            out.write(f"{key} = {float(value)!r}\n")
        for i, corner in enumerate(corners, start=1):
            out.write(f"corner_{i} = {float(corner[0])!r} {float(corner[1])!r}\n")
        for i, vertex in enumerate(spec.vertices, start=1):
            out.write(
                f"vertex_{i} = {float(vertex[0])!r} {float(vertex[1])!r} {float(vertex[2])!r}\n"
            )
        out.write(f"room_height = {float(room_height)!r}\n")


def _pose_lines(pose, solver: str) -> list[str]:
    return [
        f"solver: {solver}",
        f"phi_deg: {float(np.degrees(pose.euler.phi))!r}",
        f"theta_deg: {float(np.degrees(pose.euler.theta))!r}",
        f"psi_deg: {float(np.degrees(pose.euler.psi))!r}",
        f"tx_m: {float(pose.translation[0])!r}",
        f"ty_m: {float(pose.translation[1])!r}",
        f"tz_m: {float(pose.translation[2])!r}",
        f"residual: {float(pose.residual)!r}",
    ]


def _resolve_seed(args) -> int:
    seed = args.seed if args.seed is not None else int.from_bytes(os.urandom(4), "little")
    print(f"seed: {seed}")
    return seed


def _scene_config(args, **overrides) -> SceneConfig:
    params = dict(
        tilt_deg=args.tilt_deg,
        luminaire_width=args.width_m,
        noise_sigma=args.sigma,
        images_per_position=args.images,
        quantize_pixels=args.quantize,
        occlude_vertex=args.occlude,
        seed=overrides.pop("seed"),
    )
    params.update(overrides)
    return SceneConfig(**params)


def _add_scene_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="RNG seed (printed if omitted)")
    parser.add_argument("--trials", type=int, default=1000, help="Monte Carlo trials per row")
    parser.add_argument("--sigma", type=float, default=2.0, help="pixel noise std dev")
    parser.add_argument("--width-m", type=float, default=0.4, help="luminaire width, meters")
    parser.add_argument("--tilt-deg", type=float, default=0.0, help="luminaire tilt, degrees")
    parser.add_argument("--images", type=int, default=20, help="images averaged per position")
    parser.add_argument(
        "--occlude", type=int, default=None, metavar="IDX", help="occlude corner 0..3"
    )
    parser.add_argument(
        "--quantize", action="store_true", help="round detections to whole pixels"
    )
    parser.add_argument("--out", default=None, help="CSV output path (default stdout)")
    parser.add_argument(
        "--force-basic",
        action="store_true",
        help="use the same-height solver even on tilted scenes",
    )


def _out_stream(path):
    return open(path, "w", encoding="utf-8", newline="") if path else sys.stdout


def _cmd_solve(args) -> int:
    corners, spec, intr, room_height = _parse_observation(args.observation)
    config = SceneConfig(
        room_height=room_height, intrinsics=intr, seed=0, noise_sigma=0.0
    )
    mode = "basic" if args.force_basic else "auto"
    pose, solver = solve_observation(corners, spec, config, mode)
    print("\n".join(_pose_lines(pose, solver)))
    return 0


def _cmd_simulate(args) -> int:
    seed = _resolve_seed(args)
    config = _scene_config(args, seed=seed)
    mode = "basic" if args.force_basic else "auto"
    if args.dump_scene:
        spec = make_scene(config)
        rng = _trial_rng(seed, 0)
        truth = sample_pose(config, spec, rng)
        obs = observe(spec, truth, config, rng)
        _write_observation(args.dump_scene, obs.pixels, spec, config.intrinsics, config.room_height)
        print(f"observation of trial 0 written to {args.dump_scene}")
    summary = run_monte_carlo(config, args.trials, mode)
    print(
        f"mode: {mode}  trials: {summary.n_trials}  ok: {summary.n_ok}  "
        f"pe_mean_m: {summary.pe_mean!r}  pe_median_m: {summary.pe_median!r}"
    )
    oe = summary.oe_mean
    print(f"oe_mean_deg: {float(oe[0])!r} {float(oe[1])!r} {float(oe[2])!r}")
    if args.out:
        with _out_stream(args.out) as stream:
            write_trials_csv(summary, stream)
        print(f"per-trial records written to {args.out}")
    return 0


def _run_sweep(args, name: str, values, field: str, bounds) -> int:
    lo, hi = bounds
    for value in values:
        if not lo <= value <= hi:
            raise LumiposeError(f"{name} value {value} outside [{lo}, {hi}]")
    seed = _resolve_seed(args)
    rows = []
    for value in values:
        config = _scene_config(args, seed=seed, **{field: value})
        for label, mode in _MODES:
            summary = run_monte_carlo(config, args.trials, mode)
            row = summary_row(summary, value)
            row[1] = label
            rows.append(row)
    with _out_stream(args.out) as stream:
        writer = csv.writer(stream, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        writer.writerows(rows)
    if args.out:
        print(f"summary written to {args.out}")
    return 0


def _parse_values(raw: str | None, default) -> list[float]:
    if raw is None:
        return list(default)
    try:
        return [float(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError as exc:
        raise LumiposeError(f"bad --values list: {exc}") from exc


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="lumipose",
        description="Camera localization from one rectangular LED luminaire",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve a single observation file")
    p_solve.add_argument("observation", help="observation file path")
    p_solve.add_argument(
        "--force-basic", action="store_true", help="use the same-height solver"
    )

    p_sim = sub.add_parser("simulate", help="run one Monte Carlo configuration")
    _add_scene_flags(p_sim)
    p_sim.add_argument(
        "--dump-scene", default=None, metavar="PATH", help="write trial 0 observation file"
    )

    sweeps = (
        ("sweep-tilt", "tilt_deg", TILT_SWEEP, (0.0, 40.0), "tilt sweep, degrees"),
        ("sweep-width", "luminaire_width", WIDTH_SWEEP, (0.2, 1.0), "width sweep, meters"),
        ("sweep-noise", "noise_sigma", NOISE_SWEEP, (0.0, 4.0), "noise sweep, pixels"),
    )
    for cmd, _field, default, _bounds, help_text in sweeps:
        p = sub.add_parser(cmd, help=help_text)
        _add_scene_flags(p)
        p.add_argument("--values", default=None, help="comma-separated swept values")

    args = parser.parse_args(argv)
    try:
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        for cmd, field, default, bounds, _help in sweeps:
            if args.command == cmd:
                values = _parse_values(args.values, default)
                return _run_sweep(args, cmd, values, field, bounds)
        parser.error(f"unknown command {args.command}")
    except LumiposeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
