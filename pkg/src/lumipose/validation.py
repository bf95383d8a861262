"""Input coercion and validation helpers for the estimator front end."""

from __future__ import annotations

import numpy as np

from .geometry import CameraIntrinsics
from .luminaire import LuminaireSpec

__all__ = ["check_corners", "check_intrinsics", "check_luminaire"]


def check_corners(X) -> np.ndarray:
    """Coerce observed pixel corners to a (4, 2) array.

    Accepts a single observation of shape (4, 2) or a burst of frames of
    shape (n_frames, 4, 2), which is averaged per corner.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 3 and X.shape[1:] == (4, 2) and X.shape[0] >= 1:
        X = X.mean(axis=0)
    if X.shape != (4, 2):
        raise ValueError(f"expected corners of shape (4, 2) or (n, 4, 2), got {X.shape}")
    if not np.all(np.isfinite(X)):
        raise ValueError("corner coordinates must be finite")
    return X


def check_intrinsics(value) -> CameraIntrinsics:
    """Coerce to CameraIntrinsics; accepts an instance, mapping or 5-sequence."""
    if isinstance(value, CameraIntrinsics):
        return value
    if value is None:
        raise ValueError("camera intrinsics are required")
    if isinstance(value, dict):
        return CameraIntrinsics(**value)
    seq = np.asarray(value, dtype=float).ravel()
    if seq.size != 5:
        raise ValueError("intrinsics sequence must hold (u0, v0, f, fu, fv)")
    return CameraIntrinsics(*seq)


def check_luminaire(value) -> LuminaireSpec:
    """Coerce to LuminaireSpec; accepts an instance or a (4, 3) vertex array."""
    if isinstance(value, LuminaireSpec):
        return value
    if value is None:
        raise ValueError("a luminaire description is required")
    return LuminaireSpec(vertices=np.asarray(value, dtype=float))
