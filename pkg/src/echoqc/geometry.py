"""Perspective projection and apical-foreshortening measures."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

PROJECTION_EPSILON = 1e-9

# Severity cut points as fractions of frame height; a boundary value is
# owned by the higher (worse) class. Both are adjustable per deployment.
THRESHOLD_MILD = 0.02
THRESHOLD_SEVERE = 0.06


@dataclass
class Point3:
    """3-D point; z is the depth along the beam axis."""

    x: float
    y: float
    z: float


@dataclass
class ApexTrack:
    """Per-frame apex pixel positions for one clip, with the end-diastole and
    end-systole frame indices and the frame height used for normalization."""

    apex_positions: list[tuple[float, float]]
    ed_index: int
    es_index: int
    frame_height: float

    def __post_init__(self):
        n = len(self.apex_positions)
        if not (0 <= self.ed_index < n and 0 <= self.es_index < n):
            raise ConfigurationError("ED/ES indices must address track frames")
        if self.ed_index == self.es_index:
            raise ConfigurationError("ED and ES must be distinct frames")
        if self.frame_height <= 0:
            raise ConfigurationError("frame height must be positive")


def perspective_project(p: Point3, d: float) -> tuple[float, float]:
    """Project onto the plane at distance d: (-d*x/z, d*y/z)."""
    if d <= 0:
        raise ConfigurationError(f"projection distance must be positive, got {d}")
    if abs(p.z) <= PROJECTION_EPSILON:
        raise ConfigurationError(f"point at z={p.z} is on the projection singularity")
    return (-d * p.x / p.z, d * p.y / p.z)


def perspective_project_homogeneous(p: Point3, d: float) -> tuple[float, float]:
    """Same projection via a homogeneous 4x4 multiply and perspective divide;
    kept as an independent code path for cross-checking."""
    if d <= 0:
        raise ConfigurationError(f"projection distance must be positive, got {d}")
    if abs(p.z) <= PROJECTION_EPSILON:
        raise ConfigurationError(f"point at z={p.z} is on the projection singularity")
    m = np.array([
        [1.0, 0.0, 0.0, 0.0],
        [0.0, -1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, -1.0 / d, 0.0],
    ])
    v = m @ np.array([p.x, p.y, p.z, 1.0])
    return (v[0] / v[3], v[1] / v[3])


def foreshortening_index(track: ApexTrack) -> float:
    """Euclidean apex displacement between ED and ES, as a fraction of the
    frame height; 0 means the apex held still across the cycle."""
    ed = np.asarray(track.apex_positions[track.ed_index], dtype=np.float64)
    es = np.asarray(track.apex_positions[track.es_index], dtype=np.float64)
    return float(np.linalg.norm(ed - es) / track.frame_height)


def foreshortening_severity(index: float, mild: float = THRESHOLD_MILD,
                            severe: float = THRESHOLD_SEVERE) -> str:
    """Classify a foreshortening index as 'zero', 'mild' or 'severe'."""
    if index < 0:
        raise ConfigurationError(f"foreshortening index must be nonnegative, got {index}")
    if index >= severe:
        return "severe"
    if index >= mild:
        return "mild"
    return "zero"
