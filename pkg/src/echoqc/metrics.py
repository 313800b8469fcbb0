"""Closed-form image quality measures and evaluation statistics.

RMS contrast uses the population normalization (divide by the pixel count);
the depth-gain band variance uses the sample form (divide by n-1). The two
normalizations intentionally differ, matching the definitions the scoring
rubric was calibrated against.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError


@dataclass
class Frame:
    """Single grayscale image, intensities in [0, 1], row-major."""

    pixels: np.ndarray
    origin: str = "phantom"

    def __post_init__(self):
        # float32 keeps whole datasets resident; metrics upcast internally
        self.pixels = np.asarray(self.pixels, dtype=np.float32)
        if self.pixels.ndim != 2:
            raise ConfigurationError(f"frame must be 2-D, got shape {self.pixels.shape}")
        if self.pixels.size and (self.pixels.min() < 0 or self.pixels.max() > 1):
            raise ConfigurationError("frame intensities must lie in [0, 1]")

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass
class Rect:
    """Pixel rectangle: rows [top, top+height), cols [left, left+width)."""

    top: int
    left: int
    height: int
    width: int


@dataclass
class DepthGainProfile:
    """Per-band intensity statistics, near field (top) to far field (bottom)."""

    band_count: int
    band_means: np.ndarray = field(default_factory=lambda: np.array([]))
    band_variances: np.ndarray = field(default_factory=lambda: np.array([]))


@dataclass
class ScorePair:
    ground_truth: float
    predicted: float

    def __post_init__(self):
        for v in (self.ground_truth, self.predicted):
            if not 0.0 <= v <= 1.0:
                raise ConfigurationError(f"scores must lie in [0, 1], got {v}")


def rms_contrast(frame: Frame, roi: Rect | None = None) -> float:
    """Root-mean-square contrast: population standard deviation of the
    pixel intensities over the frame (or a rectangular region of it)."""
    px = frame.pixels
    if roi is not None:
        if (roi.top < 0 or roi.left < 0 or roi.height <= 0 or roi.width <= 0
                or roi.top + roi.height > frame.height
                or roi.left + roi.width > frame.width):
            raise ConfigurationError(f"roi {roi} does not fit a {frame.height}x{frame.width} frame")
        px = px[roi.top:roi.top + roi.height, roi.left:roi.left + roi.width]
    if px.size == 0:
        raise ConfigurationError("cannot compute contrast of an empty region")
    px = px.astype(np.float64)
    mean = px.mean()
    return float(np.sqrt(np.mean((px - mean) ** 2)))


def depth_gain_profile(frame: Frame, band_count: int = 4) -> DepthGainProfile:
    """Split the frame into horizontal bands (near field first) and report
    each band's mean and sample variance of intensity."""
    if band_count < 1:
        raise ConfigurationError("band_count must be positive")
    if band_count > frame.height:
        raise ConfigurationError(
            f"band_count {band_count} exceeds frame height {frame.height}")
    bands = np.array_split(frame.pixels.astype(np.float64), band_count, axis=0)
    means = np.empty(band_count)
    variances = np.empty(band_count)
    for i, band in enumerate(bands):
        if band.size < 2:
            raise ConfigurationError(f"band {i} has fewer than 2 pixels; variance undefined")
        means[i] = band.mean()
        variances[i] = band.var(ddof=1)
    return DepthGainProfile(band_count=band_count, band_means=means, band_variances=variances)


def class_error(pairs: list[ScorePair]) -> float:
    """Mean absolute difference between ground-truth and predicted scores."""
    if not pairs:
        raise ConfigurationError("class_error of an empty list is undefined")
    return float(np.mean([abs(p.ground_truth - p.predicted) for p in pairs]))


def model_accuracy(pairs: list[ScorePair]) -> float:
    """Accuracy percentage, (1 - class_error) * 100."""
    if not pairs:
        raise ConfigurationError("model_accuracy of an empty list is undefined")
    return (1.0 - class_error(pairs)) * 100.0


def interobserver_disparity(a: list[float], b: list[float]) -> tuple[float, float]:
    """Mean and sample standard deviation of elementwise |a_i - b_i|."""
    if len(a) != len(b):
        raise ConfigurationError(f"annotator tracks differ in length: {len(a)} vs {len(b)}")
    if len(a) < 2:
        raise ConfigurationError("disparity needs at least 2 paired scores")
    diffs = np.abs(np.asarray(a, dtype=np.float64) - np.asarray(b, dtype=np.float64))
    return float(diffs.mean()), float(diffs.std(ddof=1))
