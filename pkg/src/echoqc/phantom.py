"""Deterministic synthetic echo-like cine generator.

Renders a 227x227 sector containing ellipsoidal chambers separated by
bright walls, animated over a 20-frame pseudo-cardiac cycle (end-diastole
at frame 0, end-systole at frame 10). Each quality attribute has one
controllable degradation knob with analytically known ground truth:

    contrast_level      chamber clarity (intensity separation)
    gain_gradient       depth gain (vertical time-gain ramp; negative darkens
                        the far field, positive blows it out)
    axis_rotation_deg   on-axis orientation (in-plane anatomy rotation)
    foreshorten_level   apex drift between ED and ES
    noise_amplitude     multiplicative speckle stand-in

All randomness flows from the clip seed through numpy's PCG64 generator, so
identical parameters reproduce bit-identical clips.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError
from .geometry import ApexTrack, foreshortening_index, foreshortening_severity
from .metrics import Frame, Rect, rms_contrast
from .rubric import ATTRIBUTES, AttributeScores, column_scores, composite_score, \
    contrast_to_clinical, quality_band

FRAME_SIZE = 227
CLIP_FRAME_COUNT = 20
ED_FRAME = 0
ES_FRAME = 10

FORESHORTEN_LEVELS = ("zero", "mild", "severe")
VIEWS = ("A4C", "A2C")

# sector geometry (pixel units)
_SECTOR_APEX = (113.0, 6.0)       # (col, row) of the probe origin
_SECTOR_HALF_ANGLE = np.deg2rad(38.0)
_SECTOR_RADIUS = 215.0
_HEART_CENTER = (113.0, 118.0)

_BACKGROUND = 0.02
_TISSUE = 0.55
_WALL = 0.85
_CAVITY = 0.10
_WALL_THICKNESS = 1.22            # wall ring outer scale relative to cavity
_CONTRACTION = 0.16               # systolic semi-axis shrink fraction

# region used for the clarity measurement; sits inside the sector for any
# anatomy rotation since the sector mask itself never rotates
CLARITY_ROI = Rect(top=64, left=75, height=76, width=78)

# apex displacement ranges (pixels) drawn per foreshortening level
_FORESHORTEN_DISP = {"zero": (0.0, 2.5), "mild": (7.5, 10.5), "severe": (16.0, 25.0)}

# parameter-to-level cut points used by the labeller
ROTATION_AVERAGE_DEG = 5.0        # |rotation| above this is no longer optimum
ROTATION_POOR_DEG = 15.0
GAIN_AVERAGE = 0.15
GAIN_POOR = 0.55


@dataclass
class PhantomParams:
    seed: int
    contrast_level: float = 0.8
    gain_gradient: float = 0.0
    axis_rotation_deg: float = 0.0
    foreshorten_level: str = "zero"
    noise_amplitude: float = 0.0
    view: str = "A4C"

    def __post_init__(self):
        if not 0.0 <= self.contrast_level <= 1.0:
            raise ConfigurationError(f"contrast_level {self.contrast_level} outside [0, 1]")
        if not -1.0 <= self.gain_gradient <= 1.0:
            raise ConfigurationError(f"gain_gradient {self.gain_gradient} outside [-1, 1]")
        if not -30.0 <= self.axis_rotation_deg <= 30.0:
            raise ConfigurationError(
                f"axis_rotation_deg {self.axis_rotation_deg} outside [-30, 30]")
        if self.foreshorten_level not in FORESHORTEN_LEVELS:
            raise ConfigurationError(f"unknown foreshorten_level {self.foreshorten_level!r}")
        if not 0.0 <= self.noise_amplitude <= 0.2:
            raise ConfigurationError(f"noise_amplitude {self.noise_amplitude} outside [0, 0.2]")
        if self.view not in VIEWS:
            raise ConfigurationError(f"view must be one of {VIEWS}, got {self.view!r}")


@dataclass
class CineClip:
    clip_id: str
    view: str
    frames: list[Frame]
    labels: AttributeScores
    apex_track: ApexTrack | None = None
    params: PhantomParams | None = None
    levels: dict[str, str] | None = None

    def __post_init__(self):
        if len(self.frames) != CLIP_FRAME_COUNT:
            raise ConfigurationError(
                f"clip {self.clip_id} has {len(self.frames)} frames, expected {CLIP_FRAME_COUNT}")
        shapes = {f.pixels.shape for f in self.frames}
        if len(shapes) != 1:
            raise ConfigurationError(f"clip {self.clip_id} mixes frame dimensions: {shapes}")


@dataclass
class _ClipBuild:
    """Intermediate state handed to the labeller."""

    frames: list[Frame]
    apex_track: ApexTrack
    clarity_contrast: float  # ROI contrast of the ED frame before gain/noise


def _grid():
    rows, cols = np.mgrid[0:FRAME_SIZE, 0:FRAME_SIZE]
    return cols.astype(np.float64), rows.astype(np.float64)


_GX, _GY = _grid()

_dxs = _GX - _SECTOR_APEX[0]
_dys = _GY - _SECTOR_APEX[1]
_SECTOR_MASK = (
    (np.hypot(_dxs, _dys) <= _SECTOR_RADIUS)
    & (_dys > 0)
    & (np.abs(np.arctan2(_dxs, _dys)) <= _SECTOR_HALF_ANGLE)
)


def _ellipse_masks(center, semi_major, semi_minor, tilt_rad):
    """Interior and wall-ring masks for a tilted ellipse."""
    ct, st = np.cos(tilt_rad), np.sin(tilt_rad)
    dx = _GX - center[0]
    dy = _GY - center[1]
    u = dx * st + dy * ct      # along the long axis
    v = dx * ct - dy * st
    q = (u / semi_major) ** 2 + (v / semi_minor) ** 2
    interior = q <= 1.0
    wall = (q > 1.0) & (q <= _WALL_THICKNESS ** 2)
    return interior, wall


def _rotate_about(point, pivot, angle_rad):
    c, s = np.cos(angle_rad), np.sin(angle_rad)
    dx, dy = point[0] - pivot[0], point[1] - pivot[1]
    return (pivot[0] + c * dx - s * dy, pivot[1] + s * dx + c * dy)


# chamber layout: offsets from the heart center, semi-axes, tilt (degrees).
# The long axis of each chamber points roughly toward the probe.
_CHAMBERS_A4C = {
    "LV": ((-24.0, -26.0), 24.0, 38.0, 14.0),
    "RV": ((28.0, -28.0), 18.0, 31.0, -10.0),
    "LA": ((-19.0, 38.0), 19.0, 23.0, 4.0),
    "RA": ((25.0, 36.0), 17.0, 21.0, -4.0),
}
_CHAMBERS_A2C = {k: _CHAMBERS_A4C[k] for k in ("LV", "LA")}


def _cycle_phase(frame_index: int) -> float:
    """0 at ED (frame 0), 1 at ES (frame 10), smoothly periodic."""
    return (1.0 - np.cos(2.0 * np.pi * frame_index / CLIP_FRAME_COUNT)) / 2.0


def generate_clip(params: PhantomParams, clip_id: str = "phantom") -> CineClip:
    """Render one cine clip; identical params yield bit-identical output."""
    rng = np.random.Generator(np.random.PCG64(params.seed))
    disp_lo, disp_hi = _FORESHORTEN_DISP[params.foreshorten_level]
    disp_max = rng.uniform(disp_lo, disp_hi)

    theta = np.deg2rad(params.axis_rotation_deg)
    chambers = _CHAMBERS_A4C if params.view == "A4C" else _CHAMBERS_A2C
    hc = _HEART_CENTER

    frames: list[Frame] = []
    apex_positions: list[tuple[float, float]] = []
    clarity_contrast = 0.0

    rows_t = (_GY / (FRAME_SIZE - 1))  # 0 at near field, 1 at far field
    gain_map = 1.0 + params.gain_gradient * rows_t

    for t in range(CLIP_FRAME_COUNT):
        phase = _cycle_phase(t)
        field = np.full((FRAME_SIZE, FRAME_SIZE), _TISSUE)

        interiors = []
        walls = []
        for name, (offset, minor0, major0, tilt_deg) in chambers.items():
            center = (hc[0] + offset[0], hc[1] + offset[1])
            center = _rotate_about(center, hc, theta)
            tilt = np.deg2rad(tilt_deg) + theta
            scale = 1.0 - _CONTRACTION * phase
            if name in ("LA", "RA"):
                scale = 1.0 + 0.06 * phase  # atria fill during systole
            major = major0 * scale
            minor = minor0 * scale

            if name == "LV":
                # apex = tip of the long axis nearest the probe; foreshortening
                # drags it toward the base during systole
                axis_dir = (np.sin(tilt), np.cos(tilt))  # unit, pointing base-ward
                tip0 = (center[0] - axis_dir[0] * major0,
                        center[1] - axis_dir[1] * major0)
                disp = disp_max * phase
                tip = (tip0[0] + axis_dir[0] * disp, tip0[1] + axis_dir[1] * disp)
                center = (tip[0] + axis_dir[0] * major, tip[1] + axis_dir[1] * major)
                apex_positions.append(tip)

            interior, wall = _ellipse_masks(center, major, minor, tilt)
            interiors.append(interior)
            walls.append(wall)

        for wall in walls:
            field[wall] = _WALL
        for interior in interiors:
            field[interior] = _CAVITY

        # contrast scaling acts on the sector content only
        field = np.where(_SECTOR_MASK,
                         0.5 + (field - 0.5) * params.contrast_level,
                         _BACKGROUND)

        if t == ED_FRAME:
            clarity_contrast = rms_contrast(
                Frame(np.clip(field, 0.0, 1.0)), CLARITY_ROI)

        field = field * np.where(_SECTOR_MASK, gain_map, 1.0)
        if params.noise_amplitude > 0:
            speckle = 1.0 + params.noise_amplitude * rng.uniform(-1.0, 1.0, field.shape)
            field = np.where(_SECTOR_MASK, field * speckle, field)

        frames.append(Frame(np.clip(field, 0.0, 1.0), origin="phantom"))

    track = ApexTrack(apex_positions=apex_positions, ed_index=ED_FRAME,
                      es_index=ES_FRAME, frame_height=FRAME_SIZE)
    build = _ClipBuild(frames=frames, apex_track=track, clarity_contrast=clarity_contrast)
    labels, levels = label_clip(build, params)
    return CineClip(clip_id=clip_id, view=params.view, frames=frames, labels=labels,
                    apex_track=track, params=params, levels=levels)


def _level_from_band(band: str) -> str:
    """Clinical band to rubric column; 'unsuitable' collapses onto poor."""
    return {"unsuitable": "poor", "poor": "poor",
            "average": "average", "optimum": "optimum"}[band]


def label_clip(build: _ClipBuild, params: PhantomParams) -> tuple[AttributeScores, dict[str, str]]:
    """Score each rubric criterion from the generating parameters and the
    measured clip, then compose the per-attribute raw scores."""
    rot = abs(params.axis_rotation_deg)
    if rot <= ROTATION_AVERAGE_DEG:
        onaxis = "optimum"
    elif rot <= ROTATION_POOR_DEG:
        onaxis = "average"
    else:
        onaxis = "poor"

    clinical = contrast_to_clinical(build.clarity_contrast)
    clarity = _level_from_band(quality_band(clinical))

    gain = abs(params.gain_gradient)
    if gain <= GAIN_AVERAGE:
        depth = "optimum"
    elif gain <= GAIN_POOR:
        depth = "average"
    else:
        depth = "poor"

    severity = foreshortening_severity(foreshortening_index(build.apex_track))
    foreshorten = {"zero": "optimum", "mild": "average", "severe": "poor"}[severity]

    levels = {"OnAxis": onaxis, "LVClarity": clarity,
              "DepthGain": depth, "Foreshorten": foreshorten}
    raw = {attr: composite_score(attr, column_scores(attr, level))
           for attr, level in levels.items()}
    return AttributeScores.from_raw(raw), levels


def _stratified_levels(count: int, mix: dict[str, float], rng) -> list[str]:
    """A shuffled level list honoring ``mix`` proportions by largest remainder."""
    total = sum(mix.values())
    if abs(total - 1.0) > 1e-9:
        raise ConfigurationError(f"level mix must sum to 1, got {total}")
    if set(mix) - {"poor", "average", "optimum"}:
        raise ConfigurationError(f"unknown levels in mix: {sorted(mix)}")
    exact = {lvl: count * p for lvl, p in mix.items()}
    counts = {lvl: int(np.floor(v)) for lvl, v in exact.items()}
    short = count - sum(counts.values())
    for lvl in sorted(mix, key=lambda l: exact[l] - counts[l], reverse=True)[:short]:
        counts[lvl] += 1
    levels = [lvl for lvl in ("poor", "average", "optimum") for _ in range(counts[lvl])]
    rng.shuffle(levels)
    return levels


# per-level sampling ranges for each degradation knob
_ROTATION_RANGES = {"optimum": (0.0, 3.5), "average": (8.0, 13.0), "poor": (18.0, 28.0)}
_CONTRAST_RANGES = {"optimum": (0.72, 0.88), "average": (0.34, 0.50), "poor": (0.06, 0.20)}
_CONTRAST_OVER_RANGE = (0.97, 1.0)   # over-contrast draw, also an average label
_GAIN_RANGES = {"optimum": (0.0, 0.08), "average": (0.30, 0.45), "poor": (0.65, 1.0)}
_FORESHORTEN_BY_LEVEL = {"optimum": "zero", "average": "mild", "poor": "severe"}

UNIFORM_MIX = {"poor": 1 / 3, "average": 1 / 3, "optimum": 1 / 3}


def sample_params(seed: int, levels: dict[str, str], view: str,
                  rng: np.random.Generator) -> PhantomParams:
    """Draw degradation knobs that land each attribute at its target level."""
    lo, hi = _ROTATION_RANGES[levels["OnAxis"]]
    rotation = rng.uniform(lo, hi) * (1 if rng.random() < 0.5 else -1)

    if levels["LVClarity"] == "average" and rng.random() < 0.25:
        lo, hi = _CONTRAST_OVER_RANGE   # excessive contrast also scores average
    else:
        lo, hi = _CONTRAST_RANGES[levels["LVClarity"]]
    contrast = rng.uniform(lo, hi)

    lo, hi = _GAIN_RANGES[levels["DepthGain"]]
    gain = rng.uniform(lo, hi) * (1 if rng.random() < 0.5 else -1)

    return PhantomParams(
        seed=seed,
        contrast_level=contrast,
        gain_gradient=gain,
        axis_rotation_deg=rotation,
        foreshorten_level=_FORESHORTEN_BY_LEVEL[levels["Foreshorten"]],
        noise_amplitude=rng.uniform(0.01, 0.06),
        view=view,
    )


def generate_dataset(count: int, seed: int,
                     mix: dict[str, float] | None = None) -> list[CineClip]:
    """Deterministic clip set with stratified level coverage per attribute."""
    if count < 5:
        raise ConfigurationError(f"need at least 5 clips for a 60:20:20 split, got {count}")
    mix = dict(mix) if mix is not None else dict(UNIFORM_MIX)
    rng = np.random.Generator(np.random.PCG64(seed))
    per_attr = {attr: _stratified_levels(count, mix, rng) for attr in ATTRIBUTES}

    clips = []
    for i in range(count):
        levels = {attr: per_attr[attr][i] for attr in ATTRIBUTES}
        view = "A4C" if rng.random() < 0.5 else "A2C"
        clip_seed = int(np.random.SeedSequence([seed, i]).generate_state(1)[0])
        params = sample_params(clip_seed, levels, view, rng)
        clips.append(generate_clip(params, clip_id=f"clip{i:04d}"))
    return clips
