"""Manual scoring rubric: criterion tables, composite scores, quality bands.

The criterion table ships as a versioned JSON config (``rubric_table.json``)
so clinical teams can amend criteria without touching code. Raw composite
scores live on a 0-9 scale and normalize to [0, 1] by dividing by 9.

Band boundaries follow the dataset-labeling convention (unsuitable below
4.4, poor up to 4.5, average up to 6.9, optimum above), while criterion
ceilings cap raw scores at 9.0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

from .errors import ConfigurationError, DataError

ATTRIBUTES = ("OnAxis", "LVClarity", "DepthGain", "Foreshorten")
LEVELS = ("poor", "average", "optimum")
MAX_RAW_SCORE = 9.0
RUBRIC_VERSION = 1

BAND_UNSUITABLE = "unsuitable"
BAND_POOR = "poor"
BAND_AVERAGE = "average"
BAND_OPTIMUM = "optimum"


def load_rubric(path=None) -> dict:
    """Load the rubric config, defaulting to the packaged table."""
    if path is None:
        text = resources.files("echoqc").joinpath("rubric_table.json").read_text()
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    table = json.loads(text)
    if table.get("version") != RUBRIC_VERSION:
        raise DataError(f"unsupported rubric version {table.get('version')!r}")
    missing = set(ATTRIBUTES) - set(table.get("attributes", {}))
    if missing:
        raise DataError(f"rubric table missing attributes: {sorted(missing)}")
    return table


_RUBRIC = load_rubric()


def criteria_for(attribute: str, table: dict | None = None) -> dict[str, dict[str, float]]:
    table = table or _RUBRIC
    try:
        return table["attributes"][attribute]
    except KeyError:
        raise ConfigurationError(f"unknown attribute {attribute!r}") from None


def criterion_ceiling(attribute: str, criterion: str, table: dict | None = None) -> float:
    crits = criteria_for(attribute, table)
    if criterion not in crits:
        raise ConfigurationError(f"unknown criterion {criterion!r} for {attribute}")
    return crits[criterion]["optimum"]


@dataclass
class CriterionScore:
    attribute: str
    criterion: str
    value: float

    def __post_init__(self):
        ceiling = criterion_ceiling(self.attribute, self.criterion)
        if not 0.0 <= self.value <= ceiling:
            raise ConfigurationError(
                f"{self.criterion!r} value {self.value} outside [0, {ceiling}]")


def composite_score(attribute: str, criteria: list[CriterionScore],
                    table: dict | None = None) -> float:
    """Sum the attribute's criterion values (capped at 9.0). The criterion
    set must match the rubric row names exactly."""
    expected = set(criteria_for(attribute, table))
    names = [c.criterion for c in criteria]
    if len(names) != len(set(names)):
        raise ConfigurationError(f"duplicate criteria in {names}")
    got = set(names)
    if got != expected:
        raise ConfigurationError(
            f"criteria for {attribute} must be exactly {sorted(expected)}, got {sorted(got)}")
    for c in criteria:
        if c.attribute != attribute:
            raise ConfigurationError(
                f"criterion {c.criterion!r} tagged {c.attribute}, expected {attribute}")
    return min(sum(c.value for c in criteria), MAX_RAW_SCORE)


def column_scores(attribute: str, level: str, table: dict | None = None) -> list[CriterionScore]:
    """All of an attribute's criteria at one quality column (poor/average/optimum)."""
    if level not in LEVELS:
        raise ConfigurationError(f"unknown quality level {level!r}")
    return [CriterionScore(attribute, name, cols[level])
            for name, cols in criteria_for(attribute, table).items()]


def normalize_score(raw: float) -> float:
    if not 0.0 <= raw <= MAX_RAW_SCORE:
        raise ConfigurationError(f"raw score {raw} outside [0, {MAX_RAW_SCORE}]")
    return raw / MAX_RAW_SCORE


def quality_band(raw: float, table: dict | None = None) -> str:
    """Band a raw 0-9 score: scores below 4.4 are clinically unsuitable."""
    if raw < 0:
        raise ConfigurationError(f"raw score must be nonnegative, got {raw}")
    bands = (table or _RUBRIC)["bands"]
    if raw < bands["unsuitable_below"]:
        return BAND_UNSUITABLE
    if raw <= bands["poor_max"]:
        return BAND_POOR
    if raw <= bands["average_max"]:
        return BAND_AVERAGE
    return BAND_OPTIMUM


@dataclass
class AttributeScore:
    raw: float
    normalized: float
    band: str

    @classmethod
    def from_raw(cls, raw: float) -> "AttributeScore":
        return cls(raw=raw, normalized=normalize_score(raw), band=quality_band(raw))

    @classmethod
    def from_normalized(cls, normalized: float) -> "AttributeScore":
        if not 0.0 <= normalized <= 1.0:
            raise ConfigurationError(f"normalized score {normalized} outside [0, 1]")
        raw = normalized * MAX_RAW_SCORE
        return cls(raw=raw, normalized=normalized, band=quality_band(raw))


@dataclass
class AttributeScores:
    """The four per-attribute scores for one clip."""

    scores: dict[str, AttributeScore]

    def __post_init__(self):
        if set(self.scores) != set(ATTRIBUTES):
            raise ConfigurationError(
                f"scores must cover exactly {ATTRIBUTES}, got {sorted(self.scores)}")

    @classmethod
    def from_raw(cls, raw: dict[str, float]) -> "AttributeScores":
        return cls({a: AttributeScore.from_raw(v) for a, v in raw.items()})

    @classmethod
    def from_normalized(cls, norm: dict[str, float]) -> "AttributeScores":
        return cls({a: AttributeScore.from_normalized(v) for a, v in norm.items()})

    def raw_vector(self) -> dict[str, float]:
        return {a: self.scores[a].raw for a in ATTRIBUTES}

    def normalized_vector(self) -> dict[str, float]:
        return {a: self.scores[a].normalized for a in ATTRIBUTES}


def contrast_to_clinical(raw_contrast: float, table: dict | None = None) -> float:
    """Map a raw RMS contrast onto the clinical 0-9 scale.

    The map rises linearly from 0 through the poor-contrast anchor (4.5) to
    the optimum anchor (9.0), then falls toward the over-contrast anchor
    (6.0) and stays there: excessive contrast is penalized, not rewarded.
    Anchor contrast values are calibrated against the phantom generator and
    stored in the rubric config.
    """
    if raw_contrast < 0:
        raise ConfigurationError(f"contrast must be nonnegative, got {raw_contrast}")
    anchors = (table or _RUBRIC)["contrast_anchors"]
    c_poor = anchors["poor_contrast"]
    c_opt = anchors["optimum_contrast"]
    c_over = anchors["over_contrast"]
    if raw_contrast <= c_poor:
        return 4.5 * raw_contrast / c_poor
    if raw_contrast <= c_opt:
        return 4.5 + (9.0 - 4.5) * (raw_contrast - c_poor) / (c_opt - c_poor)
    if raw_contrast <= c_over:
        return 9.0 - (9.0 - 6.0) * (raw_contrast - c_opt) / (c_over - c_opt)
    return 6.0
