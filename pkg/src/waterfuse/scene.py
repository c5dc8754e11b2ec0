"""Synthetic multi-spectral scenes with ground truth.

Scenes hold a meandering river plus thin tributaries (water), a
vegetation background, and cloud/shadow discs as confusers. Per-material
band statistics are chosen so that the NIR histogram is bimodal with the
confusers sitting between the modes, and so that confuser index-space
signatures fall on a class's side of feature space without belonging to
its cluster: exactly the regime the evidential pipeline is built to push
into the ignorance label.

Everything is a pure function of the spec (bitwise reproducible for a
fixed seed).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .raster import IGNORANCE, WATER, ClassMap, MultiBandRaster, PIPELINE_BANDS

TRUTH_WATER, TRUTH_LAND, TRUTH_CONFUSER = 0, 1, 2
TRUTH_NAMES = ("water", "land", "confuser")
TRUTH_PGM_VALUES = (0, 128, 255)

# (mean, std) per band, in RapidEye-scale digital numbers. Water is darkest
# in NIR, vegetation brightest, confusers in between (the valley region).
# Cloud and shadow index signatures sit off the water-vegetation axis, one
# per side, so each class's D' normalizer is stretched well past its own
# cluster spread.
DEFAULT_PROFILES: dict[str, dict[str, tuple[float, float]]] = {
    "water": {
        "blue": (5000.0, 150.0),
        "green": (4500.0, 150.0),
        "red": (3500.0, 150.0),
        "rededge": (3200.0, 150.0),
        "nir": (2800.0, 200.0),
    },
    "vegetation": {
        "blue": (3500.0, 200.0),
        "green": (4800.0, 220.0),
        "red": (3000.0, 200.0),
        "rededge": (6500.0, 300.0),
        "nir": (9000.0, 250.0),
    },
    "cloud": {
        "blue": (7500.0, 300.0),
        "green": (7980.0, 300.0),
        "red": (7211.0, 300.0),
        "rededge": (13300.0, 400.0),
        "nir": (5900.0, 180.0),
    },
    "shadow": {
        "blue": (3000.0, 250.0),
        "green": (2744.0, 220.0),
        "red": (4856.0, 250.0),
        "rededge": (7234.0, 300.0),
        "nir": (5700.0, 180.0),
    },
}

_MATERIALS = ("water", "vegetation", "cloud", "shadow")


@dataclass(frozen=True)
class SceneSpec:
    """Geometry, materials, and randomness of a synthetic scene.

    `noise_std` scales every profile standard deviation (0 gives a
    noise-free scene of exact material means). `river_points` defaults to
    a meander spanning the full width.
    """

    width: int = 512
    height: int = 512
    seed: int = 42
    river_points: tuple[tuple[float, float], ...] | None = None
    river_width: float = 12.0
    n_streams: int = 3
    cloud_patches: int = 6
    cloud_radius: tuple[float, float] = (16.0, 32.0)
    profiles: dict[str, dict[str, tuple[float, float]]] = field(
        default_factory=lambda: DEFAULT_PROFILES
    )
    noise_std: float = 1.0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("scene dimensions must be positive")
        if self.river_width <= 0.0:
            raise ValueError("river width must be positive")
        if self.cloud_radius[0] > self.cloud_radius[1] or self.cloud_radius[0] <= 0.0:
            raise ValueError("cloud radius range must be positive and ordered")
        if self.noise_std < 0.0:
            raise ValueError("noise_std must be non-negative")
        if self.n_streams < 0 or self.cloud_patches < 0:
            raise ValueError("n_streams and cloud_patches must be non-negative")
        missing = [m for m in _MATERIALS if m not in self.profiles]
        if missing:
            raise ValueError(f"profiles missing materials: {missing}")
        for material, bands in self.profiles.items():
            for band in PIPELINE_BANDS:
                if band not in bands:
                    raise ValueError(f"profile {material!r} missing band {band!r}")
        # the NIR ordering is what makes the scene detectable: water darkest,
        # vegetation brightest, confusers in the valley between the modes
        water_nir = self.profiles["water"]["nir"][0]
        veg_nir = self.profiles["vegetation"]["nir"][0]
        if water_nir >= veg_nir:
            raise ValueError("water NIR mean must be below vegetation NIR mean")
        for confuser in ("cloud", "shadow"):
            nir = self.profiles[confuser]["nir"][0]
            if not water_nir < nir < veg_nir:
                raise ValueError(
                    f"{confuser} NIR mean must lie between water and vegetation"
                )
        if self.river_points is None:
            w, h = self.width, self.height
            points = (
                (0.0, 0.18 * h),
                (0.25 * w, 0.32 * h),
                (0.48 * w, 0.24 * h),
                (0.72 * w, 0.52 * h),
                (w - 1.0, 0.60 * h),
            )
            object.__setattr__(self, "river_points", points)
        else:
            object.__setattr__(self, "river_points", tuple(map(tuple, self.river_points)))


def _segment_distance(
    px: np.ndarray, py: np.ndarray, a: tuple[float, float], b: tuple[float, float]
) -> np.ndarray:
    ax, ay = a
    bx, by = b
    dx, dy = bx - ax, by - ay
    length_sq = dx * dx + dy * dy
    if length_sq == 0.0:
        return np.hypot(px - ax, py - ay)
    t = np.clip(((px - ax) * dx + (py - ay) * dy) / length_sq, 0.0, 1.0)
    return np.hypot(px - (ax + t * dx), py - (ay + t * dy))


def _polyline_mask(
    shape: tuple[int, int], points: tuple[tuple[float, float], ...], width: float
) -> np.ndarray:
    h, w = shape
    py, px = np.mgrid[0:h, 0:w].astype(np.float64)
    distance = np.full(shape, np.inf)
    for a, b in zip(points[:-1], points[1:]):
        np.minimum(distance, _segment_distance(px, py, a, b), out=distance)
    return distance <= width / 2.0


def _disc_mask(shape: tuple[int, int], center: tuple[float, float], radius: float) -> np.ndarray:
    h, w = shape
    py, px = np.mgrid[0:h, 0:w].astype(np.float64)
    return np.hypot(px - center[0], py - center[1]) <= radius


def _stream_points(
    rng: np.random.Generator, spec: SceneSpec
) -> tuple[tuple[float, float], ...]:
    """Short jittered walk branching off a random river vertex."""
    anchors = spec.river_points[1:-1] or spec.river_points
    start = anchors[rng.integers(0, len(anchors))]
    heading = rng.uniform(0.0, 2.0 * np.pi)
    points = [start]
    x, y = start
    for _ in range(rng.integers(5, 9)):
        heading += rng.normal(0.0, 0.5)
        step = rng.uniform(18.0, 36.0)
        x += step * np.cos(heading)
        y += step * np.sin(heading)
        points.append((x, y))
    return tuple(points)


def generate(spec: SceneSpec) -> tuple[MultiBandRaster, np.ndarray]:
    """Rasterize the scene; returns the raster and the truth label grid.

    Painting order: vegetation background, river and streams as water,
    then cloud and shadow discs on top (confusers occlude water). River
    geometry reaching outside the grid is clipped with a warning.
    """
    shape = (spec.height, spec.width)
    rng = np.random.default_rng(spec.seed)

    out_of_bounds = any(
        not (0.0 <= x < spec.width and 0.0 <= y < spec.height) for x, y in spec.river_points
    )
    if out_of_bounds:
        warnings.warn("river control points reach outside the scene; clipping", stacklevel=2)

    material = np.full(shape, _MATERIALS.index("vegetation"), dtype=np.uint8)
    water_code = _MATERIALS.index("water")
    material[_polyline_mask(shape, spec.river_points, spec.river_width)] = water_code
    for _ in range(spec.n_streams):
        points = _stream_points(rng, spec)
        width = float(rng.integers(1, 3))
        material[_polyline_mask(shape, points, width)] = water_code

    cloud_code = _MATERIALS.index("cloud")
    shadow_code = _MATERIALS.index("shadow")
    for _ in range(spec.cloud_patches):
        radius = rng.uniform(*spec.cloud_radius)
        cx = rng.uniform(radius, spec.width - radius)
        cy = rng.uniform(radius, spec.height - radius)
        offset = radius * 0.9
        material[_disc_mask(shape, (cx + offset, cy + offset), radius * 0.8)] = shadow_code
        material[_disc_mask(shape, (cx, cy), radius)] = cloud_code

    bands = []
    for band_name in PIPELINE_BANDS:
        mean_map = np.zeros(shape)
        std_map = np.zeros(shape)
        for code, name in enumerate(_MATERIALS):
            mean, std = spec.profiles[name][band_name]
            mask = material == code
            mean_map[mask] = mean
            std_map[mask] = std
        values = mean_map + std_map * spec.noise_std * rng.standard_normal(shape)
        if band_name == "nir":
            # dark-water floor and bright-vegetation saturation: real sensors
            # bound both NIR extremes, and the mass normalizers anchor there
            w_mean, w_std = spec.profiles["water"]["nir"]
            v_mean, v_std = spec.profiles["vegetation"]["nir"]
            water_mask = material == water_code
            veg_mask = material == _MATERIALS.index("vegetation")
            values[water_mask] = np.maximum(
                values[water_mask], w_mean - 2.5 * w_std * spec.noise_std
            )
            values[veg_mask] = np.minimum(
                values[veg_mask], v_mean + 2.0 * v_std * spec.noise_std
            )
        bands.append((band_name, np.maximum(values, 0.0)))

    truth = np.full(shape, TRUTH_LAND, dtype=np.uint8)
    truth[material == water_code] = TRUTH_WATER
    truth[(material == cloud_code) | (material == shadow_code)] = TRUTH_CONFUSER
    return MultiBandRaster(bands), truth


@dataclass(frozen=True)
class ScoreReport:
    """Detection quality of a class map against generator truth.

    Ignorance is an abstention, not an error: pixels decided ignorance are
    excluded from the precision/recall accounting and reported on their
    own. Confuser capture is the fraction of confuser pixels kept out of
    the water class.
    """

    water_precision: float
    water_recall: float
    confuser_capture: float
    ignorance_fraction: float
    counts: dict

    def to_dict(self) -> dict:
        return {
            "water_precision": self.water_precision,
            "water_recall": self.water_recall,
            "confuser_capture": self.confuser_capture,
            "ignorance_fraction": self.ignorance_fraction,
            "counts": dict(self.counts),
        }


def score(predicted: ClassMap, truth: np.ndarray) -> ScoreReport:
    """Compare a predicted class map with the generator truth grid."""
    truth = np.asarray(truth)
    if truth.shape != predicted.labels.shape:
        raise ValueError(f"grids differ: predicted {predicted.labels.shape}, truth {truth.shape}")
    pred = predicted.labels
    true_positive = int(np.count_nonzero((pred == WATER) & (truth == TRUTH_WATER)))
    predicted_water = int(np.count_nonzero(pred == WATER))
    decided_truth_water = int(
        np.count_nonzero((truth == TRUTH_WATER) & (pred != IGNORANCE))
    )
    confusers = int(np.count_nonzero(truth == TRUTH_CONFUSER))
    captured = int(np.count_nonzero((truth == TRUTH_CONFUSER) & (pred != WATER)))
    ignorance = int(np.count_nonzero(pred == IGNORANCE))
    return ScoreReport(
        water_precision=true_positive / predicted_water if predicted_water else 0.0,
        water_recall=true_positive / decided_truth_water if decided_truth_water else 0.0,
        confuser_capture=captured / confusers if confusers else 1.0,
        ignorance_fraction=ignorance / pred.size,
        counts={
            "true_positive": true_positive,
            "predicted_water": predicted_water,
            "decided_truth_water": decided_truth_water,
            "truth_water": int(np.count_nonzero(truth == TRUTH_WATER)),
            "confusers": confusers,
            "confusers_captured": captured,
            "ignorance": ignorance,
            "pixels": int(pred.size),
        },
    )


def truth_to_pgm_values(truth: np.ndarray) -> np.ndarray:
    """Encode a truth grid as PGM gray levels (water 0, land 128, confuser 255)."""
    return np.asarray(TRUTH_PGM_VALUES, dtype=np.uint8)[np.asarray(truth)]


def truth_from_pgm_values(gray: np.ndarray) -> np.ndarray:
    """Inverse of :func:`truth_to_pgm_values`."""
    gray = np.asarray(gray)
    truth = np.full(gray.shape, 255, dtype=np.uint8)
    for code, value in enumerate(TRUTH_PGM_VALUES):
        truth[gray == value] = code
    if truth.max() > TRUTH_CONFUSER:
        raise ValueError("gray image contains values outside the truth encoding")
    return truth
