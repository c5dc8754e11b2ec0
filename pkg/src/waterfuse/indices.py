"""Normalized-difference spectral indices and the 3-D feature space.

All three indices are ratios of a band difference to the band sum, so
they are invariant to uniform scaling (no radiometric calibration is
needed) and lie in [-1, 1] for non-negative inputs. A zero denominator
yields 0, the neutral value.

The classifier works in the space [ndvi, ndwi, re_ndwi]. NDWI here uses
the green and NIR bands (no SWIR available on 5-band sensors), with NIR
first, and RE_NDWI contrasts green against red-edge to pull water apart
from built-up surfaces.
"""

from __future__ import annotations

import numpy as np

from .raster import MultiBandRaster

FEATURE_NAMES = ("ndvi", "ndwi", "re_ndwi")


def _normalized_difference(a: float, b: float) -> float:
    if a < 0.0 or b < 0.0:
        raise ValueError(f"reflectance must be non-negative, got ({a}, {b})")
    total = a + b
    if total == 0.0:
        return 0.0
    return (a - b) / total


def ndvi(nir: float, red: float) -> float:
    """(NIR - RED) / (NIR + RED)."""
    return _normalized_difference(nir, red)


def ndwi(nir: float, green: float) -> float:
    """(NIR - GREEN) / (NIR + GREEN)."""
    return _normalized_difference(nir, green)


def re_ndwi(green: float, rededge: float) -> float:
    """(GREEN - RE) / (GREEN + RE)."""
    return _normalized_difference(green, rededge)


def _normalized_difference_grid(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.min() < 0.0 or b.min() < 0.0:
        raise ValueError("reflectance must be non-negative")
    total = a + b
    diff = a - b
    return np.divide(diff, total, out=np.zeros_like(diff), where=total != 0.0)


def feature_grid(raster: MultiBandRaster) -> np.ndarray:
    """Per-pixel (ndvi, ndwi, re_ndwi) feature array of shape (h, w, 3)."""
    green = raster.band("green")
    red = raster.band("red")
    rededge = raster.band("rededge")
    nir = raster.band("nir")
    return np.stack(
        [
            _normalized_difference_grid(nir, red),
            _normalized_difference_grid(nir, green),
            _normalized_difference_grid(green, rededge),
        ],
        axis=2,
    )
