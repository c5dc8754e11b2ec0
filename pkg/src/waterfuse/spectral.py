"""NIR-threshold water model: valley detection and spectral mass.

Water absorbs strongly in the near infrared, so the NIR histogram of a
scene containing water is bimodal with the water mode at the low end. The
threshold is found automatically:

1. histogram the NIR band,
2. locate the first two local peaks (lowest DN order) on a smoothed copy,
3. least-squares fit a degree-5 polynomial to the histogram between them,
4. take the polynomial's minimum as the threshold t.

The per-pixel mass function is driven by the distance to t, normalized by
the distance from t to the band extremum on the pixel's side, saturated
through 1 - exp(-x) and rescaled by N = 1 - exp(-1) so the mass reaches
exactly 1 at the extremum and 0 at t. A neighborhood agreement ratio
gamma in (0, 1] shrinks the mass of pixels that disagree with their
spatial context.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .belief import Frame, MassFunction
from .errors import (
    DegenerateBandError,
    InsufficientSeparationError,
    UnimodalHistogramError,
)
from .raster import NONWATER, WATER

WATER_FRAME = Frame(("water", "non-water"))
MASK_WATER = 1
MASK_NONWATER = 2
MASK_OMEGA = WATER_FRAME.omega

BIG_N = 1.0 - math.exp(-1.0)

SMOOTH_WINDOW = 5
SMOOTH_PASSES = 2
MIN_PEAK_FRACTION = 0.01


@dataclass(frozen=True)
class Histogram:
    """Equal-width histogram: nbins+1 ascending edges, nbins counts."""

    bin_edges: np.ndarray
    counts: np.ndarray

    def __post_init__(self):
        edges = np.asarray(self.bin_edges, dtype=np.float64)
        counts = np.asarray(self.counts, dtype=np.int64)
        if edges.ndim != 1 or counts.ndim != 1 or edges.size != counts.size + 1:
            raise ValueError("need nbins+1 edges for nbins counts")
        if np.any(np.diff(edges) <= 0.0):
            raise ValueError("bin edges must be strictly increasing")
        if np.any(counts < 0):
            raise ValueError("counts must be non-negative")
        object.__setattr__(self, "bin_edges", edges)
        object.__setattr__(self, "counts", counts)

    @property
    def nbins(self) -> int:
        return self.counts.size

    @property
    def centers(self) -> np.ndarray:
        return (self.bin_edges[:-1] + self.bin_edges[1:]) / 2.0


@dataclass(frozen=True)
class SpectralModelParams:
    """Threshold, band extrema, and discount coefficients of the NIR model.

    d_water / d_nonwater normalize the distance-to-threshold on each side;
    the discounts start at 1 and are only lowered by the fusion stage.
    """

    t: float
    n_min: float
    n_max: float
    alpha_water: float = 1.0
    alpha_nonwater: float = 1.0

    def __post_init__(self):
        if not self.n_min < self.t < self.n_max:
            raise ValueError(
                f"threshold must lie strictly inside [{self.n_min}, {self.n_max}], got {self.t}"
            )
        for name in ("alpha_water", "alpha_nonwater"):
            alpha = getattr(self, name)
            if not 0.0 <= alpha <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {alpha}")

    @property
    def d_water(self) -> float:
        return self.t - self.n_min

    @property
    def d_nonwater(self) -> float:
        return self.n_max - self.t

    @property
    def big_n(self) -> float:
        return BIG_N

    def with_discounts(self, alpha_water: float, alpha_nonwater: float) -> "SpectralModelParams":
        return replace(self, alpha_water=alpha_water, alpha_nonwater=alpha_nonwater)


@dataclass(frozen=True)
class GammaConfig:
    """Square neighborhood (side `window_size`, center included) for gamma."""

    window_size: int = 3

    def __post_init__(self):
        if self.window_size < 1 or self.window_size % 2 == 0:
            raise ValueError(f"window_size must be odd and >= 1, got {self.window_size}")


def build_histogram(band: np.ndarray, nbins: int = 256) -> Histogram:
    """Equal-width histogram over [min, max]; the max lands in the last bin."""
    if nbins < 8:
        raise ValueError(f"nbins must be >= 8, got {nbins}")
    values = np.asarray(band, dtype=np.float64).ravel()
    if values.size == 0:
        raise ValueError("band is empty")
    lo = float(values.min())
    hi = float(values.max())
    if lo == hi:
        raise DegenerateBandError(f"band is constant at {lo}; no histogram spread")
    idx = np.floor((values - lo) / (hi - lo) * nbins).astype(np.int64)
    np.clip(idx, 0, nbins - 1, out=idx)
    counts = np.bincount(idx, minlength=nbins)
    edges = lo + np.arange(nbins + 1) * ((hi - lo) / nbins)
    edges[-1] = hi
    return Histogram(edges, counts)


def smooth_counts(
    counts: np.ndarray, window: int = SMOOTH_WINDOW, passes: int = SMOOTH_PASSES
) -> np.ndarray:
    """Centered moving average with the window clipped at the array ends."""
    out = np.asarray(counts, dtype=np.float64)
    half = window // 2
    n = out.size
    for _ in range(passes):
        csum = np.concatenate([[0.0], np.cumsum(out)])
        lo = np.maximum(np.arange(n) - half, 0)
        hi = np.minimum(np.arange(n) + half + 1, n)
        out = (csum[hi] - csum[lo]) / (hi - lo)
    return out


def _local_maxima(smoothed: np.ndarray, floor: float) -> list[int]:
    """Runs of equal value strictly above both adjacent runs, at their
    leftmost bin; runs touching the array boundary lack a neighbor and do
    not qualify; runs below `floor` are sampling noise."""
    maxima: list[int] = []
    n = smoothed.size
    i = 0
    while i < n:
        j = i
        while j + 1 < n and smoothed[j + 1] == smoothed[i]:
            j += 1
        if (
            i > 0
            and j < n - 1
            and smoothed[i] > smoothed[i - 1]
            and smoothed[i] > smoothed[j + 1]
            and smoothed[i] >= floor
        ):
            maxima.append(i)
        i = j + 1
    return maxima


def find_first_two_peaks(
    hist: Histogram,
    min_rel_height: float = MIN_PEAK_FRACTION,
    min_separation: int | None = None,
) -> tuple[int, int]:
    """The two lowest-index mode peaks of the smoothed histogram.

    Local maxima below `min_rel_height` of the smoothed global maximum are
    treated as sampling noise (stray counts in a sparse tail), and the
    second peak must sit at least `min_separation` bins past the first so
    that micro-wiggles on a single flat mode top do not read as two modes.
    The separation defaults to nbins // 16 (floor 2), far below any
    genuine bimodal gap at the resolutions this pipeline uses.
    """
    smoothed = smooth_counts(hist.counts)
    if min_separation is None:
        min_separation = max(2, hist.nbins // 16)
    maxima = _local_maxima(smoothed, min_rel_height * float(smoothed.max()))
    if maxima:
        p1 = maxima[0]
        p2 = next((m for m in maxima[1:] if m - p1 >= min_separation), None)
        if p2 is not None:
            return p1, p2
    raise UnimodalHistogramError(
        f"found {len(maxima)} separated peak(s); water/non-water separation needs two"
    )


def _fit_quintic(xs: np.ndarray, ys: np.ndarray) -> np.polynomial.Polynomial:
    # fit on the window [-1, 1]: raw DN values raised to the 5th power
    # would wreck the conditioning of the design matrix
    return np.polynomial.Polynomial.fit(xs, ys, deg=5)


def fit_poly5(xs: Sequence[float], ys: Sequence[float]) -> np.ndarray:
    """Degree-5 least-squares fit; coefficients c0..c5 in the input basis."""
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    if xs.shape != ys.shape or xs.ndim != 1:
        raise ValueError("xs and ys must be 1-D arrays of equal length")
    if xs.size < 6:
        raise ValueError(f"degree-5 fit needs at least 6 points, got {xs.size}")
    if float(xs.max()) == float(xs.min()):
        raise ValueError("xs must span a non-empty interval")
    coef = _fit_quintic(xs, ys).convert().coef
    out = np.zeros(6)
    out[: coef.size] = coef
    return out


def _golden_minimize(f, a: float, b: float, tol: float) -> float:
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - inv_phi * (b - a)
    x2 = a + inv_phi * (b - a)
    f1, f2 = f(x1), f(x2)
    while b - a > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - inv_phi * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + inv_phi * (b - a)
            f2 = f(x2)
    return (a + b) / 2.0


@dataclass(frozen=True)
class ThresholdAnalysis:
    """Everything the threshold search produced, for reports and plots."""

    histogram: Histogram
    smoothed: np.ndarray
    peak_bins: tuple[int, int]
    poly: np.polynomial.Polynomial
    params: SpectralModelParams


def analyze_threshold(
    band: np.ndarray, nbins: int = 256, min_rel_height: float = MIN_PEAK_FRACTION
) -> ThresholdAnalysis:
    """Run the four-step threshold search and keep the intermediates."""
    band = np.asarray(band, dtype=np.float64)
    hist = build_histogram(band, nbins)
    p1, p2 = find_first_two_peaks(hist, min_rel_height)
    centers = hist.centers
    sample = np.arange(p1 + 1, p2)
    if sample.size < 7:
        sample = np.arange(p1, p2 + 1)
    if sample.size < 7:
        raise InsufficientSeparationError(
            f"only {sample.size} bins between peaks {p1} and {p2}; need 7 to fit the valley"
        )
    poly = _fit_quintic(centers[sample], hist.counts[sample].astype(np.float64))
    lo, hi = float(centers[p1]), float(centers[p2])
    grid = np.linspace(lo, hi, 1024)
    best = int(np.argmin(poly(grid)))
    a = grid[max(best - 1, 0)]
    b = grid[min(best + 1, grid.size - 1)]
    t = _golden_minimize(poly, a, b, 1e-6 * (hi - lo))
    params = SpectralModelParams(t=t, n_min=float(band.min()), n_max=float(band.max()))
    return ThresholdAnalysis(hist, smooth_counts(hist.counts), (p1, p2), poly, params)


def find_threshold(band: np.ndarray, nbins: int = 256) -> SpectralModelParams:
    """Automatic NIR threshold; see module docstring for the procedure."""
    return analyze_threshold(band, nbins).params


def spectral_label(n_x: float, params: SpectralModelParams) -> int:
    """WATER iff the NIR value is at or below the threshold."""
    return WATER if n_x <= params.t else NONWATER


def spectral_label_grid(band: np.ndarray, params: SpectralModelParams) -> np.ndarray:
    return np.where(np.asarray(band) <= params.t, WATER, NONWATER).astype(np.uint8)


def gamma_coefficient(
    labels: np.ndarray, pixel: tuple[int, int], cfg: GammaConfig = GammaConfig()
) -> float:
    """Fraction of the window (clipped at image bounds, center included)
    sharing the center pixel's label. Always in (0, 1]."""
    labels = np.asarray(labels)
    row, col = pixel
    half = cfg.window_size // 2
    window = labels[
        max(row - half, 0) : min(row + half + 1, labels.shape[0]),
        max(col - half, 0) : min(col + half + 1, labels.shape[1]),
    ]
    return float(np.count_nonzero(window == labels[row, col])) / window.size


def _box_sum(values: np.ndarray, window: int) -> np.ndarray:
    """Sum of `values` over a centered window clipped at the bounds."""
    half = window // 2
    h, w = values.shape
    integral = np.zeros((h + 1, w + 1))
    np.cumsum(np.cumsum(values, axis=0), axis=1, out=integral[1:, 1:])
    rows = np.arange(h)
    cols = np.arange(w)
    r0 = np.maximum(rows - half, 0)
    r1 = np.minimum(rows + half + 1, h)
    c0 = np.maximum(cols - half, 0)
    c1 = np.minimum(cols + half + 1, w)
    return (
        integral[np.ix_(r1, c1)]
        - integral[np.ix_(r0, c1)]
        - integral[np.ix_(r1, c0)]
        + integral[np.ix_(r0, c0)]
    )


def gamma_grid(labels: np.ndarray, cfg: GammaConfig = GammaConfig()) -> np.ndarray:
    """Vectorized :func:`gamma_coefficient` over the whole label grid."""
    labels = np.asarray(labels)
    water = (labels == WATER).astype(np.float64)
    water_count = _box_sum(water, cfg.window_size)
    total = _box_sum(np.ones_like(water), cfg.window_size)
    same = np.where(labels == WATER, water_count, total - water_count)
    return same / total


def spectral_mass(
    n_x: float, params: SpectralModelParams, gamma: float = 1.0
) -> MassFunction:
    """Mass function of one pixel under the NIR-threshold model.

    Only the singleton on the pixel's side of the threshold receives mass;
    the remainder goes to the full frame. NIR values outside the band
    extrema are clamped.
    """
    if not 0.0 < gamma <= 1.0:
        raise ValueError(f"gamma must be in (0, 1], got {gamma}")
    n_x = min(max(float(n_x), params.n_min), params.n_max)
    if n_x <= params.t:
        m_water = (params.alpha_water / BIG_N) * (
            1.0 - math.exp(-gamma * (params.t - n_x) / params.d_water)
        )
        m_nonwater = 0.0
    else:
        m_water = 0.0
        m_nonwater = (params.alpha_nonwater / BIG_N) * (
            1.0 - math.exp(-gamma * (n_x - params.t) / params.d_nonwater)
        )
    return MassFunction(
        WATER_FRAME,
        {
            MASK_WATER: m_water,
            MASK_NONWATER: m_nonwater,
            MASK_OMEGA: 1.0 - m_water - m_nonwater,
        },
    )


def spectral_mass_grid(
    band: np.ndarray,
    params: SpectralModelParams,
    gamma: np.ndarray,
    alpha_water: np.ndarray | float | None = None,
    alpha_nonwater: np.ndarray | float | None = None,
) -> np.ndarray:
    """Vectorized :func:`spectral_mass` -> (h, w, 3) triples (water, non-water, omega).

    `alpha_water` / `alpha_nonwater` default to the values stored in
    `params`; passing per-pixel arrays lets the fusion stage rebuild the
    masses with pixel-wise discounts.
    """
    band = np.clip(np.asarray(band, dtype=np.float64), params.n_min, params.n_max)
    gamma = np.asarray(gamma, dtype=np.float64)
    if alpha_water is None:
        alpha_water = params.alpha_water
    if alpha_nonwater is None:
        alpha_nonwater = params.alpha_nonwater
    water_side = band <= params.t
    m_water = np.where(
        water_side,
        (alpha_water / BIG_N) * (1.0 - np.exp(-gamma * (params.t - band) / params.d_water)),
        0.0,
    )
    m_nonwater = np.where(
        water_side,
        0.0,
        (alpha_nonwater / BIG_N)
        * (1.0 - np.exp(-gamma * (band - params.t) / params.d_nonwater)),
    )
    return np.stack([m_water, m_nonwater, 1.0 - m_water - m_nonwater], axis=2)
