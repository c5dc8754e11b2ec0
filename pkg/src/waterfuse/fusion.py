"""Fusion of the two water models and the end-to-end detector.

The NIR-threshold model and the self-trained classifier are dependent
(one trains the other), so they are combined with the idempotent average
rule rather than a conjunctive rule. Before fusion, the threshold model
is penalized where it disagrees with the classifier: its per-pixel mass
is rebuilt with a discount read off the confusion matrix (classifier
taken as reference), while agreeing pixels keep their full mass.

Decisions use the cardinality-weighted pignistic rule, which can return
the whole frame: those pixels are labeled ignorance.

`WaterDetector` wraps the nine pipeline stages behind a fit/predict
estimator interface:

1. find the NIR threshold,
2. spectral labels, neighborhood gamma, and masses at full weight,
3. harvest high-mass pixels as training data,
4. train the classifier and predict every pixel,
5. classifier masses,
6. confusion matrix, discounts, rebuild of disagreeing spectral masses,
7. average-rule fusion,
8. pignistic probabilities,
9. cardinality-weighted decision.
"""

from __future__ import annotations

from contextlib import contextmanager
from dataclasses import asdict, dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .belief import DecisionParams, MassFunction, appriou_decide, combine_average
from .errors import PipelineError, WaterfuseError
from .indices import feature_grid
from .raster import IGNORANCE, NONWATER, PIPELINE_BANDS, WATER, ClassMap, MultiBandRaster
from .spectral import (
    GammaConfig,
    MASK_NONWATER,
    MASK_OMEGA,
    MASK_WATER,
    SpectralModelParams,
    analyze_threshold,
    gamma_grid,
    spectral_label_grid,
    spectral_mass_grid,
)
from .supervised import (
    DEFAULT_ALPHA,
    harvest_training_samples,
    supervised_mass_grid,
    train,
)


@dataclass(frozen=True)
class ConfusionMatrix:
    """2x2 label-pair counts indexed [spectral label][classifier label]."""

    counts: np.ndarray

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        if counts.shape != (2, 2) or np.any(counts < 0):
            raise ValueError("confusion matrix must be 2x2 non-negative counts")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def to_dict(self) -> dict:
        return {
            "spectral_water_supervised_water": int(self.counts[WATER][WATER]),
            "spectral_water_supervised_nonwater": int(self.counts[WATER][NONWATER]),
            "spectral_nonwater_supervised_water": int(self.counts[NONWATER][WATER]),
            "spectral_nonwater_supervised_nonwater": int(self.counts[NONWATER][NONWATER]),
        }


def confusion(spectral_labels: np.ndarray, supervised_labels: np.ndarray) -> ConfusionMatrix:
    """Count label pairs between the two models."""
    spectral_labels = np.asarray(spectral_labels)
    supervised_labels = np.asarray(supervised_labels)
    if spectral_labels.shape != supervised_labels.shape:
        raise ValueError(
            f"label grids differ: {spectral_labels.shape} vs {supervised_labels.shape}"
        )
    counts = np.zeros((2, 2), dtype=np.int64)
    for theta in (WATER, NONWATER):
        for vartheta in (WATER, NONWATER):
            counts[theta][vartheta] = np.count_nonzero(
                (spectral_labels == theta) & (supervised_labels == vartheta)
            )
    return ConfusionMatrix(counts)


def discount_coefficients(cm: ConfusionMatrix) -> tuple[float, float]:
    """Per-class discounts for the threshold model, classifier as reference.

    alpha_water is the probability of a spectral water label among pixels
    the classifier calls non-water, and symmetrically for alpha_nonwater.
    An empty reference column yields 0 (total discount under absent
    evidence).
    """
    c = cm.counts
    nonwater_col = int(c[WATER][NONWATER] + c[NONWATER][NONWATER])
    water_col = int(c[WATER][WATER] + c[NONWATER][WATER])
    alpha_water = c[WATER][NONWATER] / nonwater_col if nonwater_col else 0.0
    alpha_nonwater = c[NONWATER][WATER] / water_col if water_col else 0.0
    return float(alpha_water), float(alpha_nonwater)


def apply_discounts(
    nir_band: np.ndarray,
    gamma: np.ndarray,
    params: SpectralModelParams,
    spectral_labels: np.ndarray,
    supervised_labels: np.ndarray,
    alpha_water: float,
    alpha_nonwater: float,
) -> np.ndarray:
    """Rebuild the threshold-model masses with per-pixel discounts.

    Pixels where the two models agree keep an effective discount of 1;
    disagreeing pixels get the class discount. Rebuilding from the stored
    NIR value and gamma keeps the mass formula exact instead of scaling a
    previously rounded value.
    """
    agree = np.asarray(spectral_labels) == np.asarray(supervised_labels)
    return spectral_mass_grid(
        nir_band,
        params,
        gamma,
        alpha_water=np.where(agree, 1.0, alpha_water),
        alpha_nonwater=np.where(agree, 1.0, alpha_nonwater),
    )


def fuse_pixel(m1: MassFunction, m2: MassFunction) -> MassFunction:
    """Average-rule combination of the two models at one pixel."""
    return combine_average([m1, m2])


def fuse_grids(m1_grid: np.ndarray, m2_grid: np.ndarray) -> np.ndarray:
    """Per-subset mean of two (h, w, 3) mass grids."""
    if m1_grid.shape != m2_grid.shape:
        raise ValueError(f"mass grids differ: {m1_grid.shape} vs {m2_grid.shape}")
    return (m1_grid + m2_grid) / 2.0


def decide_pixel(m: MassFunction, params: DecisionParams = DecisionParams()) -> int:
    """Map the decided subset to a class-map label."""
    subset = appriou_decide(m, params)
    return {MASK_WATER: WATER, MASK_NONWATER: NONWATER, MASK_OMEGA: IGNORANCE}[subset]


def decide_grid(
    mass_grid: np.ndarray, params: DecisionParams = DecisionParams()
) -> np.ndarray:
    """Vectorized :func:`decide_pixel` over a (h, w, 3) mass grid.

    Mirrors the scalar rule arithmetic term for term (same products, same
    addition order) so grid decisions agree exactly with per-pixel calls.
    """
    m_water = mass_grid[:, :, 0]
    m_nonwater = mass_grid[:, :, 1]
    m_omega = mass_grid[:, :, 2]
    w_water = params.k_d * params.lam_of(MASK_WATER) / 1**params.r
    w_nonwater = params.k_d * params.lam_of(MASK_NONWATER) / 1**params.r
    w_omega = params.k_d * params.lam_of(MASK_OMEGA) / 2**params.r
    score_water = w_water * (m_water * 1.0 + m_omega * 0.5)
    score_nonwater = w_nonwater * (m_nonwater * 1.0 + m_omega * 0.5)
    score_omega = w_omega * (m_water * 1.0 + m_nonwater * 1.0 + m_omega * 1.0)
    labels = np.where(score_water >= score_nonwater, WATER, NONWATER)
    return np.where(
        score_omega >= np.maximum(score_water, score_nonwater), IGNORANCE, labels
    ).astype(np.uint8)


@dataclass(frozen=True)
class PipelineConfig:
    """Tunables of the nine-stage pipeline, validated against module ranges."""

    nbins: int = 256
    window_size: int = 3
    harvest_threshold: float = 0.7
    per_class: int = 5000
    min_samples: int = 50
    seed: int = 42
    r: float = 0.1
    k_d: float = 1.0
    lam: float = 1.0
    alpha: float = DEFAULT_ALPHA
    epochs: int = 50
    reg: float = 1e-3

    def __post_init__(self):
        if self.nbins < 8:
            raise ValueError(f"nbins must be >= 8, got {self.nbins}")
        GammaConfig(self.window_size)
        if not 0.0 < self.harvest_threshold < 1.0:
            raise ValueError(f"harvest_threshold must be in (0, 1), got {self.harvest_threshold}")
        if self.per_class < 1 or self.min_samples < 1:
            raise ValueError("per_class and min_samples must be positive")
        if not 0.0 <= self.r <= 1.0:
            raise ValueError(f"r must be in [0, 1], got {self.r}")
        if self.k_d <= 0.0 or self.lam <= 0.0:
            raise ValueError("k_d and lam must be positive")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if self.epochs < 1 or self.reg <= 0.0:
            raise ValueError("epochs must be >= 1 and reg > 0")

    def decision_params(self) -> DecisionParams:
        return DecisionParams(
            r=self.r,
            k_d=self.k_d,
            lam={MASK_WATER: self.lam, MASK_NONWATER: self.lam, MASK_OMEGA: self.lam},
        )


@contextmanager
def _stage(name: str):
    try:
        yield
    except PipelineError:
        raise
    except (WaterfuseError, ValueError) as exc:
        raise PipelineError(name, exc) from exc


class WaterDetector(BaseEstimator):
    """End-to-end water detector with a scikit-learn style interface.

    `fit` runs the full pipeline on a raster (the algorithm is
    self-trained, so fitting already classifies the training scene;
    `fit_predict` returns that map). `predict` applies the fitted
    threshold, classifier, and discounts to any raster with the five
    pipeline bands.

    Constructor arguments mirror :class:`PipelineConfig` and are validated
    at fit time.
    """

    def __init__(
        self,
        nbins: int = 256,
        window_size: int = 3,
        harvest_threshold: float = 0.7,
        per_class: int = 5000,
        min_samples: int = 50,
        seed: int = 42,
        r: float = 0.1,
        k_d: float = 1.0,
        lam: float = 1.0,
        alpha: float = DEFAULT_ALPHA,
        epochs: int = 50,
        reg: float = 1e-3,
    ):
        self.nbins = nbins
        self.window_size = window_size
        self.harvest_threshold = harvest_threshold
        self.per_class = per_class
        self.min_samples = min_samples
        self.seed = seed
        self.r = r
        self.k_d = k_d
        self.lam = lam
        self.alpha = alpha
        self.epochs = epochs
        self.reg = reg

    def _config(self) -> PipelineConfig:
        return PipelineConfig(**self.get_params())

    def fit(self, raster: MultiBandRaster, y=None) -> "WaterDetector":
        cfg = self._config()
        with _stage("input validation"):
            if not raster.has_bands(PIPELINE_BANDS):
                raise ValueError(
                    f"raster must provide bands {list(PIPELINE_BANDS)}, has {list(raster.band_names)}"
                )
        nir = raster.band("nir")

        with _stage("threshold detection"):
            analysis = analyze_threshold(nir, cfg.nbins)
            self.spectral_params_ = analysis.params
            self.threshold_analysis_ = analysis

        with _stage("spectral masses"):
            gamma_cfg = GammaConfig(cfg.window_size)
            spectral_labels = spectral_label_grid(nir, self.spectral_params_)
            gamma = gamma_grid(spectral_labels, gamma_cfg)
            m1 = spectral_mass_grid(nir, self.spectral_params_, gamma)

        with _stage("training-sample harvest"):
            features = feature_grid(raster)
            ts = harvest_training_samples(
                m1,
                features,
                threshold=cfg.harvest_threshold,
                per_class=cfg.per_class,
                seed=cfg.seed,
                min_samples=cfg.min_samples,
            )

        with _stage("classifier training"):
            self.supervised_model_ = train(
                ts, features, epochs=cfg.epochs, reg=cfg.reg, alpha=cfg.alpha
            )
            supervised_labels = self.supervised_model_.predict_grid(features)

        with _stage("supervised masses"):
            m2 = supervised_mass_grid(self.supervised_model_, features)

        with _stage("discounting"):
            self.confusion_ = confusion(spectral_labels, supervised_labels)
            self.alpha_water_, self.alpha_nonwater_ = discount_coefficients(self.confusion_)
            m1 = apply_discounts(
                nir,
                gamma,
                self.spectral_params_,
                spectral_labels,
                supervised_labels,
                self.alpha_water_,
                self.alpha_nonwater_,
            )

        with _stage("fusion and decision"):
            fused = fuse_grids(m1, m2)
            labels = decide_grid(fused, cfg.decision_params())
            self.classmap_ = ClassMap(labels, fused)

        self.training_summary_ = {
            "per_class": cfg.per_class,
            "harvested_water": ts.class_count(WATER),
            "harvested_nonwater": ts.class_count(NONWATER),
        }
        return self

    def fit_predict(self, raster: MultiBandRaster) -> ClassMap:
        return self.fit(raster).classmap_

    def predict(self, raster: MultiBandRaster | None = None) -> ClassMap:
        """Class map for `raster` under the fitted models (fitted scene if None)."""
        if not hasattr(self, "classmap_"):
            raise NotFittedError("detector is not fitted")
        if raster is None:
            return self.classmap_
        cfg = self._config()
        with _stage("input validation"):
            if not raster.has_bands(PIPELINE_BANDS):
                raise ValueError(
                    f"raster must provide bands {list(PIPELINE_BANDS)}, has {list(raster.band_names)}"
                )
        nir = raster.band("nir")
        with _stage("prediction"):
            spectral_labels = spectral_label_grid(nir, self.spectral_params_)
            gamma = gamma_grid(spectral_labels, GammaConfig(cfg.window_size))
            features = feature_grid(raster)
            supervised_labels = self.supervised_model_.predict_grid(features)
            m1 = apply_discounts(
                nir,
                gamma,
                self.spectral_params_,
                spectral_labels,
                supervised_labels,
                self.alpha_water_,
                self.alpha_nonwater_,
            )
            m2 = supervised_mass_grid(self.supervised_model_, features)
            fused = fuse_grids(m1, m2)
            labels = decide_grid(fused, cfg.decision_params())
        return ClassMap(labels, fused)

    @property
    def report_(self) -> dict:
        """JSON-ready summary of the fitted pipeline."""
        if not hasattr(self, "classmap_"):
            raise NotFittedError("detector is not fitted")
        cfg = self._config()
        params = self.spectral_params_
        centers = self.threshold_analysis_.histogram.centers
        p1, p2 = self.threshold_analysis_.peak_bins
        fractions = self.classmap_.fractions()
        counts = {
            name: int(np.count_nonzero(self.classmap_.labels == code))
            for code, name in ((WATER, "water"), (NONWATER, "non-water"), (IGNORANCE, "ignorance"))
        }
        return {
            "threshold": params.t,
            "nir_min": params.n_min,
            "nir_max": params.n_max,
            "peak_bins": [int(p1), int(p2)],
            "peak_values": [float(centers[p1]), float(centers[p2])],
            "confusion": self.confusion_.to_dict(),
            "alpha_water": self.alpha_water_,
            "alpha_nonwater": self.alpha_nonwater_,
            "training": dict(self.training_summary_),
            "class_counts": counts,
            "class_percentages": {
                name: round(100.0 * fractions[name], 2) for name in counts
            },
            "config": asdict(cfg),
        }


def run_pipeline(
    raster: MultiBandRaster, cfg: PipelineConfig | None = None
) -> tuple[ClassMap, dict]:
    """Functional wrapper: one raster in, class map and report out."""
    cfg = cfg if cfg is not None else PipelineConfig()
    detector = WaterDetector(**asdict(cfg))
    classmap = detector.fit_predict(raster)
    return classmap, detector.report_
