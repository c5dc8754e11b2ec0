"""Self-trained classifier in index space and its mass function.

Training data is never hand-labeled: pixels whose NIR-threshold mass
exceeds a harvest threshold (default 0.7) are trusted enough to train on.
A linear maximum-margin classifier is fit by regularized hinge-loss
subgradient descent on standardized features; any other classifier with
the same fit/predict surface can be swapped in.

The mass of a pixel decays with the squared distance to the nearer class
center, normalized by D', the largest same-side squared distance over the
whole image: m = (alpha/N) * (exp(-d2/D') - exp(-1)), which is exactly
alpha at the center and 0 at the far boundary of the class's territory.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .belief import MassFunction
from .errors import (
    DegenerateCentersError,
    InsufficientTrainingDataError,
    UntrainableError,
)
from .raster import NONWATER, WATER
from .spectral import BIG_N, MASK_NONWATER, MASK_OMEGA, MASK_WATER, WATER_FRAME

_EXP_NEG1 = math.exp(-1.0)

DPRIME_FLOOR = 1e-12
DEFAULT_ALPHA = 0.95


@dataclass(frozen=True)
class TrainingSet:
    """Per-class harvested samples: features (n, 3), labels (n,), RNG seed."""

    features: np.ndarray
    labels: np.ndarray
    seed: int

    def __post_init__(self):
        features = np.asarray(self.features, dtype=np.float64)
        labels = np.asarray(self.labels, dtype=np.uint8)
        if features.ndim != 2 or labels.shape != (features.shape[0],):
            raise ValueError("features must be (n, d) with matching labels (n,)")
        present = set(np.unique(labels).tolist())
        if present != {WATER, NONWATER}:
            raise ValueError("training set must contain both classes")
        object.__setattr__(self, "features", features)
        object.__setattr__(self, "labels", labels)

    def class_count(self, label: int) -> int:
        return int(np.count_nonzero(self.labels == label))


def harvest_training_samples(
    mass_grid: np.ndarray,
    features: np.ndarray,
    threshold: float = 0.7,
    per_class: int = 5000,
    seed: int = 42,
    min_samples: int = 50,
) -> TrainingSet:
    """Sample high-mass pixels of each class, uniformly without replacement.

    A pixel is eligible for the class whose singleton mass (channel 0 =
    water, channel 1 = non-water) exceeds `threshold`. Sampling is
    deterministic under `seed`; classes are drawn in water, non-water
    order.
    """
    mass_grid = np.asarray(mass_grid)
    features = np.asarray(features, dtype=np.float64)
    if mass_grid.shape[:2] != features.shape[:2]:
        raise ValueError("mass grid and feature grid dimensions differ")
    flat_features = features.reshape(-1, features.shape[2])
    eligible = {
        WATER: np.flatnonzero(mass_grid[:, :, 0].ravel() > threshold),
        NONWATER: np.flatnonzero(mass_grid[:, :, 1].ravel() > threshold),
    }
    if any(idx.size < min_samples for idx in eligible.values()):
        raise InsufficientTrainingDataError(
            f"need >= {min_samples} pixels above mass {threshold} per class "
            f"(water={eligible[WATER].size}, non-water={eligible[NONWATER].size})"
        )
    rng = np.random.default_rng(seed)
    chunks = []
    labels = []
    for label in (WATER, NONWATER):
        idx = eligible[label]
        take = min(per_class, idx.size)
        chosen = rng.choice(idx, size=take, replace=False)
        chunks.append(flat_features[chosen])
        labels.append(np.full(take, label, dtype=np.uint8))
    return TrainingSet(np.concatenate(chunks), np.concatenate(labels), seed)


class LinearHingeClassifier(BaseEstimator, ClassifierMixin):
    """Linear max-margin classifier trained by hinge-loss subgradient descent.

    Features are standardized internally (training mean and variance).
    Updates are sequential with per-epoch shuffling drawn from `seed`, so
    refitting with identical inputs reproduces the weights bit-for-bit.
    The decision step size at update t is 1 / (reg * (t + n_samples)).
    """

    def __init__(self, epochs: int = 50, reg: float = 1e-3, seed: int = 42):
        self.epochs = epochs
        self.reg = reg
        self.seed = seed

    def fit(self, X, y) -> "LinearHingeClassifier":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        if X.ndim != 2 or y.shape != (X.shape[0],):
            raise ValueError("X must be (n, d) with matching y (n,)")
        if self.epochs < 1 or self.reg <= 0.0:
            raise ValueError("epochs must be >= 1 and reg > 0")
        std = X.std(axis=0)
        if not np.any(std > 0.0):
            raise UntrainableError("all features have zero variance")
        self.mean_ = X.mean(axis=0)
        self.scale_ = np.where(std > 0.0, std, 1.0)
        Xs = (X - self.mean_) / self.scale_
        signs = np.where(y == WATER, 1.0, -1.0)
        n = X.shape[0]
        rng = np.random.default_rng(self.seed)
        w = np.zeros(X.shape[1])
        b = 0.0
        t = 0
        for _ in range(self.epochs):
            for i in rng.permutation(n):
                t += 1
                eta = 1.0 / (self.reg * (t + n))
                margin = signs[i] * (Xs[i] @ w + b)
                w *= 1.0 - eta * self.reg
                if margin < 1.0:
                    w += eta * signs[i] * Xs[i]
                    b += eta * signs[i]
        self.weights_ = w
        self.bias_ = b
        return self

    def decision_function(self, X) -> np.ndarray:
        if not hasattr(self, "weights_"):
            raise NotFittedError("classifier is not fitted")
        X = np.asarray(X, dtype=np.float64)
        return (X - self.mean_) / self.scale_ @ self.weights_ + self.bias_

    def predict(self, X) -> np.ndarray:
        """WATER where the decision function is positive; ties go to NONWATER."""
        return np.where(self.decision_function(X) > 0.0, WATER, NONWATER).astype(np.uint8)


@dataclass(frozen=True)
class SupervisedWaterModel:
    """Fitted classifier state plus the geometry behind its mass function."""

    weights: np.ndarray
    bias: float
    feature_means: np.ndarray
    feature_scales: np.ndarray
    c_water: np.ndarray
    c_nonwater: np.ndarray
    dprime_water: float
    dprime_nonwater: float
    alpha: float = DEFAULT_ALPHA
    seed: int = 42
    epochs: int = 50
    reg: float = 1e-3

    def __post_init__(self):
        for name in ("weights", "feature_means", "feature_scales", "c_water", "c_nonwater"):
            arr = np.asarray(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not np.all(self.feature_scales > 0.0):
            raise ValueError("feature scales must be positive")
        if self.dprime_water <= 0.0 or self.dprime_nonwater <= 0.0:
            raise ValueError("D' normalizers must be positive")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")

    def decision_function(self, features: np.ndarray) -> np.ndarray:
        features = np.asarray(features, dtype=np.float64)
        return (features - self.feature_means) / self.feature_scales @ self.weights + self.bias

    def predict_grid(self, features: np.ndarray) -> np.ndarray:
        """Label grid over a (h, w, 3) feature array."""
        return np.where(self.decision_function(features) > 0.0, WATER, NONWATER).astype(np.uint8)

    def to_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "feature_means": self.feature_means.tolist(),
            "feature_scales": self.feature_scales.tolist(),
            "c_water": self.c_water.tolist(),
            "c_nonwater": self.c_nonwater.tolist(),
            "dprime_water": self.dprime_water,
            "dprime_nonwater": self.dprime_nonwater,
            "alpha": self.alpha,
            "seed": self.seed,
            "epochs": self.epochs,
            "reg": self.reg,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SupervisedWaterModel":
        return cls(
            weights=np.array(doc["weights"]),
            bias=float(doc["bias"]),
            feature_means=np.array(doc["feature_means"]),
            feature_scales=np.array(doc["feature_scales"]),
            c_water=np.array(doc["c_water"]),
            c_nonwater=np.array(doc["c_nonwater"]),
            dprime_water=float(doc["dprime_water"]),
            dprime_nonwater=float(doc["dprime_nonwater"]),
            alpha=float(doc["alpha"]),
            seed=int(doc["seed"]),
            epochs=int(doc["epochs"]),
            reg=float(doc["reg"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "SupervisedWaterModel":
        return cls.from_dict(json.loads(Path(path).read_text()))


def compute_dprime(
    c_water: np.ndarray, c_nonwater: np.ndarray, features: np.ndarray
) -> tuple[float, float]:
    """Largest same-side squared distance to each center over all pixels.

    Pixels are partitioned by nearer center (ties to water). An empty
    partition, or one whose largest distance is 0, gets a tiny positive
    floor so the mass formula stays defined.
    """
    c_water = np.asarray(c_water, dtype=np.float64)
    c_nonwater = np.asarray(c_nonwater, dtype=np.float64)
    if np.array_equal(c_water, c_nonwater):
        raise DegenerateCentersError(f"class centers coincide at {c_water.tolist()}")
    flat = np.asarray(features, dtype=np.float64).reshape(-1, c_water.size)
    d_water = ((flat - c_water) ** 2).sum(axis=1)
    d_nonwater = ((flat - c_nonwater) ** 2).sum(axis=1)
    water_side = d_water <= d_nonwater
    dprime_water = float(d_water[water_side].max(initial=0.0))
    dprime_nonwater = float(d_nonwater[~water_side].max(initial=0.0))
    return max(dprime_water, DPRIME_FLOOR), max(dprime_nonwater, DPRIME_FLOOR)


def train(
    ts: TrainingSet,
    features: np.ndarray,
    epochs: int = 50,
    reg: float = 1e-3,
    alpha: float = DEFAULT_ALPHA,
    classifier: LinearHingeClassifier | None = None,
) -> SupervisedWaterModel:
    """Fit the classifier and derive centers and D' normalizers.

    Class centers are means of the raw (unstandardized) training features;
    D' is computed over the full `features` grid, not the training subset,
    so the mass reaches zero exactly at the image's own far boundary.
    """
    clf = classifier if classifier is not None else LinearHingeClassifier(epochs, reg, ts.seed)
    clf.fit(ts.features, ts.labels)
    c_water = ts.features[ts.labels == WATER].mean(axis=0)
    c_nonwater = ts.features[ts.labels == NONWATER].mean(axis=0)
    dprime_water, dprime_nonwater = compute_dprime(c_water, c_nonwater, features)
    return SupervisedWaterModel(
        weights=clf.weights_,
        bias=clf.bias_,
        feature_means=clf.mean_,
        feature_scales=clf.scale_,
        c_water=c_water,
        c_nonwater=c_nonwater,
        dprime_water=dprime_water,
        dprime_nonwater=dprime_nonwater,
        alpha=alpha,
        seed=ts.seed,
        epochs=clf.epochs,
        reg=clf.reg,
    )


def predict(model: SupervisedWaterModel, feature: np.ndarray) -> int:
    """Class of a single feature vector; exact zero ties go to NONWATER."""
    return WATER if float(model.decision_function(feature)) > 0.0 else NONWATER


def supervised_mass(model: SupervisedWaterModel, feature: np.ndarray) -> MassFunction:
    """Mass function of one pixel under the distance-to-center model."""
    feature = np.asarray(feature, dtype=np.float64)
    d_water = float(((feature - model.c_water) ** 2).sum())
    d_nonwater = float(((feature - model.c_nonwater) ** 2).sum())
    if d_water <= d_nonwater:
        m_water = max(
            (model.alpha / BIG_N) * (np.exp(-d_water / model.dprime_water) - _EXP_NEG1), 0.0
        )
        m_nonwater = 0.0
    else:
        m_water = 0.0
        m_nonwater = max(
            (model.alpha / BIG_N) * (np.exp(-d_nonwater / model.dprime_nonwater) - _EXP_NEG1),
            0.0,
        )
    return MassFunction(
        WATER_FRAME,
        {
            MASK_WATER: m_water,
            MASK_NONWATER: m_nonwater,
            MASK_OMEGA: 1.0 - m_water - m_nonwater,
        },
    )


def supervised_mass_grid(model: SupervisedWaterModel, features: np.ndarray) -> np.ndarray:
    """Vectorized :func:`supervised_mass` -> (h, w, 3) triples."""
    features = np.asarray(features, dtype=np.float64)
    d_water = ((features - model.c_water) ** 2).sum(axis=2)
    d_nonwater = ((features - model.c_nonwater) ** 2).sum(axis=2)
    water_side = d_water <= d_nonwater
    m_water = np.where(
        water_side,
        np.maximum(
            (model.alpha / BIG_N) * (np.exp(-d_water / model.dprime_water) - _EXP_NEG1), 0.0
        ),
        0.0,
    )
    m_nonwater = np.where(
        water_side,
        0.0,
        np.maximum(
            (model.alpha / BIG_N) * (np.exp(-d_nonwater / model.dprime_nonwater) - _EXP_NEG1),
            0.0,
        ),
    )
    return np.stack([m_water, m_nonwater, 1.0 - m_water - m_nonwater], axis=2)
