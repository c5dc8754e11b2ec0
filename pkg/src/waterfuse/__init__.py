"""Surface-water detection for multi-spectral rasters via belief-function fusion.

A NIR-threshold model and a classifier self-trained on its most confident
pixels each produce per-pixel mass functions over {water, non-water};
after confusion-matrix discounting they are averaged and decided with a
cardinality-weighted pignistic rule, yielding water / non-water /
ignorance maps.
"""

from .belief import (
    DecisionParams,
    Frame,
    MassFunction,
    appriou_decide,
    belief,
    combine_average,
    combine_conjunctive,
    pignistic,
    plausibility,
)
from .fusion import (
    ConfusionMatrix,
    PipelineConfig,
    WaterDetector,
    apply_discounts,
    confusion,
    decide_grid,
    decide_pixel,
    discount_coefficients,
    fuse_grids,
    fuse_pixel,
    run_pipeline,
)
from .indices import feature_grid, ndvi, ndwi, re_ndwi
from .raster import (
    IGNORANCE,
    NONWATER,
    WATER,
    ClassMap,
    MultiBandRaster,
    load_raster,
    render_classmap,
    render_mass,
    save_raster,
)
from .scene import SceneSpec, ScoreReport, generate, score
from .spectral import (
    GammaConfig,
    Histogram,
    SpectralModelParams,
    build_histogram,
    find_first_two_peaks,
    find_threshold,
    fit_poly5,
    gamma_coefficient,
    gamma_grid,
    spectral_label,
    spectral_mass,
    spectral_mass_grid,
)
from .supervised import (
    LinearHingeClassifier,
    SupervisedWaterModel,
    TrainingSet,
    compute_dprime,
    harvest_training_samples,
    predict,
    supervised_mass,
    supervised_mass_grid,
    train,
)

__version__ = "0.1.0"

__all__ = [
    "ClassMap",
    "ConfusionMatrix",
    "DecisionParams",
    "Frame",
    "GammaConfig",
    "Histogram",
    "IGNORANCE",
    "LinearHingeClassifier",
    "MassFunction",
    "MultiBandRaster",
    "NONWATER",
    "PipelineConfig",
    "SceneSpec",
    "ScoreReport",
    "SpectralModelParams",
    "SupervisedWaterModel",
    "TrainingSet",
    "WATER",
    "WaterDetector",
    "appriou_decide",
    "apply_discounts",
    "belief",
    "build_histogram",
    "combine_average",
    "combine_conjunctive",
    "compute_dprime",
    "confusion",
    "decide_grid",
    "decide_pixel",
    "discount_coefficients",
    "feature_grid",
    "find_first_two_peaks",
    "find_threshold",
    "fit_poly5",
    "fuse_grids",
    "fuse_pixel",
    "gamma_coefficient",
    "gamma_grid",
    "generate",
    "harvest_training_samples",
    "load_raster",
    "ndvi",
    "ndwi",
    "pignistic",
    "plausibility",
    "predict",
    "re_ndwi",
    "render_classmap",
    "render_mass",
    "run_pipeline",
    "save_raster",
    "score",
    "spectral_label",
    "spectral_mass",
    "spectral_mass_grid",
    "supervised_mass",
    "supervised_mass_grid",
    "train",
]
