import math

import numpy as np
import pytest

from waterfuse.raster import IGNORANCE, NONWATER, WATER, ClassMap
from waterfuse.scene import (
    DEFAULT_PROFILES,
    SceneSpec,
    TRUTH_CONFUSER,
    TRUTH_LAND,
    TRUTH_WATER,
    generate,
    score,
    truth_from_pgm_values,
    truth_to_pgm_values,
)
from waterfuse.spectral import find_first_two_peaks, build_histogram


class TestSceneSpec:
    def test_default_river_spans_width(self):
        spec = SceneSpec(width=200, height=100)
        xs = [p[0] for p in spec.river_points]
        assert min(xs) == 0.0 and max(xs) == 199.0

    def test_validation(self):
        with pytest.raises(ValueError, match="dimensions"):
            SceneSpec(width=0)
        with pytest.raises(ValueError, match="radius"):
            SceneSpec(cloud_radius=(10.0, 5.0))
        with pytest.raises(ValueError, match="noise_std"):
            SceneSpec(noise_std=-1.0)

    def test_profiles_must_cover_materials(self):
        profiles = {m: dict(v) for m, v in DEFAULT_PROFILES.items()}
        del profiles["shadow"]
        with pytest.raises(ValueError, match="shadow"):
            SceneSpec(profiles=profiles)

    def test_profiles_must_cover_bands(self):
        profiles = {m: dict(v) for m, v in DEFAULT_PROFILES.items()}
        profiles["water"] = {"nir": (2800.0, 120.0)}
        with pytest.raises(ValueError, match="missing band"):
            SceneSpec(profiles=profiles)

    def test_nir_ordering_enforced(self):
        profiles = {m: dict(v) for m, v in DEFAULT_PROFILES.items()}
        profiles["water"]["nir"] = (9500.0, 120.0)  # brighter than vegetation
        with pytest.raises(ValueError, match="below vegetation"):
            SceneSpec(profiles=profiles)
        profiles = {m: dict(v) for m, v in DEFAULT_PROFILES.items()}
        profiles["cloud"]["nir"] = (2000.0, 120.0)  # below the water mode
        with pytest.raises(ValueError, match="between water and vegetation"):
            SceneSpec(profiles=profiles)


class TestGenerate:
    def test_deterministic_under_seed(self):
        spec = SceneSpec(width=96, height=96, seed=5)
        r1, t1 = generate(spec)
        r2, t2 = generate(spec)
        assert r1 == r2
        assert np.array_equal(t1, t2)

    def test_different_seed_differs(self):
        r1, _ = generate(SceneSpec(width=64, height=64, seed=1))
        r2, _ = generate(SceneSpec(width=64, height=64, seed=2))
        assert r1 != r2

    def test_noise_free_truth_equals_nir_midpoint_mask(self):
        spec = SceneSpec(width=96, height=96, cloud_patches=0, noise_std=0.0)
        raster, truth = generate(spec)
        nir = raster.band("nir")
        water_mean = spec.profiles["water"]["nir"][0]
        veg_mean = spec.profiles["vegetation"]["nir"][0]
        mask = nir < (water_mean + veg_mean) / 2.0
        assert np.array_equal(truth == TRUTH_WATER, mask)

    def test_water_fraction_matches_polyline_area(self):
        spec = SceneSpec(width=256, height=256, n_streams=0, cloud_patches=0)
        _, truth = generate(spec)
        length = sum(
            math.dist(a, b) for a, b in zip(spec.river_points[:-1], spec.river_points[1:])
        )
        estimate = length * spec.river_width
        actual = int(np.count_nonzero(truth == TRUTH_WATER))
        assert 0.8 * estimate <= actual <= 1.2 * estimate

    def test_default_scene_composition(self):
        _, truth = generate(SceneSpec())
        water = np.count_nonzero(truth == TRUTH_WATER) / truth.size
        confuser = np.count_nonzero(truth == TRUTH_CONFUSER) / truth.size
        assert 0.015 <= water <= 0.08
        assert 0.01 <= confuser <= 0.12

    def test_default_nir_histogram_is_bimodal(self):
        raster, _ = generate(SceneSpec())
        p1, p2 = find_first_two_peaks(build_histogram(raster.band("nir"), 256))
        assert p2 - p1 >= 16

    def test_out_of_bounds_river_warns_and_clips(self):
        spec = SceneSpec(
            width=64,
            height=64,
            river_points=((-40.0, 10.0), (80.0, 50.0)),
            cloud_patches=0,
        )
        with pytest.warns(UserWarning, match="clipping"):
            _, truth = generate(spec)
        assert truth.shape == (64, 64)
        assert np.count_nonzero(truth == TRUTH_WATER) > 0

    def test_negative_values_never_emitted(self):
        profiles = {m: dict(v) for m, v in DEFAULT_PROFILES.items()}
        profiles["water"]["blue"] = (10.0, 50.0)
        raster, _ = generate(SceneSpec(width=64, height=64, profiles=profiles))
        assert raster.band("blue").min() >= 0.0


class TestScore:
    def grids(self):
        truth = np.array(
            [
                [TRUTH_WATER, TRUTH_WATER, TRUTH_LAND],
                [TRUTH_LAND, TRUTH_CONFUSER, TRUTH_CONFUSER],
            ],
            dtype=np.uint8,
        )
        return truth

    def test_perfect_prediction(self):
        truth = self.grids()
        labels = np.where(truth == TRUTH_WATER, WATER, NONWATER).astype(np.uint8)
        report = score(ClassMap(labels), truth)
        assert report.water_precision == 1.0
        assert report.water_recall == 1.0
        assert report.confuser_capture == 1.0
        assert report.ignorance_fraction == 0.0

    def test_all_ignorance(self):
        truth = self.grids()
        report = score(ClassMap(np.full(truth.shape, IGNORANCE, dtype=np.uint8)), truth)
        assert report.water_recall == 0.0
        assert report.confuser_capture == 1.0
        assert report.ignorance_fraction == 1.0

    def test_random_prediction_matches_counting_oracle(self, rng):
        truth = rng.integers(0, 3, (20, 20)).astype(np.uint8)
        labels = rng.integers(0, 3, (20, 20)).astype(np.uint8)
        report = score(ClassMap(labels), truth)
        tp = fn = fp = cap = conf = ign = 0
        for r in range(20):
            for c in range(20):
                if labels[r, c] == IGNORANCE:
                    ign += 1
                if truth[r, c] == TRUTH_CONFUSER:
                    conf += 1
                    if labels[r, c] != WATER:
                        cap += 1
                if labels[r, c] == WATER and truth[r, c] == TRUTH_WATER:
                    tp += 1
                if labels[r, c] == WATER and truth[r, c] != TRUTH_WATER:
                    fp += 1
                if truth[r, c] == TRUTH_WATER and labels[r, c] == NONWATER:
                    fn += 1
        assert report.water_precision == pytest.approx(tp / (tp + fp))
        assert report.water_recall == pytest.approx(tp / (tp + fn))
        assert report.confuser_capture == pytest.approx(cap / conf)
        assert report.ignorance_fraction == pytest.approx(ign / 400)

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError, match="differ"):
            score(ClassMap(np.zeros((2, 2), dtype=np.uint8)), np.zeros((3, 3), dtype=np.uint8))


def test_truth_pgm_round_trip():
    truth = np.array([[TRUTH_WATER, TRUTH_LAND, TRUTH_CONFUSER]], dtype=np.uint8)
    gray = truth_to_pgm_values(truth)
    assert gray.tolist() == [[0, 128, 255]]
    assert np.array_equal(truth_from_pgm_values(gray), truth)
    with pytest.raises(ValueError, match="encoding"):
        truth_from_pgm_values(np.array([[7]], dtype=np.uint8))
