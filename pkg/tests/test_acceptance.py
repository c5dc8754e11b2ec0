"""Acceptance gate: one test per criterion, each printing a pass/fail line.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines as they
happen; under plain pytest they appear in the captured output of failures.
"""

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from waterfuse.belief import (
    DecisionParams,
    Frame,
    belief,
    combine_average,
    combine_conjunctive,
    pignistic,
    plausibility,
)
from waterfuse.cli import main
from waterfuse.fusion import PipelineConfig, decide_grid, run_pipeline
from waterfuse.raster import IGNORANCE
from waterfuse.scene import SceneSpec, generate, score
from waterfuse.spectral import SpectralModelParams, find_threshold, spectral_mass
from waterfuse.supervised import SupervisedWaterModel, supervised_mass

from test_belief import (
    all_subsets,
    oracle_average,
    oracle_belief,
    oracle_conjunctive,
    oracle_form,
    oracle_pignistic,
    oracle_plausibility,
    random_mass,
)

TOL = 1e-9


def _gate(name: str, ok: bool, detail: str) -> None:
    print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    assert ok, f"{name}: {detail}"


def test_criterion_1_belief_oracle_equivalence():
    """1,000 random pairs on frames of size 2 and 3 vs enumeration oracle."""
    rng = np.random.default_rng(1001)
    start = time.monotonic()
    worst = 0.0
    for frame in (Frame(("a", "b")), Frame(("a", "b", "c"))):
        subsets = all_subsets(frame.names)
        for _ in range(500):
            m1 = random_mass(frame, rng)
            m2 = random_mass(frame, rng)
            d1, d2 = oracle_form(m1), oracle_form(m2)
            conj = combine_conjunctive(m1, m2)
            conj_oracle = oracle_conjunctive(d1, d2)
            avg = combine_average([m1, m2])
            avg_oracle = oracle_average([d1, d2])
            for a in subsets:
                mask = frame.subset(a)
                worst = max(
                    worst,
                    abs(belief(m1, mask) - oracle_belief(d1, a)),
                    abs(plausibility(m1, mask) - oracle_plausibility(d1, a)),
                    abs(pignistic(m1, mask) - oracle_pignistic(d1, a)),
                    abs(conj.mass(mask) - conj_oracle.get(a, 0.0)),
                    abs(avg.mass(mask) - avg_oracle.get(a, 0.0)),
                )
    elapsed = time.monotonic() - start
    _gate(
        "criterion 1 (belief-core oracle equivalence)",
        worst <= TOL and elapsed < 5.0,
        f"max |impl - oracle| = {worst:.2e} over 1000 pairs in {elapsed:.2f}s",
    )


def test_criterion_2_mass_validity_everywhere():
    """10,000 random draws through each mass construction."""
    rng = np.random.default_rng(1002)
    start = time.monotonic()
    checked = 0

    def check(m):
        nonlocal checked
        values = m.masses
        assert np.all(values >= 0.0) and np.all(values <= 1.0)
        assert abs(values.sum() - 1.0) <= TOL
        assert m.mass(0) == 0.0
        assert (m.mass(1) > 0.0) != (m.mass(2) > 0.0)  # exactly one nonzero singleton
        checked += 1

    for _ in range(10_000):
        t = rng.uniform(3000.0, 7000.0)
        params = SpectralModelParams(
            t=t,
            n_min=t - rng.uniform(100.0, 4000.0),
            n_max=t + rng.uniform(100.0, 6000.0),
            alpha_water=rng.uniform(0.01, 1.0),
            alpha_nonwater=rng.uniform(0.01, 1.0),
        )
        n_x = rng.uniform(params.n_min, params.n_max)
        check(spectral_mass(n_x, params, gamma=rng.uniform(1e-6, 1.0)))

    separation = 10.0
    for _ in range(10_000):
        dprime_water = rng.uniform(0.05, 5.0)
        dprime_nonwater = rng.uniform(0.05, 5.0)
        model = SupervisedWaterModel(
            weights=np.ones(3),
            bias=0.0,
            feature_means=np.zeros(3),
            feature_scales=np.ones(3),
            c_water=np.zeros(3),
            c_nonwater=np.array([separation, 0.0, 0.0]),
            dprime_water=dprime_water,
            dprime_nonwater=dprime_nonwater,
            alpha=rng.uniform(0.05, 1.0),
        )
        water_side = rng.uniform() < 0.5
        center = model.c_water if water_side else model.c_nonwater
        radius = math.sqrt(
            rng.uniform(1e-12, dprime_water if water_side else dprime_nonwater)
        )
        direction = rng.normal(size=3)
        direction /= np.linalg.norm(direction)
        check(supervised_mass(model, center + radius * direction))

    elapsed = time.monotonic() - start
    _gate(
        "criterion 2 (mass validity everywhere)",
        checked == 20_000 and elapsed < 2.0,
        f"{checked} draws valid in {elapsed:.2f}s",
    )


def test_criterion_3_threshold_recovery():
    """20 seeded two-Gaussian scenes vs brute-force min-count-bin oracle."""
    start = time.monotonic()
    hits = 0
    distances = []
    for seed in range(20):
        scene_rng = np.random.default_rng(seed)
        mix = scene_rng.uniform(0.1, 0.5)
        sigma = scene_rng.uniform(250.0, 450.0)
        separation = scene_rng.uniform(8.0, 12.0)  # >= 6 sigma as required
        mu1 = scene_rng.uniform(2500.0, 3500.0)
        mu2 = mu1 + separation * sigma
        n1 = int(65536 * mix)
        values = np.concatenate(
            [scene_rng.normal(mu1, sigma, n1), scene_rng.normal(mu2, sigma, 65536 - n1)]
        )
        band = values.reshape(256, 256)
        t = find_threshold(band, nbins=256).t

        # brute-force oracle: independent python binning loop, raw counts,
        # minimum-count bin between the two mode bins (ties -> nearest to t)
        nbins = 256
        lo = min(values)
        hi = max(values)
        counts = [0] * nbins
        for v in values.tolist():
            idx = int((v - lo) / (hi - lo) * nbins)
            counts[min(max(idx, 0), nbins - 1)] += 1
        width = (hi - lo) / nbins
        mode1 = min(int((mu1 - lo) / (hi - lo) * nbins), nbins - 1)
        mode2 = min(int((mu2 - lo) / (hi - lo) * nbins), nbins - 1)
        floor = min(counts[mode1 : mode2 + 1])
        best = min(
            (
                abs(lo + (idx + 0.5) * width - t)
                for idx in range(mode1, mode2 + 1)
                if counts[idx] == floor
            ),
        )
        distances.append(best / width)
        if best <= 2.0 * width:
            hits += 1
    elapsed = time.monotonic() - start
    _gate(
        "criterion 3 (threshold recovery)",
        hits >= 18 and elapsed < 30.0,
        f"{hits}/20 within 2 bin widths (max distance {max(distances):.2f} bins) "
        f"in {elapsed:.1f}s",
    )


def test_criterion_4_appriou_monotonicity():
    """Ignorance fraction non-increasing in r; total ignorance at r = 0."""
    raster, _ = generate(SceneSpec(width=256, height=256, seed=11))
    classmap, _ = run_pipeline(
        raster, PipelineConfig(per_class=1000, min_samples=30, epochs=15)
    )
    rng = np.random.default_rng(1004)
    random_grid = rng.uniform(0.0, 1.0, (64, 64, 3))
    random_grid /= random_grid.sum(axis=2, keepdims=True)

    ok = True
    details = []
    for grid in (classmap.masses, random_grid):
        fractions = []
        for r in [round(0.1 * k, 1) for k in range(11)]:
            labels = decide_grid(grid, DecisionParams(r=r))
            fractions.append(float(np.mean(labels == IGNORANCE)))
        monotone = all(a >= b - 1e-15 for a, b in zip(fractions, fractions[1:]))
        at_zero = decide_grid(grid, DecisionParams(r=0.0))
        omega_positive = grid[:, :, 2] > 0.0
        total_at_zero = bool(np.all(at_zero[omega_positive] == IGNORANCE))
        ok = ok and monotone and total_at_zero
        details.append(f"{fractions[0]:.3f}->{fractions[-1]:.3f}")
    _gate(
        "criterion 4 (decision monotonicity in r)",
        ok,
        f"ignorance fractions fell monotonically ({'; '.join(details)}), "
        "total ignorance at r=0",
    )


def test_criterion_5_end_to_end_synthetic_detection():
    """Default 512x512 scene, defaults from the method (r=0.1, 0.7, 0.95)."""
    start = time.monotonic()
    spec = SceneSpec()  # 512x512, seed 42
    raster, truth = generate(spec)
    classmap, report = run_pipeline(raster)  # all-default PipelineConfig
    metrics = score(classmap, truth)
    elapsed = time.monotonic() - start
    ok = (
        metrics.water_recall >= 0.95
        and metrics.water_precision >= 0.95
        and metrics.confuser_capture >= 0.80
        and 0.01 <= metrics.ignorance_fraction <= 0.15
        and elapsed < 60.0
    )
    _gate(
        "criterion 5 (end-to-end synthetic detection)",
        ok,
        f"recall={metrics.water_recall:.3f} precision={metrics.water_precision:.3f} "
        f"capture={metrics.confuser_capture:.3f} ignorance={metrics.ignorance_fraction:.3f} "
        f"threshold={report['threshold']:.1f} in {elapsed:.1f}s",
    )


def test_criterion_6_determinism(tmp_path):
    """Two `detect` runs with identical inputs produce identical bytes."""
    scene = tmp_path / "scene"
    assert main(["synth", "--out", str(scene), "--seed", "42"]) == 0
    for out in ("run1", "run2"):
        code = main(
            ["detect", "--input", str(scene) + ".json", "--out", str(tmp_path / out),
             "--seed", "42"]
        )
        assert code == 0
    names = (
        "report.json",
        "classmap.ppm",
        "mass_water.pgm",
        "mass_nonwater.pgm",
        "mass_ignorance.pgm",
    )
    identical = {
        name: (tmp_path / "run1" / name).read_bytes() == (tmp_path / "run2" / name).read_bytes()
        for name in names
    }
    _gate(
        "criterion 6 (byte-identical reruns)",
        all(identical.values()),
        ", ".join(f"{n}={'same' if ok else 'DIFFERS'}" for n, ok in identical.items()),
    )


def test_criterion_7_reference_values_disclosed():
    """The study's reported numbers appear in the docs as non-reproducible
    references (source imagery unavailable), not as test targets."""
    readme = (Path(__file__).resolve().parent.parent / "README.md").read_text()
    required = [
        "5427.18",
        "8.44", "91.56",  # threshold-model split
        "7.64", "92.36",  # classifier split
        "7.41", "87.92", "4.67",  # fused split at r=0.1
    ]
    missing = [v for v in required if v not in readme]
    disclosed = "not reproducible" in readme.lower() and "unavailable" in readme.lower()
    _gate(
        "criterion 7 (non-reproducibility disclosure)",
        not missing and disclosed,
        "reference values recorded in README with non-reproducibility statement"
        if not missing and disclosed
        else f"missing={missing}, disclosure={'yes' if disclosed else 'no'}",
    )
