import numpy as np
import pytest
from scipy.stats import kurtosis

from iadl.synthgen import (
    ARTIFACT_GAUSSIAN,
    ARTIFACT_SUBGAUSSIAN,
    ARTIFACT_SUPERGAUSSIAN,
    MINI_SPECS,
    SyntheticSourceSpec,
    artifact_values,
    assemble_dataset,
    full_benchmark,
    generate_artifact_pair,
    generate_spatial_map,
    mini_benchmark,
)
from iadl.hrf import ConditionSpec, canonical_params
from iadl.types import sparsity_percentage

FULL_TARGET_THETAS = [
    95.28, 95.33, 95.53, 88.25, 93.30, 97.04, 88.07, 91.82, 85.51, 92.67,
    91.60, 91.53, 94.51, 94.57, 71.95, 1.00, 1.00, 1.99, 86.14, 71.84,
]


def blob_spec(theta, centers, radius=3.0, plateau=0.0):
    return SyntheticSourceSpec(
        "transient", theta, blob_centers=centers, blob_radius=radius,
        plateau_fraction=plateau,
    )


def test_spatial_map_hits_target_count(rng):
    spec = blob_spec(95.0, ((20, 20),), radius=4.0, plateau=0.2)
    m = generate_spatial_map(spec, (40, 40), rng)
    assert np.count_nonzero(m) == round(1600 * 0.05)
    assert np.max(m) == 1.0


def test_spatial_map_no_plateau_is_smooth_bump(rng):
    spec = blob_spec(90.0, ((10, 10),), radius=3.0, plateau=0.0)
    m = generate_spatial_map(spec, (20, 20), rng).reshape(20, 20)
    # single maximum at the center, values fall off monotonically with radius
    assert m[10, 10] == 1.0
    assert np.count_nonzero(m == 1.0) == 1


def test_spatial_map_translation_grows_overlap(rng):
    base = blob_spec(93.0, ((15, 10),), radius=3.0)
    far = blob_spec(93.0, ((15, 28),), radius=3.0)
    near = blob_spec(93.0, ((15, 14),), radius=3.0)
    sup = lambda spec: set(np.flatnonzero(generate_spatial_map(spec, (30, 40), rng)))
    overlap_far = len(sup(base) & sup(far))
    overlap_near = len(sup(base) & sup(near))
    assert overlap_near > overlap_far


def test_spatial_map_unreachable_sparsity_raises(rng):
    spec = blob_spec(0.0, ((5, 5),), radius=0.5)
    with pytest.raises(ValueError):
        generate_spatial_map(spec, (50, 50), rng)


def test_artifact_dense_count(rng):
    _, spatial = generate_artifact_pair(ARTIFACT_SUBGAUSSIAN, 1.0, 50, 10_000, rng)
    assert np.count_nonzero(spatial) == 9900


def test_artifact_kurtosis_ordering(rng):
    n = 100_000
    sub = kurtosis(artifact_values(ARTIFACT_SUBGAUSSIAN, n, rng))
    gauss = kurtosis(artifact_values(ARTIFACT_GAUSSIAN, n, rng))
    sup = kurtosis(artifact_values(ARTIFACT_SUPERGAUSSIAN, n, rng))
    assert sub < gauss < sup


def test_artifact_fully_sparse_map(rng):
    course, spatial = generate_artifact_pair(ARTIFACT_GAUSSIAN, 100.0, 30, 500, rng)
    np.testing.assert_array_equal(spatial, np.zeros(500))
    assert np.max(np.abs(course)) == pytest.approx(1.0)


def test_assemble_noise_free_sentinel(rng):
    ds = assemble_dataset(MINI_SPECS, (40, 40), 60, 2.0, canonical_params(), np.inf, rng)
    np.testing.assert_array_equal(ds.x.values, ds.truth.clean_signal())
    assert ds.noise_sigma == 0.0


def test_assemble_zero_db_power_match(rng):
    ds = assemble_dataset(MINI_SPECS, (40, 40), 80, 2.0, canonical_params(), 0.0, rng)
    clean = ds.truth.clean_signal()
    p_signal = np.mean(clean**2)
    p_noise = np.mean((ds.x.values - clean) ** 2)
    assert p_signal / p_noise == pytest.approx(1.0, rel=0.02)


def test_assemble_rejects_nan_snr(rng):
    with pytest.raises(ValueError):
        assemble_dataset(MINI_SPECS, (40, 40), 50, 2.0, canonical_params(), float("nan"), rng)


def test_clean_signal_reconstructs_exactly(rng):
    ds = mini_benchmark(rng, snr_db=np.inf)
    recon = ds.truth.time_courses @ ds.truth.spatial_maps
    np.testing.assert_array_equal(recon, ds.truth.clean_signal())


def test_mini_benchmark_deterministic():
    a = mini_benchmark(np.random.default_rng(33))
    b = mini_benchmark(np.random.default_rng(33))
    np.testing.assert_array_equal(a.x.values, b.x.values)
    np.testing.assert_array_equal(a.truth.spatial_maps, b.truth.spatial_maps)


def test_mini_benchmark_task_overlap(rng):
    ds = mini_benchmark(rng)
    maps = ds.truth.spatial_maps
    i, j = ds.assisted_indices
    sup_i = set(np.flatnonzero(maps[i]))
    sup_j = set(np.flatnonzero(maps[j]))
    share = len(sup_i & sup_j) / min(len(sup_i), len(sup_j))
    assert share >= 0.15


def test_mini_benchmark_brain_sparsity_floor(rng):
    ds = mini_benchmark(rng)
    for m, kind in zip(ds.truth.spatial_maps, ds.truth.kinds):
        if kind in ("task", "transient"):
            assert sparsity_percentage(m) >= 85.0


def test_full_recipe_matches_reference_sparsities():
    ds = full_benchmark(np.random.default_rng(2))
    assert ds.x.values.shape == (300, 10_000)
    assert ds.assisted_indices == (0, 10, 13)
    for m, target in zip(ds.truth.spatial_maps, FULL_TARGET_THETAS):
        assert abs(sparsity_percentage(m) - target) <= 2.0


def test_full_recipe_zero_db(rng):
    ds = full_benchmark(rng)
    clean = ds.truth.clean_signal()
    ratio = np.mean(clean**2) / np.mean((ds.x.values - clean) ** 2)
    assert ratio == pytest.approx(1.0, rel=0.02)


def test_spec_validation():
    with pytest.raises(ValueError):
        SyntheticSourceSpec("task", 95.0, blob_centers=((1, 1),))  # no condition
    with pytest.raises(ValueError):
        SyntheticSourceSpec("transient", 101.0, blob_centers=((1, 1),))
    with pytest.raises(ValueError):
        SyntheticSourceSpec("nonsense", 50.0)
    cond = ConditionSpec(onsets=(0.0,), durations=(2.0,))
    with pytest.raises(ValueError):
        SyntheticSourceSpec("task", 95.0, condition=cond)  # no blobs
