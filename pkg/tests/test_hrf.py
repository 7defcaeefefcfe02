import numpy as np
import pytest

from iadl.hrf import (
    ConditionSpec,
    TwoGammaParams,
    build_regressor,
    canonical_hrf,
    canonical_params,
    default_alternate_hrf,
    estimate_c_delta,
    hrf_curve,
    sample_hrf,
    task_time_course,
)


def test_no_undershoot_curve_nonnegative():
    p = TwoGammaParams(undershoot_ratio=0.0)
    h = hrf_curve(p, 0.5)
    assert np.all(h >= 0)


def test_canonical_peak_location():
    h = canonical_hrf(0.01)
    peak_t = 0.01 * np.argmax(h)
    assert 4.0 <= peak_t <= 6.0


def test_longer_kernel_shares_prefix():
    short = hrf_curve(canonical_params(), 0.5)
    long = hrf_curve(TwoGammaParams(kernel_length=64.0), 0.5)
    np.testing.assert_array_equal(long[: short.size], short)


def test_canonical_hrf_length_and_peak():
    h = canonical_hrf(2.0)
    assert h.size == 32 // 2 + 1
    assert np.max(np.abs(h)) == pytest.approx(1.0)
    np.testing.assert_array_equal(h, hrf_curve(canonical_params(), 2.0))


def test_curves_bounded_by_one():
    rng = np.random.default_rng(5)
    for _ in range(20):
        p = sample_hrf(rng)
        h = hrf_curve(p, 1.0)
        assert np.all(np.isfinite(h))
        assert np.max(np.abs(h)) <= 1.0 + 1e-12


def test_invalid_params_rejected():
    with pytest.raises(ValueError):
        TwoGammaParams(peak_delay=-1.0)
    with pytest.raises(ValueError):
        TwoGammaParams(undershoot_ratio=-0.1)
    with pytest.raises(ValueError):
        hrf_curve(canonical_params(), 0.0)


def test_sample_hrf_zero_spread_is_canonical():
    p = sample_hrf(np.random.default_rng(0), spread=0.0)
    assert p == canonical_params()


def test_sample_hrf_draws_valid_families():
    rng = np.random.default_rng(42)
    for _ in range(100):
        p = sample_hrf(rng, spread=0.3)
        assert p.peak_delay < p.undershoot_delay
        assert p.peak_dispersion > 0 and p.undershoot_dispersion > 0
        assert p.undershoot_ratio >= 0


def test_sample_hrf_seeded_reproducible():
    a = sample_hrf(np.random.default_rng(7))
    b = sample_hrf(np.random.default_rng(7))
    assert a == b


def test_regressor_single_block():
    cond = ConditionSpec(onsets=(0.0,), durations=(6.0,), amplitude=2.0)
    u = build_regressor(cond, 10, 2.0)
    np.testing.assert_array_equal(u, [2, 2, 2, 0, 0, 0, 0, 0, 0, 0])


def test_regressor_empty_condition():
    u = build_regressor(ConditionSpec(onsets=(), durations=()), 5, 1.0)
    np.testing.assert_array_equal(u, np.zeros(5))


def test_regressor_overlap_clips():
    cond = ConditionSpec(onsets=(0.0, 1.0), durations=(4.0, 4.0))
    u = build_regressor(cond, 6, 1.0)
    assert np.max(u) == 1.0


def test_regressor_block_beyond_scan_warns():
    cond = ConditionSpec(onsets=(100.0,), durations=(5.0,))
    with pytest.warns(UserWarning):
        u = build_regressor(cond, 10, 2.0)
    np.testing.assert_array_equal(u, np.zeros(10))


def test_task_course_impulse_kernel():
    u = np.array([0.0, 3.0, 0.0, 0.0])
    delta = task_time_course(u, np.array([1.0]))
    np.testing.assert_allclose(delta, u / 3.0)


def test_task_course_zero_input():
    np.testing.assert_array_equal(task_time_course(np.zeros(5), np.ones(3)), np.zeros(5))


def test_task_course_length_is_input_length():
    u = np.ones(20)
    assert task_time_course(u, canonical_hrf(2.0)).size == 20


def test_task_course_shift_commutes_up_to_truncation():
    h = canonical_hrf(1.0)
    base = np.zeros(80)
    base[5:10] = 1.0
    shifted = np.roll(base, 7)
    a = task_time_course(base, h, normalize=False)
    b = task_time_course(shifted, h, normalize=False)
    np.testing.assert_allclose(b[7:], a[:-7], atol=1e-12)


def test_c_delta_zero_for_matching_hrfs():
    conds = [ConditionSpec(onsets=(0.0, 20.0), durations=(5.0, 5.0))]
    assert estimate_c_delta(conds, 30, 2.0, alternate=canonical_params()) == 0.0


def test_c_delta_symmetric():
    conds = [ConditionSpec(onsets=(4.0,), durations=(8.0,))]
    ref, alt = canonical_params(), default_alternate_hrf()
    a = estimate_c_delta(conds, 40, 2.0, reference=ref, alternate=alt)
    b = estimate_c_delta(conds, 40, 2.0, reference=alt, alternate=ref)
    assert a == pytest.approx(b, rel=1e-12)


def test_c_delta_single_impulse_identity():
    # a one-sample block makes the task course the (normalized) kernel, so
    # the estimate collapses to the squared kernel distance on T samples
    tr, n_times = 2.0, 25
    cond = ConditionSpec(onsets=(0.0,), durations=(tr,))
    ref, alt = canonical_params(), default_alternate_hrf()
    got = estimate_c_delta([cond], n_times, tr, reference=ref, alternate=alt)
    h_ref = hrf_curve(ref, tr)
    h_alt = hrf_curve(alt, tr)

    def padded_unit(h):
        out = np.zeros(n_times)
        out[: min(h.size, n_times)] = h[:n_times]
        return out / np.max(np.abs(out))

    expected = float(np.sum((padded_unit(h_ref) - padded_unit(h_alt)) ** 2))
    assert got == pytest.approx(expected, abs=1e-10)


def test_c_delta_scales_quadratically_without_normalization():
    tr, n_times = 2.0, 30
    cond = ConditionSpec(onsets=(0.0, 30.0), durations=(10.0, 6.0))
    ref = canonical_params()
    with_ratio = TwoGammaParams(undershoot_ratio=ref.undershoot_ratio + 0.1)
    # scaling the kernel difference scales the unnormalized estimate
    u = build_regressor(cond, n_times, tr)
    h_ref = hrf_curve(ref, tr)
    h_alt = hrf_curve(with_ratio, tr)
    diff = task_time_course(u, h_ref - h_alt, normalize=False)
    base = float(np.sum(diff**2))
    scaled = task_time_course(u, 3.0 * (h_ref - h_alt), normalize=False)
    assert float(np.sum(scaled**2)) == pytest.approx(9.0 * base, rel=1e-12)


def test_c_delta_rejects_empty_conditions():
    with pytest.raises(ValueError):
        estimate_c_delta([], 10, 2.0)
