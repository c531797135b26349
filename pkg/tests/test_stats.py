import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ntklab.stats import (
    BootstrapFailure,
    DegenerateSampleError,
    Sample,
    bootstrap,
    bootstrap_se,
    dispersion_estimator,
    estimate_dispersion,
    loo_mean_sq,
    loo_mean_sq_naive,
    mean_ratio_estimator,
    naive_dispersion,
    ratio_of_means,
)

import oracles

positive_samples = st.lists(st.floats(0.1, 100.0), min_size=3, max_size=40)


def test_sample_rejects_nonfinite():
    with pytest.raises(ValueError):
        Sample([1.0, np.nan, 2.0])
    s = Sample([[1.0, 2.0], [3.0, 4.0]])
    assert s.n == len(s) == 4
    with pytest.raises(ValueError):
        s.values[0] = 5.0


def test_constant_sample_gives_one():
    assert dispersion_estimator([3.7] * 50) == 1.0
    assert dispersion_estimator(Sample([0.2] * 3)) == 1.0
    assert dispersion_estimator([2.0] * 10, "printed") == pytest.approx(10 / 8)


def test_hand_example():
    # leave-one-out squared means 6, 3, 2; ratios 1/6, 4/3, 9/2 sum to 6
    assert loo_mean_sq(np.array([1.0, 2.0, 3.0])).tolist() == pytest.approx([6.0, 3.0, 2.0])
    assert dispersion_estimator([1.0, 2.0, 3.0], "printed") == pytest.approx(6.0, rel=1e-15)
    assert dispersion_estimator([1.0, 2.0, 3.0], "mean") == pytest.approx(2.0, rel=1e-15)


def test_printed_is_mean_times_n_over_n_minus_2():
    v = np.random.default_rng(0).lognormal(size=25)
    assert dispersion_estimator(v, "printed") == pytest.approx(dispersion_estimator(v) * 25 / 23, rel=1e-14)


def test_estimator_input_checks():
    with pytest.raises(ValueError):
        dispersion_estimator([1.0, 2.0])
    with pytest.raises(ValueError):
        dispersion_estimator([1.0, 2.0, 3.0], "other")


def test_degenerate_sample_raises():
    # removing the positive value leaves +1 and -1, whose pair product is negative
    with pytest.raises(DegenerateSampleError):
        dispersion_estimator([1.0, -1.0, 5.0])
    with pytest.raises(DegenerateSampleError):
        dispersion_estimator([0.0, 0.0, 0.0])


@settings(max_examples=100, deadline=None)
@given(values=positive_samples, c=st.floats(1e-3, 1e3))
def test_scale_invariance(values, c):
    v = np.array(values)
    try:
        r = dispersion_estimator(v)
    except DegenerateSampleError:
        return
    assert dispersion_estimator(c * v) == pytest.approx(r, rel=1e-9)


@settings(max_examples=100, deadline=None)
@given(values=positive_samples)
def test_permutation_invariance(values):
    v = np.array(values)
    try:
        r = dispersion_estimator(v)
    except DegenerateSampleError:
        return
    # the O(N) leave-one-out sums cancel when one value dominates; allow for that round-off
    assert dispersion_estimator(v[::-1]) == pytest.approx(r, rel=1e-9)


@pytest.mark.parametrize("n", [3, 4, 7, 20, 50])
def test_linear_time_matches_quadratic_oracle(n):
    v = np.random.default_rng(n).gamma(2.0, size=n)
    for norm, pref in (("mean", lambda N: 1 / N), ("printed", lambda N: 1 / (N - 2))):
        ref = float(oracles.dispersion_estimator_quadratic(v, pref))
        assert dispersion_estimator(v, norm) == pytest.approx(ref, rel=1e-12)


def test_loo_matches_naive_pairs():
    v = np.random.default_rng(1).standard_normal(15) + 3
    np.testing.assert_allclose(loo_mean_sq(v), loo_mean_sq_naive(v), rtol=1e-12)


def test_naive_dispersion():
    assert naive_dispersion([1.0, 2.0, 3.0]) == pytest.approx(14 / 3 / 4)
    with pytest.raises(DegenerateSampleError):
        naive_dispersion([1.0, -1.0])
    with pytest.raises(ValueError):
        naive_dispersion([])


def test_mean_ratio_examples():
    assert mean_ratio_estimator([1.0, 2.0, 3.0], [2.0, 2.0, 2.0]) == 1.0
    assert mean_ratio_estimator([1.0, 1.0], [4.0, 0.0]) == 0.5
    assert ratio_of_means(np.array([[1.0, 2.0], [3.0, 6.0]])) == 0.5
    with pytest.raises(ValueError):
        mean_ratio_estimator([1.0], [1.0, 2.0])
    with pytest.raises(ZeroDivisionError):
        mean_ratio_estimator([1.0, 2.0], [1.0, -1.0])


# ---------------------------------------------------------------------------
# bootstrap


def test_bootstrap_is_deterministic_per_seed():
    v = np.random.default_rng(2).lognormal(size=60)
    assert bootstrap_se(v, 200, seed=5) == bootstrap_se(v, 200, seed=5)
    assert bootstrap_se(v, 200, seed=5) != bootstrap_se(v, 200, seed=6)


def test_bootstrap_of_constant_sample_is_zero():
    res = bootstrap([2.0] * 30, b=100, seed=0)
    assert res.se == 0.0 and res.skipped == 0 and res.b == 100


def test_bootstrap_se_shrinks_like_root_n():
    rng = np.random.default_rng(3)
    se_small = bootstrap_se(rng.lognormal(0, 0.5, 500), 1000, seed=1)
    se_large = bootstrap_se(rng.lognormal(0, 0.5, 2000), 1000, seed=1)
    assert se_small / se_large == pytest.approx(2.0, rel=0.25)


def test_bootstrap_paired_rows():
    rng = np.random.default_rng(4)
    den = rng.lognormal(size=100)
    pairs = np.column_stack([0.5 * den, den])
    # every resample of exactly proportional pairs gives the same ratio
    res = bootstrap(pairs, b=50, seed=0, statistic=ratio_of_means)
    assert res.se == pytest.approx(0.0, abs=1e-15)


def test_bootstrap_skips_and_fails_on_degenerate_resamples():
    # a sample whose resamples are usually degenerate
    v = np.array([1.0, -1.0, -1.0, 1.0, 0.5])
    with pytest.raises(BootstrapFailure):
        bootstrap(v, b=200, seed=0)


def test_bootstrap_counts_skipped_resamples():
    # one value of -10 among forty near 1: a resample is degenerate iff it draws -10 three or more times
    v = np.concatenate([1.0 + np.linspace(0, 0.1, 40), [-10.0]])
    res = bootstrap(v, b=500, seed=0)
    idx = np.random.default_rng(0).integers(0, v.size, size=(500, v.size))
    expected = int(np.sum(np.sum(idx == 40, axis=1) >= 3))
    assert res.skipped == expected
    assert 0 < res.skipped <= 50


def test_bootstrap_input_checks():
    with pytest.raises(ValueError):
        bootstrap([1.0, 2.0])
    with pytest.raises(ValueError):
        bootstrap([1.0, 2.0, 3.0], b=1)


def test_estimate_dispersion_bundles_results():
    v = np.random.default_rng(5).lognormal(0, 0.3, 200)
    est = estimate_dispersion(v, b=100, seed=2)
    assert est.r_hat == dispersion_estimator(v)
    assert est.bootstrap_se == bootstrap_se(v, 100, 2)
    assert (est.n, est.b) == (200, 100)
