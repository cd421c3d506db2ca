"""Tests for the fixed recovery benchmark and the BIC degree demo."""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import stats

from sparseflows.benchmark import (
    BENCH_N,
    BENCH_NOISE_SD,
    CUBIC_COEFFS,
    TRUE_SUPPORT,
    degree_selection_rate,
    gen_polynomial_dataset,
    polynomial_nll,
    recovery_trial,
    run_recovery_suite,
    select_degree_by_bic,
    two_of_six_dictionary,
)


class TestFixedBenchmark:
    def test_dictionary_composition(self):
        d = two_of_six_dictionary()
        assert d.m == 6
        assert [k.family for k in d.kernels] == [
            "gaussian", "gaussian", "laplace", "linear", "polynomial",
            "locally-periodic"]
        assert d.theta == (1.0,) * 6

    def test_true_support_names_two_kernels(self):
        assert TRUE_SUPPORT.active == (1, 4)
        assert TRUE_SUPPORT.p == 2

    def test_conventions(self):
        assert BENCH_N == 400
        assert BENCH_NOISE_SD == 0.05


class TestRecoveryTrial:
    def test_deterministic(self):
        a = recovery_trial(0, n=120)
        b = recovery_trial(0, n=120)
        assert a.to_dict() == b.to_dict()

    def test_flags_consistent_with_supports(self):
        r = recovery_trial(1, n=120)
        assert r.exhaustive_support.p >= 1
        assert r.exhaustive_correct == (r.exhaustive_support == TRUE_SUPPORT)
        assert r.sweep_matches_exhaustive \
            == (r.sweep_support == r.exhaustive_support)

    def test_suite_aggregates_flags(self):
        summary = run_recovery_suite(n_trials=2, n=120)
        assert len(summary.trials) == 2
        assert summary.exhaustive_recovery_rate \
            == np.mean([t.exhaustive_correct for t in summary.trials])
        assert summary.sweep_match_rate \
            == np.mean([t.sweep_matches_exhaustive for t in summary.trials])
        payload = summary.to_dict()
        assert payload["n_trials"] == 2
        assert payload["true_support"] == [1, 4]


class TestPolynomialDemo:
    def test_generator_shapes_and_determinism(self):
        data = gen_polynomial_dataset(n=50, seed=7)
        again = gen_polynomial_dataset(n=50, seed=7)
        assert data.n == 50 and data.d == 1
        assert data.provenance == "synthetic-function"
        assert np.array_equal(data.y, again.y)
        assert np.all(np.abs(data.X) <= 1.0)

    def test_nll_matches_gaussian_mle_logpdf(self):
        data = gen_polynomial_dataset(n=80, seed=3)
        for degree in (0, 2, 5):
            coeffs = np.polynomial.polynomial.polyfit(
                data.X[:, 0], data.y, degree)
            resid = data.y - np.polynomial.polynomial.polyval(
                data.X[:, 0], coeffs)
            sigma = np.sqrt(np.mean(resid**2))
            oracle = -stats.norm.logpdf(resid, scale=sigma).sum()
            assert_allclose(polynomial_nll(data, degree), oracle, rtol=1e-12)

    def test_nll_nonincreasing_in_degree(self):
        data = gen_polynomial_dataset(n=120, seed=11)
        values = [polynomial_nll(data, deg) for deg in range(7)]
        assert all(b <= a + 1e-9 for a, b in zip(values, values[1:]))

    def test_negative_degree_rejected(self):
        with pytest.raises(ValueError, match="degree"):
            polynomial_nll(gen_polynomial_dataset(n=30, seed=0), -1)

    def test_selects_cubic_on_clean_data(self):
        data = gen_polynomial_dataset(coeffs=CUBIC_COEFFS, n=400,
                                      noise_sd=0.05, seed=5)
        degree, scores = select_degree_by_bic(data)
        assert degree == 3
        assert len(scores) == 9
        assert degree == int(np.argmin(scores))

    def test_selection_rate_on_default_settings(self):
        rate, picks = degree_selection_rate(n_trials=5)
        assert rate == 1.0
        assert picks == (3,) * 5
