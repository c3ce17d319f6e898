"""Tests for the OLS/2SLS engine, significance classes and the Chow test."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sumlab import regression as reg
from sumlab.errors import (DomainError, InsufficientDataError,
                           SingularDesignError, WeakInstrumentError)


def normal_equations_oracle(y, X):
    """Brute-force normal equations, independent of the module's QR path."""
    design = np.column_stack([np.ones(len(y)), X])
    return np.linalg.solve(design.T @ design, design.T @ np.asarray(y, float))


def ssr_of(y, X):
    design = np.column_stack([np.ones(len(y)), np.asarray(X, float)])
    coef = np.linalg.solve(design.T @ design, design.T @ np.asarray(y, float))
    r = np.asarray(y, float) - design @ coef
    return float(r @ r)


class TestOLS:
    def test_exact_fit(self):
        fit = reg.ols([1.0, 3.0, 5.0], [0.0, 1.0, 2.0])
        assert fit.coefficient("intercept") == pytest.approx(1.0)
        assert fit.slope == pytest.approx(2.0)
        assert fit.r_squared == pytest.approx(1.0)

    def test_constant_outcome(self):
        fit = reg.ols([4.0, 4.0, 4.0, 4.0], [0.0, 1.0, 2.0, 3.0])
        assert fit.slope == pytest.approx(0.0)
        assert fit.r_squared == 0.0

    def test_matches_normal_equations_oracle(self):
        rng = np.random.default_rng(42)
        X = rng.normal(size=(50, 3))
        y = 1.5 + X @ np.array([2.0, -1.0, 0.5]) + rng.normal(size=50)
        fit = reg.ols(y, X, names=("a", "b", "c"))
        oracle = normal_equations_oracle(y, X)
        assert np.allclose(fit.coefficients, oracle, rtol=1e-10, atol=1e-12)

    def test_standard_errors_match_textbook_formula(self):
        rng = np.random.default_rng(8)
        X = rng.normal(size=(40, 2))
        y = 2.0 + X @ np.array([1.0, 3.0]) + rng.normal(size=40)
        fit = reg.ols(y, X)
        design = np.column_stack([np.ones(40), X])
        resid = y - design @ np.array(fit.coefficients)
        sigma2 = resid @ resid / (40 - 3)
        cov = sigma2 * np.linalg.inv(design.T @ design)
        assert np.allclose(fit.std_errors, np.sqrt(np.diag(cov)), rtol=1e-9)

    def test_residuals_orthogonal_to_regressors(self):
        rng = np.random.default_rng(5)
        X = rng.normal(size=(200, 4))
        y = rng.normal(size=200)
        fit = reg.ols(y, X)
        design = np.column_stack([np.ones(200), X])
        resid = y - design @ np.array(fit.coefficients)
        scale = np.abs(design).sum(axis=0) * np.abs(resid).max()
        assert np.max(np.abs(design.T @ resid) / np.maximum(scale, 1.0)) <= 1e-8

    def test_rank_deficiency_names_column(self):
        x = np.arange(10.0)
        X = np.column_stack([x, 2.0 * x])
        # either member of the collinear pair identifies the problem
        with pytest.raises(SingularDesignError, match="base|dup"):
            reg.ols(np.arange(10.0), X, names=("base", "dup"))

    def test_too_few_observations(self):
        with pytest.raises(InsufficientDataError):
            reg.ols([1.0, 2.0], [0.0, 1.0])


class TestTSLS:
    def test_instrumenting_with_itself_matches_ols(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=100)
        y = 1.0 + 2.0 * x + rng.normal(size=100)
        assert reg.tsls(y, x, x).slope == pytest.approx(reg.ols(y, x).slope, rel=1e-10)

    def test_covariance_ratio_oracle(self):
        z = np.array([0.0, 1.0, 2.0])
        x = np.array([0.0, 2.0, 3.0])
        y = np.array([1.0, 5.0, 7.0])
        fit = reg.tsls(y, x, z)
        # oracle: slope = cov(z, y) / cov(z, x), intercept = ybar - slope*xbar
        slope = np.cov(z, y)[0, 1] / np.cov(z, x)[0, 1]
        assert fit.slope == pytest.approx(slope)
        assert fit.slope == pytest.approx(2.0)
        assert fit.coefficient("intercept") == pytest.approx(1.0)

    def test_beats_ols_under_endogeneity(self):
        # x carries an error component that also drives y; z is clean
        rng = np.random.default_rng(99)
        wins = 0
        for _ in range(100):
            n = 1000
            z = rng.normal(size=n)
            e = rng.normal(size=n)
            x = z + e
            y = 2.0 * x + 1.0 + 1.5 * e + 0.5 * rng.normal(size=n)
            err_iv = abs(reg.tsls(y, x, z).slope - 2.0)
            err_ols = abs(reg.ols(y, x).slope - 2.0)
            wins += err_iv < err_ols
        assert wins >= 95

    def test_structural_residuals_orthogonal_to_instrument(self):
        rng = np.random.default_rng(3)
        z = rng.normal(size=500)
        x = z + rng.normal(size=500)
        y = 1.0 + 0.5 * x + rng.normal(size=500)
        fit = reg.tsls(y, x, z)
        resid = y - fit.coefficient("intercept") - fit.slope * x
        assert abs(np.dot(resid - resid.mean(), z - z.mean())) / len(z) < 1e-8

    def test_r_squared_can_be_negative(self):
        rng = np.random.default_rng(12)
        n = 300
        z = rng.normal(size=n)
        e = rng.normal(size=n)
        x = 0.3 * z + e
        y = 1.0 + 0.2 * x + 4.0 * e
        fit = reg.tsls(y, x, z)
        assert fit.r_squared < 1.0  # structural R2, unconstrained below

    def test_weak_instrument_rejected(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=50)
        z = np.ones(50)  # no variance at all
        with pytest.raises(WeakInstrumentError):
            reg.tsls(rng.normal(size=50), x, z)

    def test_first_stage_f_reported(self):
        rng = np.random.default_rng(6)
        z = rng.normal(size=200)
        x = 2.0 * z + rng.normal(size=200)
        fit = reg.tsls(rng.normal(size=200), x, z)
        assert fit.first_stage_f is not None and fit.first_stage_f > 10.0


class TestClassifySign:
    def _fit_with_t(self, t_value: float) -> reg.FitResult:
        # build a real fit whose slope t-stat is large/small as requested by
        # scaling noise; simpler: construct directly
        p = 2.0 * __import__("scipy.stats", fromlist=["t"]).t.sf(abs(t_value), 30)
        return reg.FitResult(
            names=("intercept", "x"), coefficients=(0.0, 1.0 * np.sign(t_value) or 1.0),
            std_errors=(1.0, 1.0), t_stats=(0.0, t_value), p_values=(1.0, p),
            r_squared=0.5, n_obs=32, method="OLS", df_resid=30)

    def test_positive_significant(self):
        fit = self._fit_with_t(5.0)
        assert reg.classify_sign(fit, "x").label == "positive-significant"

    def test_negative_significant(self):
        fit = reg.FitResult(
            names=("intercept", "x"), coefficients=(0.0, -1.0),
            std_errors=(1.0, 0.2), t_stats=(0.0, -5.0), p_values=(1.0, 1e-5),
            r_squared=0.5, n_obs=32, method="OLS", df_resid=30)
        assert reg.classify_sign(fit, "x").label == "negative-significant"

    def test_non_significant(self):
        fit = self._fit_with_t(0.5)
        assert reg.classify_sign(fit, "x").label == "non-significant"

    def test_unknown_regressor(self):
        fit = self._fit_with_t(1.0)
        with pytest.raises(DomainError):
            reg.classify_sign(fit, "nope")

    @given(scale=st.floats(0.01, 100.0))
    def test_invariant_to_positive_rescaling(self, scale):
        rng = np.random.default_rng(21)
        x = rng.normal(size=60)
        y = 0.3 * x + rng.normal(size=60)
        base = reg.ols(y, x)
        scaled = reg.ols(scale * y, x)
        assert np.allclose(scaled.t_stats, base.t_stats, rtol=1e-9)
        assert (reg.classify_sign(scaled, "x0").label
                == reg.classify_sign(base, "x0").label)

    def test_exact_flat_fit_is_non_significant(self):
        fit = reg.ols([2.0, 2.0, 2.0, 2.0], [0.0, 1.0, 2.0, 3.0])
        assert reg.classify_sign(fit, "x0").label == "non-significant"


class TestChow:
    def test_identical_coefficients_no_noise(self):
        x = np.arange(12.0)
        y = 3.0 + 2.0 * x
        split = np.arange(12) < 6
        f, p = reg.chow_test(y, x, split)
        assert f == 0.0
        assert p == pytest.approx(1.0)

    def test_structural_break_detected(self):
        rng = np.random.default_rng(17)
        x1 = rng.uniform(0, 1, size=40)
        x2 = rng.uniform(0, 1, size=40)
        y1 = 1.0 + 1.0 * x1 + 0.01 * rng.normal(size=40)
        y2 = 1.0 + 3.0 * x2 + 0.01 * rng.normal(size=40)
        y = np.concatenate([y1, y2])
        x = np.concatenate([x1, x2])
        split = np.arange(80) < 40
        f, p = reg.chow_test(y, x, split)
        assert p < 0.01

    def test_matches_hand_computed_ssr_formula(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=12)
        y = 0.5 + 1.5 * x + rng.normal(size=12) * 0.3
        split = np.arange(12) % 2 == 0
        k = 2
        ssr_p = ssr_of(y, x)
        ssr_1 = ssr_of(y[split], x[split])
        ssr_2 = ssr_of(y[~split], x[~split])
        expected_f = ((ssr_p - ssr_1 - ssr_2) / k) / ((ssr_1 + ssr_2) / (12 - 2 * k))
        f, _ = reg.chow_test(y, x, split)
        assert f == pytest.approx(expected_f, rel=1e-10)

    def test_subsample_too_small(self):
        with pytest.raises(InsufficientDataError):
            reg.chow_test([1.0, 2.0, 3.0, 4.0], [0.0, 1.0, 2.0, 3.0],
                          [True, False, False, False])
