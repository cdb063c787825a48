import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import minimize

from nlcombine.combiners import (
    ForecastSet,
    NonlinearEnsembleWeights,
    combine_pointwise,
    fit_linear_combiner,
    fit_nonlinear_ensemble,
    predict_nonlinear,
)
from nlcombine.combiners import linear
from nlcombine.combiners.linear import (
    error_based_weights,
    variance_based_weights,
    winsorize_rows,
)
from nlcombine.combiners.nonlinear import (
    build_design_matrices,
    model_pairs,
    sse,
    sse_gradient,
    standardization_stats,
)
from nlcombine.errors import (
    AlignmentError,
    ConfigError,
    DegenerateForecastError,
    DomainError,
    PerfectModelError,
    SingularityError,
    SizeError,
)
from nlcombine.timeseries import ErrorReport, evaluate

from oracles import brute_force_weights, dense_lstsq_weights, random_instance

rows = st.lists(st.floats(-1e3, 1e3), min_size=3, max_size=6)


def reports(mapes):
    return [ErrorReport(m, 1.0, 1.0) for m in mapes]


class TestForecastSet:
    def test_invariants(self):
        with pytest.raises(SizeError):
            ForecastSet(np.ones((4, 1)), ("a",))
        with pytest.raises(AlignmentError):
            ForecastSet(np.ones((4, 2)), ("a", "a"))
        with pytest.raises(DomainError):
            ForecastSet([[1.0, np.inf]], ("a", "b"))

    def test_reorder(self):
        fs = ForecastSet.from_columns({"a": [1.0, 2.0], "b": [3.0, 4.0]})
        assert fs.reorder(["b", "a"]).values[:, 0].tolist() == [3.0, 4.0]
        with pytest.raises(AlignmentError):
            fs.reorder(["a", "c"])


class TestPointwise:
    def fs(self, row):
        return ForecastSet(np.atleast_2d(row), tuple(f"m{i}" for i in range(len(row))))

    def test_examples(self):
        assert combine_pointwise(self.fs([1.0, 2.0, 3.0]), linear.simple_average())[0] == 2.0
        assert combine_pointwise(self.fs([1.0, 2.0, 9.0]), linear.median())[0] == 2.0
        out = combine_pointwise(self.fs([1.0, 5.0, 6.0, 7.0, 20.0]), linear.winsorized(1))
        assert out[0] == pytest.approx(6.0, abs=1e-15)

    def test_winsorize_rows(self):
        np.testing.assert_array_equal(winsorize_rows(np.array([[20.0, 1, 6, 5, 7]]), 1),
                                      [[5.0, 5, 6, 7, 7]])
        # at i = n/2 the two replacement values cross; the row mean is the median
        np.testing.assert_array_equal(winsorize_rows(np.array([[4.0, 1, 3, 2]]), 2),
                                      [[3.0, 3, 2, 2]])
        with pytest.raises(ConfigError):
            winsorize_rows(np.ones((1, 4)), 3)

    def test_trimmed_excludes_worst(self):
        fs = ForecastSet.from_columns({"a": [1.0, 2.0], "b": [3.0, 4.0], "c": [9.0, 9.0],
                                       "d": [5.0, 6.0], "e": [7.0, 8.0]})
        spec = fit_linear_combiner(linear.trimmed(20), fs, [1.0, 2.0], reports([1, 2, 9, 3, 4]))
        assert spec.excluded == ("c",)
        assert combine_pointwise(fs, spec).tolist() == [4.0, 5.0]

    def test_trim_excluding_everything(self):
        fs = self.fs([1.0, 2.0])
        spec = linear.LinearCombinerSpec("trimmed", 20.0, excluded=("m0", "m1"),
                                         names=("m0", "m1"))
        with pytest.raises(ConfigError):
            combine_pointwise(fs, spec)

    @pytest.mark.parametrize("k", [-1, 50, 75])
    def test_trim_bounds(self, k):
        with pytest.raises(ConfigError):
            linear.trimmed(k)

    @given(rows, st.randoms(use_true_random=False))
    def test_average_permutation_invariant(self, row, rnd):
        perm = list(range(len(row)))
        rnd.shuffle(perm)
        a = combine_pointwise(self.fs(row), linear.simple_average())[0]
        b = combine_pointwise(self.fs([row[i] for i in perm]), linear.simple_average())[0]
        assert a == pytest.approx(b, rel=1e-12, abs=1e-9)

    @given(rows)
    def test_median_between_extremes(self, row):
        m = combine_pointwise(self.fs(row), linear.median())[0]
        assert min(row) <= m <= max(row)


class TestErrorBased:
    def test_example(self):
        np.testing.assert_allclose(error_based_weights(reports([2.0, 4.0, 4.0])),
                                   [0.5, 0.25, 0.25], rtol=0, atol=1e-15)

    def test_equal_errors(self):
        np.testing.assert_allclose(error_based_weights(reports([3.0] * 4)), [0.25] * 4)

    def test_perfect_model(self):
        with pytest.raises(PerfectModelError) as info:
            error_based_weights(reports([1.0, 0.0, 2.0]))
        assert info.value.model_index == 1

    @given(st.lists(st.floats(0.01, 1e3), min_size=2, max_size=6), st.randoms(use_true_random=False))
    def test_sum_and_equivariance(self, errs, rnd):
        w = error_based_weights(reports(errs))
        assert np.all(w >= 0) and abs(w.sum() - 1.0) <= 1e-12
        perm = list(range(len(errs)))
        rnd.shuffle(perm)
        np.testing.assert_allclose(error_based_weights(reports([errs[i] for i in perm])),
                                   w[perm], rtol=1e-12)

    def test_fit_from_actuals(self):
        fs = ForecastSet.from_columns({"a": [1.1, 2.2], "b": [1.5, 2.0]})
        spec = fit_linear_combiner(linear.error_based("mape"), fs, [1.0, 2.0])
        expected = error_based_weights([evaluate([1.0, 2.0], fs.values[:, i]) for i in range(2)])
        np.testing.assert_allclose(spec.weights, expected)


class TestVarianceBased:
    def test_exact_column(self):
        fs, y = random_instance(1)
        fs = ForecastSet(np.column_stack([fs.values[:, :2], y]), ("a", "b", "c"))
        c, w = variance_based_weights(fs, y)
        np.testing.assert_allclose(w, [0.0, 0.0, 1.0], atol=1e-9)
        assert abs(c) < 1e-8

    def test_matches_gradient_free_minimizer(self):
        fs, y = random_instance(2)
        c, w = variance_based_weights(fs, y)
        A = np.column_stack([np.ones(len(y)), fs.values])
        res = minimize(lambda b: np.sum((y - A @ b) ** 2), np.zeros(4), method="Powell",
                       options={"xtol": 1e-12, "ftol": 1e-15, "maxfev": 100000})
        np.testing.assert_allclose(np.r_[c, w], res.x, rtol=1e-6, atol=1e-6)

    def test_translation_moves_intercept_only(self):
        fs, y = random_instance(3)
        c, w = variance_based_weights(fs, y)
        c2, w2 = variance_based_weights(fs, y + 7.5)
        assert c2 == pytest.approx(c + 7.5, rel=1e-9)
        np.testing.assert_allclose(w2, w, rtol=1e-8, atol=1e-10)

    def test_residuals_orthogonal(self):
        fs, y = random_instance(4)
        spec = fit_linear_combiner(linear.variance_based(), fs, y)
        r = y - combine_pointwise(fs, spec)
        A = np.column_stack([np.ones(len(y)), fs.values])
        assert np.max(np.abs(A.T @ r)) <= 1e-8 * len(y)

    def test_collinear(self):
        fs = ForecastSet.from_columns({"a": [1.0, 2, 3, 4], "b": [2.0, 4, 6, 8]})
        with pytest.raises(SingularityError):
            variance_based_weights(fs, [1.0, 2, 3, 5])


class TestDesign:
    def test_standardized_column(self):
        fs = ForecastSet.from_columns({"a": [2.0, 4.0], "b": [1.0, 0.0]})
        dm = build_design_matrices(fs, means=[3.0, 0.5], variances=[1.0, 0.25])
        np.testing.assert_array_equal(dm.G[:, 0], [-1.0 * 2.0, 1.0 * -2.0])
        np.testing.assert_array_equal(dm.F[:, 0], [1.0, 1.0])

    def test_shapes_and_pair_order(self):
        fs, _ = random_instance(0, N=14)
        means, variances = standardization_stats(fs)
        dm = build_design_matrices(fs, means, variances)
        assert dm.F.shape == (14, 4) and dm.G.shape == (14, 3)
        assert dm.pairs == ((0, 1), (1, 2), (2, 0))
        v = (fs.values - means) / variances
        for col, (i, j) in enumerate(dm.pairs):
            np.testing.assert_array_equal(dm.G[:, col], v[:, i] * v[:, j])
        assert model_pairs(4) == [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]

    def test_identical_columns_give_identical_cross_terms(self):
        col = [1.0, 3.0, 2.0, 5.0]
        fs = ForecastSet.from_columns({"a": col, "b": col, "c": col})
        dm = build_design_matrices(fs, *standardization_stats(fs))
        assert np.all(dm.G == dm.G[:, [0]])

    def test_zero_variance(self):
        fs = ForecastSet.from_columns({"a": [1.0, 1.0], "b": [1.0, 2.0]})
        with pytest.raises(DegenerateForecastError):
            build_design_matrices(fs, *standardization_stats(fs))

    def test_stddev_mode(self):
        fs = ForecastSet.from_columns({"a": [2.0, 4.0], "b": [0.0, 4.0]})
        dm = build_design_matrices(fs, [3.0, 2.0], [1.0, 4.0], mode="stddev")
        np.testing.assert_array_equal(dm.G[:, 0], [1.0, 1.0])


class TestFit:
    def test_exact_column_gives_zero_sse(self):
        fs, y = random_instance(5)
        fs = ForecastSet(np.column_stack([fs.values[:, :2], y]), ("a", "b", "c"))
        w = fit_nonlinear_ensemble(fs, y)
        assert w.validation_sse <= 1e-20 * float(y @ y)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_gradient_free_minimizer(self, seed):
        fs, y = random_instance(seed)
        w = fit_nonlinear_ensemble(fs, y)
        x, _ = brute_force_weights(fs, y)
        assert np.max(np.abs(x - w.vector)) <= 1e-6 * np.max(np.abs(w.vector))

    def test_matches_dense_least_squares(self):
        for seed in range(100):
            fs, y = random_instance(seed)
            w = fit_nonlinear_ensemble(fs, y)
            ref = dense_lstsq_weights(fs, y)
            assert np.max(np.abs(ref - w.vector)) <= 1e-8 * np.max(np.abs(ref)), seed

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 100_000), st.integers(10, 80))
    def test_stationarity_and_residual(self, seed, N):
        fs, y = random_instance(seed, N=N)
        w = fit_nonlinear_ensemble(fs, y)
        assert np.max(np.abs(sse_gradient(w, fs, y))) <= 1e-6
        assert w.residual_norm <= 1e-6 * np.max(np.abs(y))

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 100_000))
    def test_nesting(self, seed):
        fs, y = random_instance(seed, N=30)
        w = fit_nonlinear_ensemble(fs, y)
        tol = 1e-9 * max(1.0, w.validation_sse)
        rivals = [fs.values[:, i] for i in range(fs.n_models)]
        for spec in (linear.simple_average(), linear.error_based("mape"),
                     linear.variance_based()):
            rivals.append(combine_pointwise(fs, fit_linear_combiner(spec, fs, y)))
        for pred in rivals:
            assert w.validation_sse <= sse(y, pred) + tol

    def test_duplicate_columns(self):
        fs, y = random_instance(6)
        dup = ForecastSet(np.column_stack([fs.values[:, :2], fs.values[:, 0]]), ("a", "b", "c"))
        with pytest.raises(SingularityError, match="invertible"):
            fit_nonlinear_ensemble(dup, y)

    def test_ridge_fallback(self):
        fs, y = random_instance(7)
        dup = ForecastSet(np.column_stack([fs.values[:, :2], fs.values[:, 0]]), ("a", "b", "c"))
        w = fit_nonlinear_ensemble(dup, y, ridge=1e-8)
        assert w.ridge_applied and np.all(np.isfinite(w.vector))
        clean = fit_nonlinear_ensemble(fs, y, ridge=1e-8)
        assert not clean.ridge_applied

    def test_too_few_points(self):
        fs, y = random_instance(0, N=6)
        with pytest.raises(SizeError):
            fit_nonlinear_ensemble(fs, y)
        fs7, y7 = random_instance(0, N=7)
        assert fit_nonlinear_ensemble(fs7, y7).validation_sse <= 1e-12 * float(y7 @ y7)

    def test_frozen_statistics(self):
        fs, y = random_instance(8)
        w = fit_nonlinear_ensemble(fs, y)
        np.testing.assert_array_equal(w.means, fs.values.mean(axis=0))
        np.testing.assert_array_equal(w.variances, fs.values.var(axis=0))

    def test_general_n(self):
        fs, y = random_instance(9, N=40, n=4)
        w = fit_nonlinear_ensemble(fs, y)
        assert w.theta.size == 6
        np.testing.assert_allclose(w.vector, dense_lstsq_weights(fs, y), rtol=1e-8, atol=1e-10)


class TestPredict:
    def weights(self, theta=(1.0, 0.0, 0.0), linear_w=(1.0, 0.0, 0.0), names=("a", "b", "c")):
        return NonlinearEnsembleWeights(
            names=names, intercept=1.0, linear=np.array(linear_w),
            theta=np.array(theta), pairs=((0, 1), (1, 2), (2, 0)),
            means=np.array([3.0, 1.0, 0.0]), variances=np.array([1.0, 1.0, 1.0]))

    def test_worked_example(self):
        fs = ForecastSet([[5.0, 4.0, 7.0]], ("a", "b", "c"))
        assert predict_nonlinear(self.weights(), fs)[0] == 12.0

    def test_zero_theta_is_linear(self):
        fs, _ = random_instance(10)
        w = self.weights(theta=(0.0, 0.0, 0.0), linear_w=(0.2, 0.3, 0.5), names=fs.names)
        np.testing.assert_allclose(predict_nonlinear(w, fs),
                                   1.0 + fs.values @ np.array([0.2, 0.3, 0.5]), rtol=1e-14)

    def test_reproduces_fit_sse(self):
        fs, y = random_instance(11)
        w = fit_nonlinear_ensemble(fs, y)
        assert sse(y, predict_nonlinear(w, fs)) == pytest.approx(w.validation_sse, rel=1e-12)

    def test_alignment(self):
        fs = ForecastSet([[5.0, 4.0, 7.0]], ("a", "b", "x"))
        with pytest.raises(AlignmentError):
            predict_nonlinear(self.weights(), fs)

    def test_recompute_uses_new_statistics(self):
        fs, y = random_instance(12)
        w = fit_nonlinear_ensemble(fs, y)
        shifted = ForecastSet(fs.values + 3.0, fs.names)
        np.testing.assert_allclose(predict_nonlinear(w, shifted, "recompute"),
                                   predict_nonlinear(w, fs) + 3.0 * w.linear.sum(), rtol=1e-10)

    @pytest.mark.parametrize("perm", [(1, 2, 0), (2, 1, 0), (0, 2, 1)])
    def test_permutation_equivariance(self, perm):
        fs, y = random_instance(13)
        w = fit_nonlinear_ensemble(fs, y)
        names = tuple(fs.names[i] for i in perm)
        pfs = fs.reorder(names)
        pw = fit_nonlinear_ensemble(pfs, y)
        np.testing.assert_allclose(pw.linear, w.linear[list(perm)], rtol=1e-8)
        for key, t in w.theta_by_pair().items():
            assert pw.theta_by_pair()[key] == pytest.approx(t, rel=1e-8)
        np.testing.assert_allclose(predict_nonlinear(pw, pfs), predict_nonlinear(w, fs),
                                   rtol=1e-10)
        np.testing.assert_allclose(predict_nonlinear(w, pfs), predict_nonlinear(w, fs),
                                   rtol=1e-14)

    def test_text_dump(self):
        fs, y = random_instance(14)
        text = fit_nonlinear_ensemble(fs, y).to_text()
        assert "theta[m3*m1]" in text and "ridge_applied = False" in text
