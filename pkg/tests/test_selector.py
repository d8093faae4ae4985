import mpmath
import numpy as np
import pytest
from hypothesis import given, strategies as st

from bmtselect.errors import InvalidArgument
from bmtselect.regression import Dataset, ols_fit
from bmtselect.selector import (
    SelectionConfig,
    bmt_select,
    critical_value,
    ocmt_select,
    post_selection_estimate,
)
from bmtselect.simulation import DgpConfig, generate_dgp, generate_wedge


def mp_critical(p, n, delta, c=1.0):
    mpmath.mp.dps = 50
    tail = mpmath.mpf(p) / (2 * c * mpmath.mpf(n) ** delta)
    return float(-mpmath.sqrt(2) * mpmath.erfinv(2 * tail - 1))


def noise_dataset(seed, n=50, T=200):
    rng = np.random.default_rng(seed)
    return Dataset(rng.normal(size=T), None, rng.normal(size=(T, n)))


def noise_empty_floor(reps, n=50, T=200):
    """Lower 3-sigma binomial bound on the empty-selection count.

    The stage-1 statistic is Student t with T - 2 df, so the familywise
    rate at the normal-quantile threshold is slightly above p.
    """
    from scipy import stats

    c = critical_value(0.05, n, 1.0)
    q = (1 - 2 * stats.t.sf(c, T - 2)) ** n
    return reps * q - 3 * np.sqrt(reps * q * (1 - q))


class TestCriticalValue:
    def test_unit_quantile(self):
        assert critical_value(0.3173105, 1, 0.7) == pytest.approx(1.0, abs=1e-6)

    def test_reference_value(self):
        assert critical_value(0.05, 100, 1.0) == pytest.approx(3.4808, abs=1e-4)
        assert critical_value(0.05, 100, 1.0) == pytest.approx(mp_critical(0.05, 100, 1.0), abs=1e-9)

    @pytest.mark.parametrize("n", [1, 2, 10, 500, 10**4, 10**6])
    @pytest.mark.parametrize("p", [0.01, 0.05, 0.1])
    def test_matches_high_precision(self, n, p):
        assert critical_value(p, n, 1.0) == pytest.approx(mp_critical(p, n, 1.0), abs=1e-9)

    def test_monotone_in_n(self):
        assert critical_value(0.05, 200, 1.0) > critical_value(0.05, 100, 1.0)

    @given(st.floats(0.001, 0.5), st.integers(1, 10**5), st.floats(0.1, 2.0), st.floats(0.5, 3.0))
    def test_monotonicity(self, p, n, delta, c):
        base = critical_value(p, n, delta, c)
        # zero exactly when p = 2 c n^delta * 0.5, e.g. p = 0.5, c = 0.5, n = 1
        assert base >= 0
        assert critical_value(p, n + 1, delta, c) > base
        assert critical_value(p, n, delta, c * 1.5) > base
        assert critical_value(p * 0.9, n, delta, c) > base
        if n > 1:
            assert critical_value(p, n, delta + 0.1, c) > base

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5])
    def test_bad_p(self, p):
        with pytest.raises(InvalidArgument):
            critical_value(p, 10, 1.0)

    def test_argument_out_of_range(self):
        with pytest.raises(InvalidArgument):
            critical_value(0.9, 1, 1.0, c=0.1)


class TestConfig:
    def test_delta_star_default(self):
        assert SelectionConfig(delta=0.7).delta_star == 0.7

    def test_delta_star_below_delta(self):
        with pytest.raises(InvalidArgument):
            SelectionConfig(delta=1.0, delta_star=0.5)


class TestBmt:
    def test_pure_noise_mostly_empty(self):
        empty = sum(bmt_select(noise_dataset(s)).model_size == 0 for s in range(200))
        assert empty >= noise_empty_floor(200)
        assert empty >= 180

    def test_single_dominant_signal(self, rng):
        T = 200
        X = rng.normal(size=(T, 10))
        y = 2 * X[:, 0] + 0.1 * rng.normal(size=T)
        res = bmt_select(Dataset(y, None, X))
        assert res.selected == [0]
        assert res.n_stages == 1
        assert res.trace[-1].chosen is None or len(res.trace) == 1

    def test_wedge_design(self):
        hits = 0
        for s in range(200):
            ds = generate_wedge(2000, 0.2, 0.65, 0.5, np.random.default_rng(s))
            hits += sorted(bmt_select(ds).selected) == [0, 1]
        # the last stage tests x3 at Phi^-1(0.975), so misses run near 5%
        assert hits >= 180

    def test_trace_invariants(self):
        real = generate_dgp(DgpConfig(T=300, n=60, k=4, vif=4, pi=0.75, seed=3))
        res = bmt_select(real.dataset)
        assert len(set(res.selected)) == len(res.selected)
        assert res.model_size == res.n_stages
        seen = []
        for rec in res.trace:
            assert rec.conditioning == tuple(seen)
            abs_t = np.abs(rec.t_stats)
            if rec.chosen is not None:
                pos = rec.active_set.index(rec.chosen)
                assert abs_t[pos] > rec.threshold
                assert abs_t[pos] == abs_t.max()
                assert pos == int(np.argmax(abs_t))
                seen.append(rec.chosen)
            else:
                assert rec.passed_count == 0
        assert seen == res.selected

    def test_threshold_uses_active_count(self):
        real = generate_dgp(DgpConfig(T=300, n=60, k=4, seed=1))
        res = bmt_select(real.dataset)
        for rec in res.trace:
            assert rec.threshold == critical_value(0.05, len(rec.active_set), 1.0)
        fixed = bmt_select(real.dataset, SelectionConfig(shrink_n_per_stage=False))
        for rec in fixed.trace:
            assert rec.threshold == critical_value(0.05, 60, 1.0)

    def test_delta_star_later_stages(self):
        real = generate_dgp(DgpConfig(T=300, n=60, k=4, seed=1))
        res = bmt_select(real.dataset, SelectionConfig(delta=1.0, delta_star=1.5))
        assert res.trace[0].threshold == critical_value(0.05, 60, 1.0)
        assert res.trace[1].threshold == critical_value(0.05, 59, 1.5)

    def test_max_stages(self):
        real = generate_dgp(DgpConfig(T=300, n=60, k=4, seed=1))
        assert bmt_select(real.dataset, SelectionConfig(max_stages=2)).model_size == 2

    def test_tie_goes_to_lowest_index(self, rng):
        T = 100
        x = rng.normal(size=T)
        X = np.column_stack([rng.normal(size=T), x, x, rng.normal(size=T)])
        res = bmt_select(Dataset(x + 0.3 * rng.normal(size=T), None, X), SelectionConfig(max_stages=1))
        assert res.selected == [1]

    @given(st.integers(0, 2000), st.lists(st.floats(0.05, 20.0), min_size=12, max_size=12))
    def test_rescaling_invariance(self, seed, scales):
        real = generate_dgp(DgpConfig(T=120, n=12, k=2, vif=2, seed=seed, burn_in=20))
        ds = real.dataset
        signs = np.where(np.arange(12) % 3 == 0, -1.0, 1.0)
        scaled = Dataset(ds.y, ds.Z, ds.X * (np.array(scales) * signs))
        assert bmt_select(scaled).selected == bmt_select(ds).selected

    def test_coefficients_only_on_selected(self):
        real = generate_dgp(DgpConfig(T=300, n=40, k=3, seed=9))
        res = bmt_select(real.dataset)
        nz = set(np.flatnonzero(res.coefficients_full).tolist())
        assert nz <= set(res.selected)

    def test_predict_with_added_constant(self):
        real = generate_dgp(DgpConfig(T=200, n=20, k=2, seed=2))
        res = bmt_select(real.dataset)
        assert res.constant_added
        fitted = res.predict(real.dataset.Z, real.dataset.X)
        np.testing.assert_allclose(real.dataset.y - fitted, res.post_fit.residuals, atol=1e-10)


class TestOcmt:
    def test_pure_noise_mostly_empty(self):
        empty = sum(ocmt_select(noise_dataset(s)).model_size == 0 for s in range(200))
        assert empty >= noise_empty_floor(200)
        assert empty >= 180

    def test_signal_and_proxy(self):
        both_ocmt = both_bmt = 0
        for s in range(50):
            rng = np.random.default_rng(s)
            T = 300
            x1 = rng.normal(size=T)
            x2 = 0.8 * x1 + 0.6 * rng.normal(size=T)
            X = np.column_stack([x1, x2, rng.normal(size=(T, 8))])
            ds = Dataset(x1 + rng.normal(size=T), None, X)
            both_ocmt += {0, 1} <= set(ocmt_select(ds).selected)
            both_bmt += {0, 1} <= set(bmt_select(ds).selected)
        assert both_ocmt >= 45
        assert both_bmt <= 10

    def test_admits_all_passers_at_stage_one(self):
        real = generate_dgp(DgpConfig(T=300, n=60, k=4, vif=4, pi=0.75, seed=4))
        res = ocmt_select(real.dataset)
        rec = res.trace[0]
        passers = [i for i, t in zip(rec.active_set, rec.t_stats) if abs(t) > rec.threshold]
        assert list(rec.admitted) == passers
        assert rec.threshold == critical_value(0.05, 60, 1.0)

    def test_model_size_far_above_k(self):
        sizes = [
            ocmt_select(generate_dgp(DgpConfig(T=300, n=100, k=4, vif=4, pi=0.75, seed=s)).dataset).model_size
            for s in range(10)
        ]
        assert np.mean(sizes) > 40


class TestPostSelection:
    def test_empty_selection_mean_only(self, rng):
        y = rng.normal(size=30)
        ds = Dataset(y, np.ones((30, 1)), rng.normal(size=(30, 4)))
        post = post_selection_estimate(ds, [])
        np.testing.assert_array_equal(post.coefficients_full, 0.0)
        assert post.control_coefficients[0] == pytest.approx(y.mean())

    def test_noiseless_recovery(self, rng):
        X = rng.normal(size=(50, 6))
        y = 1.0 + X[:, [1, 4]] @ [2.0, -3.0]
        post = post_selection_estimate(Dataset(y, np.ones((50, 1)), X), [1, 4])
        np.testing.assert_allclose(post.coefficients_full, [0, 2, 0, 0, -3, 0], atol=1e-10)
        assert np.abs(post.vcov_selected).max() < 1e-20

    def test_matches_ols(self, rng):
        X = rng.normal(size=(80, 5))
        Z = np.column_stack([np.ones(80), rng.normal(size=80)])
        y = X[:, 2] + rng.normal(size=80)
        ds = Dataset(y, Z, X)
        post = post_selection_estimate(ds, [2, 0], robust=True)
        fit = ols_fit(y, np.column_stack([Z, X[:, [2, 0]]]), robust="HC1")
        assert post.coefficients_full[2] == fit.coefficients[2]
        assert post.coefficients_full[0] == fit.coefficients[3]
        np.testing.assert_array_equal(post.vcov_selected, fit.vcov[2:, 2:])
