import numpy as np
import pytest
from hypothesis import given, strategies as st

from bmtselect.errors import (
    DegenerateRegressor,
    DimensionMismatch,
    InsufficientColumns,
    NonFiniteInput,
    RankDeficient,
)
from bmtselect.regression import (
    T_CAP,
    Dataset,
    batch_conditional_t_stats,
    conditional_t_stat,
    first_principal_component,
    ols_fit,
    partial_out,
    power_iteration,
)


def normal_equations_fit(y, W):
    """Textbook oracle: (W'W)^-1 W'y with classical standard errors."""
    A = W.T @ W
    b = np.linalg.solve(A, W.T @ y)
    e = y - W @ b
    s2 = e @ e / (len(y) - W.shape[1])
    se = np.sqrt(s2 * np.diag(np.linalg.inv(A)))
    return b, se, b / se


class TestDataset:
    def test_properties(self, rng):
        ds = Dataset(rng.normal(size=10), rng.normal(size=(10, 2)), rng.normal(size=(10, 3)))
        assert (ds.T, ds.zeta, ds.n) == (10, 2, 3)
        assert ds.names == ("x1", "x2", "x3")

    def test_empty_controls(self, rng):
        ds = Dataset(rng.normal(size=5), None, rng.normal(size=(5, 2)))
        assert ds.zeta == 0

    def test_rejects_nonfinite(self, rng):
        X = rng.normal(size=(6, 2))
        X[2, 1] = np.nan
        with pytest.raises(NonFiniteInput):
            Dataset(rng.normal(size=6), None, X)

    def test_rejects_row_mismatch(self, rng):
        with pytest.raises(DimensionMismatch):
            Dataset(rng.normal(size=6), None, rng.normal(size=(5, 2)))

    def test_needs_residual_df(self, rng):
        with pytest.raises(DimensionMismatch):
            Dataset(rng.normal(size=3), rng.normal(size=(3, 2)), rng.normal(size=(3, 1)))

    def test_arrays_read_only(self, rng):
        ds = Dataset(rng.normal(size=5), None, rng.normal(size=(5, 2)))
        with pytest.raises(ValueError):
            ds.X[0, 0] = 1.0

    def test_with_constant_idempotent(self, rng):
        ds = Dataset(rng.normal(size=8), None, rng.normal(size=(8, 2))).with_constant()
        assert ds.z_names == ("const",)
        assert ds.with_constant() is ds


class TestOls:
    def test_exact_system(self, rng):
        W = rng.normal(size=(20, 2))
        fit = ols_fit(W @ np.array([1.0, 2.0]), W)
        np.testing.assert_allclose(fit.coefficients, [1.0, 2.0], atol=1e-12)
        np.testing.assert_allclose(fit.residuals, 0.0, atol=1e-12)
        assert fit.sigma2_hat == pytest.approx(0.0, abs=1e-20)

    def test_constant_fit(self):
        fit = ols_fit(np.ones(3), np.ones((3, 1)))
        assert fit.coefficients[0] == pytest.approx(1.0)
        assert fit.rss == pytest.approx(0.0, abs=1e-24)

    def test_matches_normal_equations(self):
        rng = np.random.default_rng(7)
        W = rng.normal(size=(50, 2))
        y = W @ [0.5, -1.0] + rng.normal(size=50)
        fit = ols_fit(y, W)
        b, se, t = normal_equations_fit(y, W)
        np.testing.assert_allclose(fit.coefficients, b, atol=1e-8)
        np.testing.assert_allclose(fit.se, se, atol=1e-8)
        np.testing.assert_allclose(fit.t_stats, t, atol=1e-8)
        assert fit.df == 48

    def test_residual_orthogonality(self, rng):
        W = rng.normal(size=(40, 4))
        y = rng.normal(size=40)
        fit = ols_fit(y, W)
        bound = 1e-8 * np.linalg.norm(W, axis=0) * np.linalg.norm(y)
        assert np.all(np.abs(W.T @ fit.residuals) < bound)

    def test_rank_deficient(self, rng):
        x = rng.normal(size=30)
        with pytest.raises(RankDeficient):
            ols_fit(rng.normal(size=30), np.column_stack([x, 2 * x]))

    def test_too_few_rows(self, rng):
        with pytest.raises(DimensionMismatch):
            ols_fit(rng.normal(size=3), rng.normal(size=(3, 3)))

    def test_hc_matches_sandwich(self, rng):
        W = np.column_stack([np.ones(60), rng.normal(size=60)])
        y = W @ [1.0, 2.0] + rng.normal(size=60) * (1 + np.abs(W[:, 1]))
        fit = ols_fit(y, W, robust="HC1")
        e = y - W @ fit.coefficients
        bread = np.linalg.inv(W.T @ W)
        v = bread @ (W.T * e ** 2) @ W @ bread * 60 / 58
        np.testing.assert_allclose(fit.vcov, v, rtol=1e-10)

    def test_t_is_coef_over_se(self, rng):
        fit = ols_fit(rng.normal(size=25), rng.normal(size=(25, 3)))
        np.testing.assert_allclose(fit.t_stats, fit.coefficients / fit.se)


class TestPartialOut:
    def test_empty_q(self, rng):
        x = rng.normal(size=10)
        np.testing.assert_array_equal(partial_out(x, np.empty((10, 0))), x)

    def test_in_span(self, rng):
        Q = rng.normal(size=(30, 3))
        assert np.linalg.norm(partial_out(Q @ [1.0, -2.0, 0.5], Q)) < 1e-8

    def test_projection_oracle(self):
        rng = np.random.default_rng(3)
        Q = rng.normal(size=(40, 3))
        x = rng.normal(size=40)
        expected = x - Q @ np.linalg.solve(Q.T @ Q, Q.T @ x)
        np.testing.assert_allclose(partial_out(x, Q), expected, atol=1e-8)

    def test_rank_deficient(self, rng):
        q = rng.normal(size=20)
        with pytest.raises(RankDeficient):
            partial_out(rng.normal(size=20), np.column_stack([q, q]))


class TestConditionalT:
    def test_matches_joint_ols(self):
        rng = np.random.default_rng(11)
        Q = np.column_stack([np.ones(100), rng.normal(size=(100, 2))])
        x = rng.normal(size=100) + 0.3 * Q[:, 1]
        y = 0.4 * x + Q @ [1.0, 0.5, 0.0] + rng.normal(size=100)
        joint = ols_fit(y, np.column_stack([Q, x])).t_stats[-1]
        assert conditional_t_stat(y, Q, x) == pytest.approx(joint, abs=1e-6)

    def test_exactly_orthogonal_gives_zero(self):
        T = 8
        y = np.array([1, -1, 1, -1, 1, -1, 1, -1], dtype=float)
        x = np.array([1, 1, -1, -1, 1, 1, -1, -1], dtype=float)
        assert conditional_t_stat(y, np.empty((T, 0)), x) == 0.0

    def test_pure_noise_small(self, rng):
        T = 500
        t = conditional_t_stat(rng.normal(size=T), np.ones((T, 1)), rng.normal(size=T))
        assert np.isfinite(t) and abs(t) < 5

    def test_perfect_fit_sentinel(self, rng):
        x = rng.normal(size=30)
        assert conditional_t_stat(2 * x, np.empty((30, 0)), x) == T_CAP

    def test_degenerate(self, rng):
        Q = rng.normal(size=(30, 2))
        with pytest.raises(DegenerateRegressor):
            conditional_t_stat(rng.normal(size=30), Q, Q @ [1.0, 1.0])

    @given(st.integers(0, 10_000), st.floats(0.1, 50.0), st.booleans())
    def test_scale_invariance(self, seed, a, flip):
        rng = np.random.default_rng(seed)
        Q = np.column_stack([np.ones(40), rng.normal(size=40)])
        x = rng.normal(size=40)
        y = 0.3 * x + rng.normal(size=40)
        a = -a if flip else a
        t1 = conditional_t_stat(y, Q, x)
        t2 = conditional_t_stat(y, Q, a * x)
        assert t2 == pytest.approx(np.sign(a) * t1, rel=1e-9, abs=1e-9)

    @given(st.integers(0, 10_000), st.integers(0, 4), st.integers(12, 80))
    def test_fwl_property(self, seed, q, T):
        rng = np.random.default_rng(seed)
        Q = rng.normal(size=(T, q))
        x = rng.normal(size=T) + (Q.sum(axis=1) * 0.5 if q else 0.0)
        y = rng.normal(size=T) + 0.2 * x
        joint = ols_fit(y, np.column_stack([Q, x])).t_stats[-1]
        fwl = conditional_t_stat(y, Q, x)
        assert abs(joint - fwl) < 1e-6 * (1 + abs(joint))


class TestBatch:
    def make(self, seed=5, n=20, T=120):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(T, n))
        y = X[:, 0] - 0.5 * X[:, 3] + rng.normal(size=T)
        return Dataset(y, np.ones((T, 1)), X)

    def test_empty_active(self):
        out = batch_conditional_t_stats(self.make(), [0], [])
        assert out.t_stats.size == 0

    def test_single_matches_scalar(self):
        ds = self.make()
        out = batch_conditional_t_stats(ds, [0], [3])
        Q = np.column_stack([ds.Z, ds.X[:, 0]])
        assert out.t_stats[0] == pytest.approx(conditional_t_stat(ds.y, Q, ds.X[:, 3]), abs=1e-12)

    def test_loop_oracle(self):
        ds = self.make()
        cond = [0, 3]
        active = [i for i in range(ds.n) if i not in cond]
        out = batch_conditional_t_stats(ds, cond, active)
        Q = np.column_stack([ds.Z, ds.X[:, cond]])
        loop = [ols_fit(ds.y, np.column_stack([Q, ds.X[:, i]])).t_stats[-1] for i in active]
        np.testing.assert_allclose(out.t_stats, loop, atol=1e-6)

    def test_degenerate_flagged_zero(self):
        ds = self.make()
        X = np.array(ds.X)
        X[:, 5] = 2.0 * X[:, 0]
        ds2 = Dataset(ds.y, ds.Z, X)
        out = batch_conditional_t_stats(ds2, [0], [5, 6])
        assert out.degenerate.tolist() == [True, False]
        assert out.t_stats[0] == 0.0

    def test_overlap_rejected(self):
        with pytest.raises(ValueError):
            batch_conditional_t_stats(self.make(), [1], [1, 2])


class TestPrincipalComponent:
    def test_identical_columns(self, rng):
        v = rng.normal(size=50)
        pc = first_principal_component(np.column_stack([v, v]))
        vs = (v - v.mean()) / v.std()
        np.testing.assert_allclose(pc, vs, atol=1e-10)
        assert pc.std() == pytest.approx(1.0)

    def test_sign_symmetric_pair(self, rng):
        v = rng.normal(size=50)
        pc = first_principal_component(np.column_stack([v, -v]))
        vs = (v - v.mean()) / v.std()
        assert abs(abs(np.corrcoef(pc, vs)[0, 1]) - 1.0) < 1e-10

    def test_eigen_oracle(self):
        rng = np.random.default_rng(50)
        f = rng.normal(size=50)
        X = rng.normal(size=(50, 5)) + np.outer(f, [1.0, 0.8, 0.6, 0.4, 0.2])
        Xs = (X - X.mean(0)) / X.std(0)
        C = Xs.T @ Xs / 50
        w, V = np.linalg.eigh(C)
        lam, v, _ = power_iteration(C)
        assert lam == pytest.approx(w[-1], abs=1e-6)
        assert abs(abs(v @ V[:, -1]) - 1.0) < 1e-6
        assert v @ C @ v == pytest.approx(w[-1], abs=1e-6)
        pc = first_principal_component(X)
        lead = V[:, -1] if V[np.argmax(np.abs(V[:, -1])), -1] > 0 else -V[:, -1]
        ref = Xs @ lead
        np.testing.assert_allclose(pc, ref / ref.std(), atol=1e-6)

    def test_largest_loading_positive(self, rng):
        X = rng.normal(size=(40, 4)) + rng.normal(size=(40, 1))
        pc = first_principal_component(X)
        Xs = (X - X.mean(0)) / X.std(0)
        loadings = Xs.T @ pc
        assert loadings[np.argmax(np.abs(loadings))] > 0

    def test_needs_two_columns(self, rng):
        with pytest.raises(InsufficientColumns):
            first_principal_component(rng.normal(size=(10, 1)))
