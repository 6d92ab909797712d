"""Exact posterior tests against dense-solve oracles.

Every incremental quantity (mean, covariance, log-det accumulator) is
compared with a from-scratch dense computation in conftest, for all
three kernel variants and both the fast and general code paths.  The
battery also covers the Cholesky block-append helper, the rebuild
cadence, the covariance eigenvalue clamp, and the predictive-variance
geometry used by the regret analysis.
"""

import numpy as np
import pytest
import scipy.linalg as la
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import dense_logdet, dense_posterior_cov, dense_posterior_mean, random_icm
from mtbandit import kernels, posterior

ETA = 0.1


def _fit(kern, X, Y, **kwargs):
    state = posterior.PosteriorState(kern, ETA, **kwargs)
    for x, y in zip(X, Y):
        state.update(x, y)
    return state


def _variants(rng):
    n = 3
    return [
        random_icm(rng, n=n),
        kernels.DiagonalKernel([kernels.SquaredExponential(0.4)] * n),
        kernels.SumSeparableKernel(
            [
                (kernels.SquaredExponential(0.3), kernels.omega_coupling(0.5, n)),
                (kernels.Matern52(0.6), kernels.gram_coupling(n, rng)),
            ]
        ),
    ]


class TestAppendCholesky:
    def test_grows_factor_blockwise(self):
        rng = np.random.default_rng(0)
        A = rng.normal(size=(9, 9))
        M = A @ A.T + 9 * np.eye(9)
        L_full = la.cholesky(M, lower=True)
        L = la.cholesky(M[:6, :6], lower=True)
        grown = posterior.append_cholesky(L, M[:6, 6:], M[6:, 6:])
        np.testing.assert_allclose(grown, L_full, atol=1e-10)


class TestPriorState:
    def test_empty_posterior_is_prior(self):
        rng = np.random.default_rng(1)
        for kern in _variants(rng):
            state = posterior.PosteriorState(kern, ETA)
            x = rng.random(2)
            np.testing.assert_allclose(state.mean(x), np.zeros(kern.n), atol=1e-15)
            np.testing.assert_allclose(state.cov(x), kern(x, x), atol=1e-12)
            assert state.logdet_sum == 0.0
            assert state.t == 0


class TestDenseOracleAgreement:
    @pytest.mark.parametrize("variant", [0, 1, 2])
    def test_mean_and_cov_match_dense(self, variant):
        rng = np.random.default_rng(2 + variant)
        kern = _variants(rng)[variant]
        X = rng.random((12, 2))
        Y = rng.normal(size=(12, kern.n))
        Xq = rng.random((7, 2))
        state = _fit(kern, X, Y)
        np.testing.assert_allclose(
            state.mean_batch(Xq), dense_posterior_mean(kern, X, Y, ETA, Xq), atol=1e-9
        )
        for xq in Xq:
            np.testing.assert_allclose(
                state.cov(xq), dense_posterior_cov(kern, X, Y, ETA, xq), atol=1e-9
            )

    def test_logdet_matches_dense(self):
        rng = np.random.default_rng(6)
        for kern in _variants(rng):
            X = rng.random((10, 2))
            Y = rng.normal(size=(10, kern.n))
            state = _fit(kern, X, Y)
            assert state.logdet_sum == pytest.approx(dense_logdet(kern, X, ETA), rel=1e-10)

    @settings(max_examples=15, deadline=None)
    @given(st.integers(0, 10_000), st.integers(1, 8))
    def test_logdet_telescoping_property(self, seed, t):
        """The per-round block increments sum to the joint log-det."""
        rng = np.random.default_rng(seed)
        kern = random_icm(rng, n=2)
        X = rng.random((t, 2))
        Y = rng.normal(size=(t, 2))
        state = _fit(kern, X, Y)
        assert state.logdet_sum == pytest.approx(dense_logdet(kern, X, ETA), rel=1e-8)


class TestFastPaths:
    def test_icm_fast_equals_general(self):
        rng = np.random.default_rng(7)
        kern = random_icm(rng, n=3)
        X = rng.random((25, 2))
        Y = rng.normal(size=(25, 3))
        Xq = rng.random((30, 2))
        fast = _fit(kern, X, Y, fast_path=True)
        general = _fit(kern, X, Y, fast_path=False)
        np.testing.assert_allclose(fast.mean_batch(Xq), general.mean_batch(Xq), atol=1e-10)
        np.testing.assert_allclose(
            fast.cov_norm_batch(Xq), general.cov_norm_batch(Xq), atol=1e-10
        )
        for xq in Xq[:5]:
            np.testing.assert_allclose(fast.cov(xq), general.cov(xq), atol=1e-10)
        assert fast.logdet_sum == pytest.approx(general.logdet_sum, rel=1e-10)

    def test_repeated_coupling_eigenvalues_are_grouped(self):
        """An omega coupling has n-1 equal eigenvalues: one shared solve."""
        rng = np.random.default_rng(8)
        kern = random_icm(rng, n=4, omega=0.3)
        X = rng.random((10, 1))
        Y = rng.normal(size=(10, 4))
        fast = _fit(kern, X, Y, fast_path=True)
        general = _fit(kern, X, Y, fast_path=False)
        Xq = rng.random((5, 1))
        np.testing.assert_allclose(fast.mean_batch(Xq), general.mean_batch(Xq), atol=1e-10)

    def test_rank_deficient_coupling(self):
        """omega = 0 zeroes n-1 eigendirections; they are skipped analytically."""
        rng = np.random.default_rng(9)
        kern = random_icm(rng, n=3, omega=0.0)
        X = rng.random((8, 1))
        Y = rng.normal(size=(8, 3))
        state = _fit(kern, X, Y)
        xq = rng.random(1)
        np.testing.assert_allclose(
            state.mean(xq), dense_posterior_mean(kern, X, Y, ETA, xq)[0], atol=1e-9
        )
        np.testing.assert_allclose(
            state.cov(xq), dense_posterior_cov(kern, X, Y, ETA, xq), atol=1e-9
        )

    def test_diagonal_fast_matches_dense(self):
        rng = np.random.default_rng(10)
        kern = kernels.DiagonalKernel(
            [kernels.SquaredExponential(0.3), kernels.Matern52(0.5)]
        )
        X = rng.random((15, 2))
        Y = rng.normal(size=(15, 2))
        state = _fit(kern, X, Y)
        Xq = rng.random((6, 2))
        np.testing.assert_allclose(
            state.mean_batch(Xq), dense_posterior_mean(kern, X, Y, ETA, Xq), atol=1e-9
        )

    def test_fast_path_rejects_unsupported_kernel(self):
        rng = np.random.default_rng(11)
        kern = kernels.SumSeparableKernel(
            [(kernels.SquaredExponential(0.4), kernels.omega_coupling(0.5, 2))]
        )
        with pytest.raises(TypeError, match="fast path"):
            posterior.PosteriorState(kern, ETA, fast_path=True)

    def test_icm_helper_accessors(self):
        rng = np.random.default_rng(12)
        kern = random_icm(rng, n=2)
        X = rng.random((5, 1))
        Y = rng.normal(size=(5, 2))
        state = _fit(kern, X, Y)
        xq = rng.random(1)
        np.testing.assert_allclose(
            posterior.icm_posterior_mean(state, xq), state.mean(xq), atol=1e-12
        )
        assert posterior.icm_posterior_cov_norm(state, xq) == pytest.approx(
            state.cov_norm(xq), abs=1e-12
        )
        diag = _fit(
            kernels.DiagonalKernel([kernels.SquaredExponential(0.3)] * 2), X, Y
        )
        with pytest.raises(TypeError):
            posterior.icm_posterior_mean(diag, xq)


class TestRebuildCadence:
    def test_long_run_crosses_rebuild(self):
        """Past REBUILD_EVERY updates the factors are rebuilt from scratch;
        the posterior must stay oracle-exact across the boundary."""
        assert posterior.REBUILD_EVERY == 64
        rng = np.random.default_rng(13)
        kern = kernels.SumSeparableKernel(
            [(kernels.SquaredExponential(0.5), kernels.omega_coupling(0.6, 2))]
        )
        t = posterior.REBUILD_EVERY + 6
        X = rng.random((t, 1))
        Y = rng.normal(size=(t, 2))
        state = _fit(kern, X, Y)
        xq = rng.random(1)
        np.testing.assert_allclose(
            state.mean(xq), dense_posterior_mean(kern, X, Y, ETA, xq)[0], atol=1e-8
        )
        assert state.logdet_sum == pytest.approx(dense_logdet(kern, X, ETA), rel=1e-8)


class TestCovarianceGeometry:
    def test_cov_norm_clamped_to_prior_bound(self):
        """0 <= ||Gamma_t(x, x)|| <= kappa at every query."""
        rng = np.random.default_rng(14)
        kern = random_icm(rng, n=3)
        state = posterior.PosteriorState(kern, ETA)
        for _ in range(20):
            state.update(rng.random(2), rng.normal(size=3))
        norms = state.cov_norm_batch(rng.random((50, 2)))
        assert np.all(norms >= 0.0)
        assert np.all(norms <= kern.kappa + 1e-12)

    def test_posterior_cov_is_psd(self):
        rng = np.random.default_rng(15)
        kern = random_icm(rng, n=3)
        state = posterior.PosteriorState(kern, ETA)
        for _ in range(15):
            state.update(rng.random(2), rng.normal(size=3))
        for xq in rng.random((10, 2)):
            assert np.linalg.eigvalsh(state.cov(xq)).min() >= -1e-10

    def test_variance_shrinks_and_inflation_bound(self):
        """Gamma_{t-1} - Gamma_t and (1 + kappa/eta) Gamma_t - Gamma_{t-1}
        are both PSD up to roundoff at every step."""
        rng = np.random.default_rng(16)
        kern = random_icm(rng, n=2)
        state = posterior.PosteriorState(kern, ETA)
        queries = rng.random((10, 2))
        factor = 1.0 + kern.kappa / ETA
        prev = [state.cov(xq) for xq in queries]
        for _ in range(15):
            state.update(rng.random(2), rng.normal(size=2))
            for j, xq in enumerate(queries):
                cur = state.cov(xq)
                assert np.linalg.eigvalsh(prev[j] - cur).min() >= -1e-9
                assert np.linalg.eigvalsh(factor * cur - prev[j]).min() >= -1e-9
                prev[j] = cur

    def test_trace_inequality(self):
        """(1/eta) sum_s Tr(Gamma_s(x_s, x_s)) <= logdet_sum + 1e-8."""
        rng = np.random.default_rng(17)
        for kern in _variants(rng):
            state = posterior.PosteriorState(kern, ETA)
            trace_sum = 0.0
            for _ in range(12):
                x = rng.random(2)
                state.update(x, rng.normal(size=kern.n))
                trace_sum += float(np.trace(state.cov(x)))
            assert trace_sum / ETA <= state.logdet_sum + 1e-8


class TestValidation:
    def test_wrong_output_dimension(self):
        rng = np.random.default_rng(18)
        state = posterior.PosteriorState(random_icm(rng, n=3), ETA)
        with pytest.raises(ValueError, match="tasks"):
            state.update(rng.random(2), np.zeros(2))

    def test_eta_must_be_positive(self):
        rng = np.random.default_rng(19)
        with pytest.raises(ValueError, match="eta"):
            posterior.PosteriorState(random_icm(rng), 0.0)

    def test_batch_consistency(self):
        rng = np.random.default_rng(20)
        kern = random_icm(rng, n=2)
        state = _fit(kern, rng.random((8, 2)), rng.normal(size=(8, 2)))
        Xq = rng.random((5, 2))
        means = state.mean_batch(Xq)
        norms = state.cov_norm_batch(Xq)
        for i, xq in enumerate(Xq):
            np.testing.assert_allclose(means[i], state.mean(xq), atol=1e-12)
            assert norms[i] == pytest.approx(state.cov_norm(xq), abs=1e-12)
